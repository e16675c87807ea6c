"""Bayesian model averaging over all regressor subsets under a Zellner g-prior.

Every model contains an intercept (flat prior) and any always-included
regressors; the error scale has the improper prior ``p(sigma) ~ 1/sigma``;
the candidate coefficients get ``beta | sigma ~ N(0, sigma^2 G (X'X)^{-1})``
on the centered (and fixed-regressor-partialled) design.  ``G`` is the prior
variance scale: ``G = max(N, K^2)`` is the BRIC rule, whose precision-form
statement is ``g = 1 / max(N, K^2)``; both give shrinkage ``G / (1 + G)``.

With ``m = N - 1 - (number of always-included regressors)`` degrees of
freedom, the Bayes factor of model ``j`` against the null model is::

    log BF_j = (m - k_j)/2 * log(1 + G) - m/2 * log(1 + G (1 - R2_j))

and, conditional on model ``j``, the coefficients are Student-t with mean
``delta * b_OLS`` and covariance
``delta * TSS (1 - delta R2_j) / (m - 2) * (X_j'X_j)^{-1}``,
``delta = G / (1 + G)``.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betaln, gammaln

from . import _kernels as kern
from .errors import ConfigurationError, InsufficientDataError

logger = logging.getLogger(__name__)

RANK_TOL = 1e-10
EXHAUSTIVE_CAP = 25


@dataclass(frozen=True)
class SufficientStats:
    """Cross-moments of ``[1, fixed regressors, candidates]`` and ``y``.

    ``xtx``/``xty``/``yty`` are raw (uncentered) moments.  ``sxx``/``sxy``
    and ``tss`` are the same moments about the means, accumulated from
    centered data so that nothing downstream suffers cancellation.
    """

    n: int
    names: tuple
    fixed_names: tuple
    xtx: np.ndarray
    xty: np.ndarray
    yty: float
    ybar: float
    tss: float
    means: np.ndarray
    sxx: np.ndarray
    sxy: np.ndarray

    @property
    def k(self):
        return len(self.names)

    @property
    def constant_response(self):
        return self.tss <= 0.0


def compute_sufficient_stats(dyads, names=None, fixed=None):
    """Sufficient statistics of a :class:`~dyadbma.dyads.DyadTable`.

    ``names``/``fixed`` default to the table's candidate and always-included
    regressors.  Raises :class:`InsufficientDataError` unless ``N > K + 3``.
    """
    names = tuple(dyads.candidate_names if names is None else names)
    fixed = tuple(dyads.fixed_names if fixed is None else fixed)
    cols = [dyads.names.index(n) for n in fixed + names]
    X = dyads.x[:, cols]
    return stats_from_arrays(X[:, len(fixed):], dyads.y, names,
                             X[:, :len(fixed)], fixed)


def stats_from_arrays(X, y, names=None, F=None, fixed_names=()):
    """Sufficient statistics from raw arrays (candidates ``X``, fixed ``F``)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n = y.size
    if X.ndim == 1:
        X = X[:, None]
    X = X.reshape(n, -1)
    F = np.empty((n, 0)) if F is None else np.asarray(F, dtype=float).reshape(n, -1)
    names = tuple(names) if names is not None else tuple(f"x{h}" for h in range(X.shape[1]))
    fixed_names = tuple(fixed_names)
    if len(names) != X.shape[1] or len(fixed_names) != F.shape[1]:
        raise ConfigurationError("names do not match the number of columns")
    K = X.shape[1]
    if n == 0:
        raise InsufficientDataError("no observations")
    if n <= K + F.shape[1] + 3:
        raise InsufficientDataError(
            f"N={n} observations but {K} candidates: need N > K + 3 "
            "(posterior moments need N - 3 > k degrees of freedom)"
        )
    Z = np.hstack([F, X])
    means = Z.mean(axis=0)
    ybar = float(y.mean())
    Zc = Z - means
    yc = y - ybar
    sxx = Zc.T @ Zc
    sxx = 0.5 * (sxx + sxx.T)
    sxy = Zc.T @ yc
    tss = float(yc @ yc)
    D = np.hstack([np.ones((n, 1)), Z])
    return SufficientStats(
        n=n,
        names=names,
        fixed_names=fixed_names,
        xtx=D.T @ D,
        xty=D.T @ y,
        yty=float(y @ y),
        ybar=ybar,
        tss=tss,
        means=means,
        sxx=sxx,
        sxy=sxy,
    )


@dataclass(frozen=True)
class _Prepared:
    """Candidates after partialling out fixed regressors, on the correlation scale."""

    C: np.ndarray
    c: np.ndarray
    scale: np.ndarray
    tss: float
    dof: float


def _prepare(stats):
    f = len(stats.fixed_names)
    A = stats.sxx[f:, f:]
    b = stats.sxy[f:]
    t = stats.tss
    if f:
        Sff = stats.sxx[:f, :f]
        Sfc = stats.sxx[:f, f:]
        sfy = stats.sxy[:f]
        try:
            L = np.linalg.cholesky(Sff)
        except np.linalg.LinAlgError:
            raise ConfigurationError("always-included regressors are collinear") from None
        W = np.linalg.solve(L, Sfc)
        w = np.linalg.solve(L, sfy)
        A = A - W.T @ W
        b = b - W.T @ w
        t = t - float(w @ w)
        A = 0.5 * (A + A.T)
    d = np.diag(A).copy()
    # constant columns keep scale 1 and a zero row, so they can never enter
    degenerate = d <= 1e-300
    scale = np.where(degenerate, 1.0, np.sqrt(np.where(degenerate, 1.0, d)))
    C = A / np.outer(scale, scale)
    C[degenerate, :] = 0.0
    C[:, degenerate] = 0.0
    if t <= 0.0 or stats.tss <= 0.0:
        t = 0.0
        c = np.zeros_like(b)
    else:
        c = b / (scale * math.sqrt(t))
        c[degenerate] = 0.0
    return _Prepared(np.ascontiguousarray(C), np.ascontiguousarray(c), scale, float(t),
                     float(stats.n - 1 - f))


@dataclass(frozen=True)
class PriorSpec:
    """Model-space prior and g rule.

    ``model_prior`` is ``"uniform"``, ``"fixed"`` (common inclusion
    probability ``mbar / K``) or ``"random"`` (binomial-beta with prior mean
    model size ``mbar``).  ``g`` is ``"bric"``, ``"uip"`` or a positive number.
    ``mbar=None`` means ``K / 2``.
    """

    model_prior: str = "uniform"
    mbar: float | None = None
    g: object = "bric"

    def __post_init__(self):
        mp = str(self.model_prior).lower()
        mp = {"binomial-beta": "random", "binomialbeta": "random", "fixedtheta": "fixed"}.get(mp, mp)
        if mp not in ("uniform", "fixed", "random"):
            raise ConfigurationError(f"unknown model prior {self.model_prior!r}")
        object.__setattr__(self, "model_prior", mp)
        g = self.g
        if isinstance(g, str):
            gl = g.lower()
            if gl.startswith("fixed:"):
                g = float(gl.split(":", 1)[1])
            elif gl not in ("bric", "uip"):
                raise ConfigurationError(f"unknown g rule {self.g!r}")
            else:
                g = gl
        if not isinstance(g, str):
            g = float(g)
            if not g > 0 or not math.isfinite(g):
                raise ConfigurationError(f"fixed g must be positive, got {g}")
        object.__setattr__(self, "g", g)

    def resolved_mbar(self, K):
        if self.model_prior == "uniform":
            return None
        mbar = K / 2.0 if self.mbar is None else float(self.mbar)
        if not 0.0 < mbar < K:
            raise ConfigurationError(f"prior mean model size must lie in (0, {K}), got {mbar}")
        return mbar

    def label(self):
        if self.model_prior == "uniform":
            return "uniform"
        mb = "K/2" if self.mbar is None else f"{self.mbar:g}"
        return f"{self.model_prior}(mbar={mb})"

    def g_label(self):
        return self.g if isinstance(self.g, str) else f"fixed:{self.g:g}"


def g_value(rule, n, k):
    """Prior variance scale ``G``: BRIC ``max(N, K^2)``, UIP ``N``, or a fixed value."""
    if isinstance(rule, PriorSpec):
        rule = rule.g
    if isinstance(rule, str):
        r = rule.lower()
        if r == "bric":
            return float(max(n, k * k))
        if r == "uip":
            return float(n)
        if r.startswith("fixed:"):
            rule = float(r.split(":", 1)[1])
        else:
            raise ConfigurationError(f"unknown g rule {rule!r}")
    G = float(rule)
    if not G > 0:
        raise ConfigurationError("G must be positive")
    return G


def log_prior_by_size(prior, K):
    """Log prior probability of one model of each size ``0..K`` (normalized)."""
    size = np.arange(K + 1, dtype=float)
    if prior.model_prior == "uniform":
        return np.full(K + 1, -K * math.log(2.0))
    mbar = prior.resolved_mbar(K)
    if prior.model_prior == "fixed":
        theta = mbar / K
        return size * math.log(theta) + (K - size) * math.log1p(-theta)
    a = 1.0
    b = (K - mbar) / mbar
    return gammaln(a + size) + gammaln(b + K - size) - gammaln(a + b + K) - betaln(a, b)


def log_model_prior(model, prior, K):
    """Log prior probability of the model with bitmask ``model``."""
    return float(log_prior_by_size(prior, K)[bin(int(model)).count("1")])


def _check_mask(mask, K):
    mask = int(mask)
    if not 0 <= mask < (1 << K):
        raise ConfigurationError(f"model mask {mask} out of range for K={K}")
    return mask


def model_r2(stats, model):
    """``(R^2, effective rank)`` of one model from a fresh factorization."""
    prep = _prepare(stats)
    mask = _check_mask(model, stats.k)
    R, z, order, inact, state = kern.fit_mask(prep.C, prep.c, np.int64(mask), RANK_TOL)
    k = int(state[0])
    if state[1]:
        logger.warning("model %s is rank deficient: effective rank %d of %d",
                       format(mask, "b"), k, bin(mask).count("1"))
    return float(kern.r_squared(z, k)), k


def log_bayes_factor(stats, model, G):
    """Log Bayes factor of ``model`` against the intercept-only model."""
    prep = _prepare(stats)
    r2, k = model_r2(stats, model)
    return float(kern.log_bf(r2, k, prep.dof, math.log1p(G), float(G)))


def conditional_posterior_moments(stats, model, G):
    """Posterior mean vector and covariance of the selected coefficients.

    Returned in the order of increasing regressor index.  Rank-deficient
    selections use the minimum-norm fit on unit-variance regressors.
    """
    prep = _prepare(stats)
    mask = _check_mask(model, stats.k)
    idx = [h for h in range(stats.k) if (mask >> h) & 1]
    if not idx:
        return np.zeros(0), np.zeros((0, 0))
    Cs = prep.C[np.ix_(idx, idx)]
    cs = prep.c[idx]
    R, z, order, inact, state = kern.fit_mask(prep.C, prep.c, np.int64(mask), RANK_TOL)
    if state[1] == 0:
        P = np.linalg.inv(Cs)
    else:
        w, V = np.linalg.eigh(Cs)
        keep = w > 1e-10 * max(w.max(), 1e-300)
        P = (V[:, keep] / w[keep]) @ V[:, keep].T
    P = 0.5 * (P + P.T)
    beta = P @ cs
    r2 = min(float(beta @ cs), 1.0)
    delta = G / (1.0 + G)
    s = prep.scale[idx]
    mean = delta * beta * math.sqrt(prep.tss) / s
    cov = delta * prep.tss * (1.0 - delta * r2) / (prep.dof - 2.0) * P / np.outer(s, s)
    return mean, cov


@dataclass
class BmaResult:
    names: tuple
    pip: np.ndarray
    post_mean: np.ndarray
    post_sd: np.ndarray
    log_evidence: float
    top_models: list
    prior: PriorSpec
    g: float
    n: int
    k: int
    method: str = "exhaustive"
    model_probs: np.ndarray | None = None
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    def mask_names(self, mask):
        return [n for h, n in enumerate(self.names) if (mask >> h) & 1]


def _tree_reduce(items, combine):
    items = list(items)
    while len(items) > 1:
        nxt = [combine(items[a], items[a + 1]) for a in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            nxt.append(items[-1])
        items = nxt
    return items[0]


def _lse_pair(p, q):
    (m1, s1), (m2, s2) = p, q
    if m1 == -math.inf:
        return q
    if m2 == -math.inf:
        return p
    if m1 >= m2:
        return m1, s1 + s2 * math.exp(m2 - m1)
    return m2, s2 + s1 * math.exp(m1 - m2)


def _shards(K, shard_bits):
    s = min(K, shard_bits)
    length = 1 << (K - s)
    return [(a * length, length) for a in range(1 << s)]


def _map(fn, items, workers):
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def enumerate_bma(stats, prior=PriorSpec(), top=10, workers=1, cap=EXHAUSTIVE_CAP,
                  keep_model_probs=False, shard_bits=6):
    """Exhaustive BMA over all ``2^K`` candidate subsets.

    Models are visited in Gray-code order so consecutive models differ by
    one regressor and the factorization is updated, not rebuilt.  The
    index space is cut into ``2^shard_bits`` fixed segments; ``workers``
    only decides how many run at once, so results are bit-identical for
    any worker count.

    A first pass computes the log normalizing constant; a second pass
    accumulates inclusion probabilities and coefficient moments, with the
    posterior variance from the law of total variance (excluded
    coefficients are a point mass at zero).
    """
    K = stats.k
    if K > cap:
        raise ConfigurationError(
            f"K={K} exceeds the exhaustive cap of {cap}; use mc3_bma for larger problems"
        )
    t0 = time.perf_counter()
    prep = _prepare(stats)
    G = g_value(prior.g, stats.n, K)
    lp = log_prior_by_size(prior, K)
    shards = _shards(K, shard_bits)
    n_models = 1 << K
    lw_all = np.full(n_models if keep_model_probs else 0, -np.inf)
    empty = np.zeros(0)

    def pass1(shard):
        start, length = shard
        top_lw = np.full(top, -np.inf)
        top_mask = np.full(top, np.iinfo(np.int64).max, dtype=np.int64)
        mx, acc = kern.walk_evidence(prep.C, prep.c, prep.dof, G, lp, RANK_TOL,
                                     start, length, top_lw, top_mask, lw_all, empty)
        return (mx, acc), top_lw, top_mask

    res1 = _map(pass1, shards, workers)
    mx, acc = _tree_reduce([r[0] for r in res1], _lse_pair)
    log_z = mx + math.log(acc)

    def pass2(shard):
        start, length = shard
        tot = np.zeros(1)
        inc = np.zeros(K)
        m1 = np.zeros(K)
        m2 = np.zeros(K)
        kern.walk_moments(prep.C, prep.c, prep.tss, prep.dof, G, lp, RANK_TOL, prep.scale,
                          start, length, log_z, tot, inc, m1, m2)
        return np.concatenate([tot, inc, m1, m2])

    acc2 = _tree_reduce(_map(pass2, shards, workers), lambda a, b: a + b)
    total = acc2[0]
    pip = acc2[1:1 + K]
    m1 = acc2[1 + K:1 + 2 * K]
    m2 = acc2[1 + 2 * K:]
    post_mean = m1
    post_var = np.maximum(m2 - post_mean ** 2, 0.0)
    if abs(total - 1.0) > 1e-8:
        logger.warning("posterior mass sums to %.15g", total)

    cand = []
    for _, tl, tm in res1:
        cand.extend((float(a), int(b)) for a, b in zip(tl, tm) if a > -np.inf)
    cand.sort(key=lambda p: (-p[0], p[1]))
    top_models = [(mask, math.exp(lw - log_z)) for lw, mask in cand[:top]]

    result = BmaResult(
        names=stats.names,
        pip=pip,
        post_mean=post_mean,
        post_sd=np.sqrt(post_var),
        log_evidence=log_z,
        top_models=top_models,
        prior=prior,
        g=G,
        n=stats.n,
        k=K,
        method="exhaustive",
        model_probs=np.exp(lw_all - log_z) if keep_model_probs else None,
        wall_time=time.perf_counter() - t0,
        extra={"posterior_mass": float(total), "fixed": stats.fixed_names},
    )
    return result


def sweep_r2(stats, shard_bits=0):
    """R^2 of every model from one incremental Gray-code sweep, indexed by mask."""
    prep = _prepare(stats)
    K = stats.k
    G = g_value("bric", stats.n, K)
    lp = np.zeros(K + 1)
    r2 = np.full(1 << K, np.nan)
    for start, length in _shards(K, shard_bits):
        kern.walk_evidence(prep.C, prep.c, prep.dof, G, lp, RANK_TOL, start, length,
                           np.zeros(0), np.zeros(0, dtype=np.int64), np.zeros(0), r2)
    return r2


def mc3_bma(stats, prior=PriorSpec(), steps=100_000, burn_in=10_000, seed=0, top=10,
            start_mask=0):
    """Metropolis model-composition sampler over the model space.

    Each step toggles one uniformly chosen regressor.  PIPs are visit
    frequencies after burn-in; coefficient moments average the conditional
    posterior moments of the visited models.  ``steps`` counts the
    post-burn-in draws.
    """
    if steps <= 0 or burn_in < 0:
        raise ConfigurationError("chain length must exceed burn-in")
    t0 = time.perf_counter()
    K = stats.k
    if K == 0:
        raise ConfigurationError("no candidate regressors")
    prep = _prepare(stats)
    G = g_value(prior.g, stats.n, K)
    log1pG = math.log1p(G)
    lp = log_prior_by_size(prior, K)
    rng = np.random.Generator(np.random.PCG64(seed))
    cache = {}

    def evaluate(mask):
        hit = cache.get(mask)
        if hit is not None:
            return hit
        R, z, order, inact, state = kern.fit_mask(prep.C, prep.c, np.int64(mask), RANK_TOL)
        k = int(state[0])
        r2 = kern.r_squared(z, k)
        lw = float(kern.log_bf(r2, k, prep.dof, log1pG, G) + lp[bin(mask).count("1")])
        mean = np.zeros(K)
        var = np.zeros(K)
        if mask:
            kern.coef_moments(prep.C, prep.c, R, z, order, state, prep.tss, prep.dof, G,
                              prep.scale, mean, var)
        hit = (lw, mean, var + mean * mean)
        cache[mask] = hit
        return hit

    mask = _check_mask(start_mask, K)
    cur = evaluate(mask)
    total = burn_in + steps
    flips = rng.integers(0, K, size=total)
    logu = np.log(rng.random(total))
    visits = {}
    incl = np.zeros(K)
    m1 = np.zeros(K)
    m2 = np.zeros(K)
    bits = np.array([1 << h for h in range(K)], dtype=np.int64)
    accepted = 0
    for step in range(total):
        prop = mask ^ (1 << int(flips[step]))
        new = evaluate(prop)
        if logu[step] < new[0] - cur[0]:
            mask, cur = prop, new
            accepted += 1
        if step >= burn_in:
            visits[mask] = visits.get(mask, 0) + 1
    for mk in sorted(visits):
        cnt = visits[mk]
        _, mean, sec = cache[mk]
        inc = (mk & bits) != 0
        incl += cnt * inc
        m1 += cnt * mean
        m2 += cnt * sec
    pip = incl / steps
    post_mean = m1 / steps
    post_sd = np.sqrt(np.maximum(m2 / steps - post_mean ** 2, 0.0))
    ranked = sorted(visits.items(), key=lambda kv: (-kv[1], kv[0]))
    top_models = [(mk, cnt / steps) for mk, cnt in ranked[:top]]
    lws = np.array([cache[mk][0] for mk in sorted(visits)])
    mx = lws.max()
    return BmaResult(
        names=stats.names,
        pip=pip,
        post_mean=post_mean,
        post_sd=post_sd,
        log_evidence=float(mx + math.log(np.exp(lws - mx).sum())),
        top_models=top_models,
        prior=prior,
        g=G,
        n=stats.n,
        k=K,
        method="mc3",
        wall_time=time.perf_counter() - t0,
        extra={"acceptance_rate": accepted / total, "distinct_models": len(visits),
               "steps": steps, "burn_in": burn_in, "seed": seed,
               "fixed": stats.fixed_names},
    )
