"""Weighted average least squares with a Laplace prior on the auxiliary t-ratios.

Focus regressors (always the intercept, optionally more) enter every model.
Auxiliary regressors are projected off the focus span, scaled to unit length
and rotated onto the eigenvectors of their projected cross-moment, giving
transformed regressors whose OLS t-ratios are independent with unit variance.
Each t-ratio is shrunk by the posterior mean of a normal location parameter
under a Laplace prior; the shrunken estimates are mapped back to the original
coordinates.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InsufficientDataError

logger = logging.getLogger(__name__)

INTERCEPT = "(intercept)"
_GL_ORDER = 16


@dataclass(frozen=True)
class WalsConfig:
    focus: tuple = ()
    laplace_c: float = math.log(2.0)
    quad_nodes: int = 2001
    quad_halfwidth: float = 40.0

    def __post_init__(self):
        object.__setattr__(self, "focus", tuple(self.focus))
        if not (math.isfinite(self.laplace_c) and self.laplace_c > 0):
            raise ConfigurationError("laplace_c must be finite and positive")
        if self.quad_nodes < _GL_ORDER:
            raise ConfigurationError(f"quad_nodes must be at least {_GL_ORDER}")


def _gl_nodes(a, b, panels):
    t, w = np.polynomial.legendre.leggauss(_GL_ORDER)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * t).ravel()
    wt = (half[:, None] * w).ravel()
    return x, wt


def laplace_shrink(x, c=math.log(2.0), nodes=2001, halfwidth=40.0):
    """Posterior mean and variance of ``eta`` given ``x ~ N(eta, 1)`` and a
    prior density proportional to ``exp(-c |eta|)``.

    Integrals are taken by composite Gauss-Legendre quadrature on
    ``[x - halfwidth, x + halfwidth]``, split at the prior's kink at zero.
    ``nodes`` is the approximate total node count.
    """
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("x must be finite")
    if x < 0:
        m, v = laplace_shrink(-x, c, nodes, halfwidth)
        return -m, v
    lo, hi = x - halfwidth, x + halfwidth
    pieces = [(lo, 0.0), (0.0, hi)] if lo < 0.0 < hi else [(lo, hi)]
    total_panels = max(len(pieces), nodes // _GL_ORDER)
    eta, w = [], []
    for a, b in pieces:
        p = max(1, int(round(total_panels * (b - a) / (hi - lo))))
        e, ww = _gl_nodes(a, b, p)
        eta.append(e)
        w.append(ww)
    eta = np.concatenate(eta)
    w = np.concatenate(w)
    logf = -0.5 * (eta - x) ** 2 - c * np.abs(eta)
    f = w * np.exp(logf - logf.max())
    z = f.sum()
    # the posterior mean is odd in x, so pin it at the centre
    m = float((f * eta).sum() / z) if x > 0 else 0.0
    v = float((f * (eta - m) ** 2).sum() / z)
    return m, v


@dataclass
class WalsResult:
    names: tuple
    coef: np.ndarray
    se: np.ndarray
    t: np.ndarray
    focus: tuple
    sigma: float
    n: int
    config: WalsConfig
    dropped_directions: int = 0

    def robust(self, threshold=2.0):
        return np.abs(self.t) > threshold

    def ranked(self, include_intercept=False):
        """Row indices by descending |t| (ties by name)."""
        rows = [r for r in range(len(self.names)) if include_intercept or self.names[r] != INTERCEPT]
        return sorted(rows, key=lambda r: (-abs(self.t[r]), self.names[r]))

    def row(self, name):
        r = self.names.index(name)
        return self.coef[r], self.se[r], self.t[r]


def wals_arrays(X, y, names, config=WalsConfig()):
    """WALS on an explicit design ``X`` (no intercept column) with column ``names``."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n = y.size
    X = X.reshape(n, -1)
    names = tuple(names)
    if len(names) != X.shape[1]:
        raise ConfigurationError("names do not match the number of columns")
    unknown = [f for f in config.focus if f not in names]
    if unknown:
        raise ConfigurationError(f"focus regressors not in design: {unknown}")
    focus = [names.index(f) for f in config.focus]
    # auxiliaries in name order so the result does not depend on column order
    aux = sorted((h for h in range(len(names)) if h not in focus), key=lambda h: names[h])
    K = X.shape[1]
    if n <= K + 2:
        raise InsufficientDataError(f"N={n} too small for {K} regressors plus intercept")

    X1 = np.column_stack([np.ones(n), X[:, focus]])
    X2 = X[:, aux]
    k1, k2 = X1.shape[1], X2.shape[1]
    Q1, R1 = np.linalg.qr(X1)
    rd = np.abs(np.diag(R1))
    if rd.min() <= 1e-10 * rd.max():
        raise ConfigurationError("focus block is rank deficient")
    R1inv = np.linalg.solve(R1, np.eye(k1))
    V1 = R1inv @ R1inv.T  # (X1'X1)^{-1}

    def project(A):
        return A - Q1 @ (Q1.T @ A)

    y1 = project(y)
    dropped = 0
    if k2 == 0:
        b1 = R1inv @ (Q1.T @ y)
        resid = y1
        s2 = float(resid @ resid) / (n - k1)
        cov1 = s2 * V1
        coef2 = np.zeros(0)
        se2 = np.zeros(0)
    else:
        Z = project(X2)
        zn = np.sqrt(np.einsum("ij,ij->j", Z, Z))
        if (zn <= 1e-12 * max(zn.max(), 1.0)).any():
            raise ConfigurationError("an auxiliary regressor lies in the focus span")
        Zs = Z / zn
        lam, P = np.linalg.eigh(Zs.T @ Zs)
        order = np.argsort(-lam, kind="stable")
        lam, P = lam[order], P[:, order]
        keep = lam > 1e-10 * lam[0]
        dropped = int((~keep).sum())
        if dropped:
            logger.warning("auxiliary block is rank deficient: dropping %d null directions", dropped)
        lam, P = lam[keep], P[:, keep]
        T = (P / zn[:, None]) / np.sqrt(lam)  # beta2 = T @ gamma
        W = Z @ T  # W'W = I
        gamma_hat = W.T @ y1
        resid = y1 - W @ gamma_hat
        r = k1 + W.shape[1]
        s2 = float(resid @ resid) / (n - r)
        s = math.sqrt(s2)
        mv = np.array([laplace_shrink(g / s, config.laplace_c, config.quad_nodes,
                                      config.quad_halfwidth) for g in gamma_hat])
        gamma = s * mv[:, 0]
        cov_gamma = s2 * mv[:, 1]
        b2 = T @ gamma
        cov2 = (T * cov_gamma) @ T.T
        Qm = V1 @ (X1.T @ X2)
        b1 = V1 @ (X1.T @ (y - X2 @ b2))
        cov1 = s2 * V1 + Qm @ cov2 @ Qm.T
        coef2 = b2
        se2 = np.sqrt(np.diag(cov2))

    out_names = [INTERCEPT] + [names[h] for h in focus] + [names[h] for h in aux]
    coef = np.concatenate([b1, coef2])
    se = np.concatenate([np.sqrt(np.diag(cov1)), se2])
    # report in the input column order
    pos = {nm: r for r, nm in enumerate(out_names)}
    final = [INTERCEPT] + list(names)
    idx = [pos[nm] for nm in final]
    coef, se = coef[idx], se[idx]
    return WalsResult(
        names=tuple(final),
        coef=coef,
        se=se,
        t=coef / se,
        focus=(INTERCEPT,) + tuple(config.focus),
        sigma=math.sqrt(s2),
        n=n,
        config=config,
        dropped_directions=dropped,
    )


def wals_fit(dyads, config=WalsConfig()):
    """WALS on every regressor of a DyadTable.

    Regressors marked always-included in the table join ``config.focus``.
    """
    focus = tuple(dict.fromkeys(tuple(config.focus) + tuple(dyads.fixed_names)))
    cfg = WalsConfig(focus, config.laplace_c, config.quad_nodes, config.quad_halfwidth)
    return wals_arrays(dyads.x, dyads.y, dyads.names, cfg)
