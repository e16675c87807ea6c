"""Independent reference computations used by the tests.

Nothing here imports the engine's numerics: every model is refit from raw
data, and the g-prior evidence is integrated numerically.
"""

import itertools
import math

import numpy as np
from scipy.special import gammaln


def ols_r2(X, y):
    """R^2 and OLS slope vector of ``y`` on an intercept plus ``X`` (min-norm)."""
    n = y.size
    D = np.column_stack([np.ones(n), X]) if X.size else np.ones((n, 1))
    b, *_ = np.linalg.lstsq(D, y, rcond=None)
    res = y - D @ b
    yc = y - y.mean()
    tss = yc @ yc
    return (1.0 - (res @ res) / tss if tss > 0 else 0.0), b[1:]


def naive_bma(X, y, G, log_prior_size):
    """Refit every model from scratch; returns model probabilities (indexed by
    mask), PIPs, posterior means and posterior sds."""
    n, K = X.shape
    delta = G / (1 + G)
    yc = y - y.mean()
    tss = yc @ yc
    lws = np.empty(1 << K)
    means = np.zeros((1 << K, K))
    sec = np.zeros((1 << K, K))
    for mask in range(1 << K):
        idx = [h for h in range(K) if mask >> h & 1]
        k = len(idx)
        r2, b = ols_r2(X[:, idx], y)
        lws[mask] = ((n - 1 - k) / 2 * math.log1p(G) - (n - 1) / 2 * math.log1p(G * (1 - r2))
                     + log_prior_size[k])
        if k:
            Xc = X[:, idx] - X[:, idx].mean(axis=0)
            V = np.linalg.inv(Xc.T @ Xc)
            mu = delta * b
            var = delta * tss * (1 - delta * r2) / (n - 3) * np.diag(V)
            means[mask, idx] = mu
            sec[mask, idx] = var + mu ** 2
    p = np.exp(lws - lws.max())
    p /= p.sum()
    incl = np.array([[mask >> h & 1 for h in range(K)] for mask in range(1 << K)], dtype=float)
    pm = p @ means
    return p, p @ incl, pm, np.sqrt(p @ sec - pm ** 2)


def log_null_evidence(y):
    """Intercept-only evidence with p(alpha, sigma) ~ 1/sigma, integrated analytically."""
    n = y.size
    yc = y - y.mean()
    s = yc @ yc
    a = (n - 1) / 2
    return -a * math.log(2 * math.pi) - 0.5 * math.log(n) + math.log(0.5) + gammaln(a) - a * math.log(s / 2)


def gprior_quadrature(X, y, G, z_half=12.0, z_pts=121, tau_pts=3001):
    """Evidence ratio and posterior coefficient moments of one g-prior model by
    numerical integration over (beta, log sigma^2).

    The intercept is integrated out in closed form (flat prior).  beta is
    parameterized as ``b_ols + sigma * L z`` on a tensor trapezoid grid in
    ``z``; ``tau = log sigma^2`` on a uniform grid.  Returns
    ``(log BF against the null, mean, covariance)``.
    """
    X = np.asarray(X, dtype=float).reshape(y.size, -1)
    n, k = X.shape
    Xc = X - X.mean(axis=0)
    yc = y - y.mean()
    A = Xc.T @ Xc
    Ainv = np.linalg.inv(A)
    b_ols = Ainv @ (Xc.T @ yc)
    L = np.linalg.cholesky(Ainv)
    logdetV = np.linalg.slogdet(Ainv)[1]

    s_hat = (yc @ yc) / (n - 1)
    a = (n - 1) / 2
    tau = np.linspace(math.log(s_hat) - 15.0, math.log(s_hat) + 40.0 / a + 8.0, tau_pts)
    dtau = tau[1] - tau[0]
    z1 = np.linspace(-z_half, z_half, z_pts)
    dz = z1[1] - z1[0]
    Z = np.array(list(itertools.product(z1, repeat=k)))  # (m, k)
    LZ = Z @ L.T

    tot = 0.0
    m1 = np.zeros(k)
    m2 = np.zeros((k, k))
    logs = []
    for t in tau:
        sig2 = math.exp(t)
        sig = math.sqrt(sig2)
        B = b_ols + sig * LZ  # (m, k)
        R = yc[None, :] - B @ Xc.T
        Q = np.einsum("ij,ij->i", R, R)
        quad = np.einsum("ij,jk,ik->i", B, A, B)
        logf = (math.log(0.5) - (n - 1) / 2 * math.log(2 * math.pi * sig2) - 0.5 * math.log(n)
                - Q / (2 * sig2)
                - k / 2 * math.log(2 * math.pi * sig2 * G) - 0.5 * logdetV - quad / (2 * sig2 * G)
                + k * math.log(sig) + 0.5 * logdetV)  # Jacobian sigma^k |L|
        logs.append((logf, B))
    peak = max(lf.max() for lf, _ in logs)
    for lf, B in logs:
        w = np.exp(lf - peak)
        tot += w.sum()
        m1 += w @ B
        m2 += (B * w[:, None]).T @ B
    weight = dtau * dz ** k
    log_ev = peak + math.log(tot * weight)
    mean = m1 / tot
    cov = m2 / tot - np.outer(mean, mean)
    return log_ev - log_null_evidence(y), mean, cov
