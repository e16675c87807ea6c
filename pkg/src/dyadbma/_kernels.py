"""Compiled kernels for the exhaustive model walk.

All routines work on the standardized problem: ``C`` is the correlation
matrix of the (centered, fixed-regressor-partialled) candidates and ``c``
their correlations with the response, so ``R^2 = c_S' C_S^{-1} c_S``.

The selected submatrix is held as an upper-triangular ``R`` with
``R'R = C_S`` in insertion order, together with ``z = R^{-T} c_S`` so that
``R^2 = |z|^2``.  Adding a regressor appends a column (one triangular
solve); removing one deletes a column and restores triangularity with
Givens rotations.  Both are O(k^2).
"""

import math

import numpy as np
from numba import njit

_NEG_INF = -np.inf


@njit(cache=True, nogil=True)
def append_var(C, c, R, z, order, k, h, tol):
    """Try to add regressor ``h`` at position ``k``.  Returns True if it is
    linearly independent of the current factor (pivot above ``tol``)."""
    dd = C[h, h]
    for a in range(k):
        s = C[order[a], h]
        for b in range(a):
            s -= R[b, a] * R[b, k]
        s /= R[a, a]
        R[a, k] = s
        dd -= s * s
    if dd <= tol:
        for a in range(k):
            R[a, k] = 0.0
        return False
    d = math.sqrt(dd)
    R[k, k] = d
    s = c[h]
    for a in range(k):
        s -= R[a, k] * z[a]
    z[k] = s / d
    order[k] = h
    return True


@njit(cache=True, nogil=True)
def delete_pos(R, z, order, k, p):
    """Remove the factor column at position ``p`` (of ``k`` active)."""
    for j in range(p, k - 1):
        order[j] = order[j + 1]
        for a in range(k):
            R[a, j] = R[a, j + 1]
    for j in range(p, k - 1):
        a = R[j, j]
        b = R[j + 1, j]
        r = math.hypot(a, b)
        cs = a / r
        sn = b / r
        for col in range(j, k - 1):
            t1 = R[j, col]
            t2 = R[j + 1, col]
            R[j, col] = cs * t1 + sn * t2
            R[j + 1, col] = -sn * t1 + cs * t2
        R[j + 1, j] = 0.0
        t1 = z[j]
        t2 = z[j + 1]
        z[j] = cs * t1 + sn * t2
        z[j + 1] = -sn * t1 + cs * t2
    for a in range(k):
        R[a, k - 1] = 0.0
        R[k - 1, a] = 0.0
    z[k - 1] = 0.0


@njit(cache=True, nogil=True)
def toggle(C, c, R, z, order, inact, state, h, tol):
    """Flip regressor ``h`` in the current model.

    ``state`` holds ``[k_active, n_inactive, mask]``.  Regressors found to be
    linearly dependent sit in ``inact`` and are retried after deletions.
    """
    k = state[0]
    m = state[1]
    bit = np.int64(1) << h
    if state[2] & bit:
        state[2] ^= bit
        for a in range(m):
            if inact[a] == h:
                for b in range(a, m - 1):
                    inact[b] = inact[b + 1]
                state[1] = m - 1
                return
        for a in range(k):
            if order[a] == h:
                delete_pos(R, z, order, k, a)
                k -= 1
                break
        keep = 0
        for a in range(m):
            g = inact[a]
            if append_var(C, c, R, z, order, k, g, tol):
                k += 1
            else:
                inact[keep] = g
                keep += 1
        state[0] = k
        state[1] = keep
    else:
        state[2] |= bit
        if append_var(C, c, R, z, order, k, h, tol):
            state[0] = k + 1
        else:
            inact[m] = h
            state[1] = m + 1


@njit(cache=True, nogil=True)
def build_state(C, c, R, z, order, inact, state, mask, tol):
    K = C.shape[0]
    state[0] = 0
    state[1] = 0
    state[2] = 0
    for h in range(K):
        if (mask >> h) & 1:
            toggle(C, c, R, z, order, inact, state, h, tol)


@njit(cache=True, nogil=True)
def r_squared(z, k):
    s = 0.0
    for a in range(k):
        s += z[a] * z[a]
    if s > 1.0:
        s = 1.0
    return s


@njit(cache=True, nogil=True)
def log_bf(r2, k, dof, log1pG, G):
    return 0.5 * (dof - k) * log1pG - 0.5 * dof * math.log1p(G * (1.0 - r2))


@njit(cache=True, nogil=True)
def popcount(x):
    n = 0
    while x:
        x &= x - 1
        n += 1
    return n


@njit(cache=True, nogil=True)
def _ctz(x):
    n = 0
    while (x & 1) == 0:
        x >>= 1
        n += 1
    return n


@njit(cache=True, nogil=True)
def _top_insert(top_lw, top_mask, lw, mask):
    n = top_lw.shape[0]
    if n == 0:
        return
    last = n - 1
    if lw < top_lw[last] or (lw == top_lw[last] and mask > top_mask[last]):
        return
    pos = last
    while pos > 0 and (lw > top_lw[pos - 1] or (lw == top_lw[pos - 1] and mask < top_mask[pos - 1])):
        top_lw[pos] = top_lw[pos - 1]
        top_mask[pos] = top_mask[pos - 1]
        pos -= 1
    top_lw[pos] = lw
    top_mask[pos] = mask


@njit(cache=True, nogil=True)
def coef_moments(C, c, R, z, order, state, tss, dof, G, scale, mean_out, var_out):
    """Conditional posterior means and variances (original scale) for the
    current model, written into ``mean_out``/``var_out`` indexed by regressor.
    Only entries of included regressors are touched."""
    k = state[0]
    m = state[1]
    delta = G / (1.0 + G)
    sy = math.sqrt(tss)
    if m == 0:
        r2 = r_squared(z, k)
        resid = delta * tss * (1.0 - delta * r2) / (dof - 2.0)
        beta = np.empty(k)
        for a in range(k - 1, -1, -1):
            s = z[a]
            for b in range(a + 1, k):
                s -= R[a, b] * beta[b]
            beta[a] = s / R[a, a]
        # diag of C_S^{-1} = row sums of squares of R^{-1}
        Rinv = np.zeros((k, k))
        for a in range(k):
            Rinv[a, a] = 1.0 / R[a, a]
            for col in range(a + 1, k):
                s = 0.0
                for b in range(a, col):
                    s += Rinv[a, b] * R[b, col]
                Rinv[a, col] = -s / R[col, col]
        for a in range(k):
            dg = 0.0
            for col in range(a, k):
                dg += Rinv[a, col] * Rinv[a, col]
            h = order[a]
            mean_out[h] = delta * beta[a] * sy / scale[h]
            var_out[h] = resid * dg / (scale[h] * scale[h])
        return
    # rank-deficient selection: minimum-norm fit on the standardized scale
    K = C.shape[0]
    mask = state[2]
    kk = popcount(mask)
    idx = np.empty(kk, dtype=np.int64)
    t = 0
    for h in range(K):
        if (mask >> h) & 1:
            idx[t] = h
            t += 1
    Cs = np.empty((kk, kk))
    cs = np.empty(kk)
    for a in range(kk):
        cs[a] = c[idx[a]]
        for b in range(kk):
            Cs[a, b] = C[idx[a], idx[b]]
    w, V = np.linalg.eigh(Cs)
    cut = 1e-10 * max(w.max(), 1e-300)
    P = np.zeros((kk, kk))
    for e in range(kk):
        if w[e] > cut:
            for a in range(kk):
                for b in range(kk):
                    P[a, b] += V[a, e] * V[b, e] / w[e]
    beta = P @ cs
    r2 = 0.0
    for a in range(kk):
        r2 += beta[a] * cs[a]
    if r2 > 1.0:
        r2 = 1.0
    resid = delta * tss * (1.0 - delta * r2) / (dof - 2.0)
    for a in range(kk):
        h = idx[a]
        mean_out[h] = delta * beta[a] * sy / scale[h]
        var_out[h] = resid * P[a, a] / (scale[h] * scale[h])


@njit(cache=True, nogil=True)
def walk_evidence(C, c, dof, G, lp, tol, start, length, top_lw, top_mask, lw_out, r2_out):
    """Walk Gray-code indices ``[start, start+length)``.

    Returns ``(max_lw, sum exp(lw - max_lw))`` for the segment and keeps the
    best models in ``top_lw``/``top_mask``.  When ``lw_out``/``r2_out`` are
    non-empty, per-model values are stored at the model's mask.
    """
    K = C.shape[0]
    R = np.zeros((K, K))
    z = np.zeros(K)
    order = np.zeros(K, dtype=np.int64)
    inact = np.zeros(K, dtype=np.int64)
    state = np.zeros(3, dtype=np.int64)
    log1pG = math.log1p(G)
    store = lw_out.shape[0] > 0
    store_r2 = r2_out.shape[0] > 0
    mx = _NEG_INF
    acc = 0.0
    for t in range(start, start + length):
        if t == start:
            build_state(C, c, R, z, order, inact, state, t ^ (t >> 1), tol)
        else:
            toggle(C, c, R, z, order, inact, state, _ctz(t), tol)
        k = state[0]
        mask = state[2]
        r2 = r_squared(z, k)
        lw = log_bf(r2, k, dof, log1pG, G) + lp[popcount(mask)]
        if store:
            lw_out[mask] = lw
        if store_r2:
            r2_out[mask] = r2
        if lw > mx:
            acc = acc * math.exp(mx - lw) + 1.0
            mx = lw
        else:
            acc += math.exp(lw - mx)
        _top_insert(top_lw, top_mask, lw, mask)
    return mx, acc


@njit(cache=True, nogil=True)
def walk_moments(C, c, tss, dof, G, lp, tol, scale, start, length, log_z,
                 acc_total, acc_incl, acc_m1, acc_m2):
    """Second pass: accumulate normalized posterior mass, inclusion mass and
    first/second coefficient moments over the segment."""
    K = C.shape[0]
    R = np.zeros((K, K))
    z = np.zeros(K)
    order = np.zeros(K, dtype=np.int64)
    inact = np.zeros(K, dtype=np.int64)
    state = np.zeros(3, dtype=np.int64)
    mean = np.zeros(K)
    var = np.zeros(K)
    log1pG = math.log1p(G)
    for t in range(start, start + length):
        if t == start:
            build_state(C, c, R, z, order, inact, state, t ^ (t >> 1), tol)
        else:
            toggle(C, c, R, z, order, inact, state, _ctz(t), tol)
        k = state[0]
        mask = state[2]
        r2 = r_squared(z, k)
        lw = log_bf(r2, k, dof, log1pG, G) + lp[popcount(mask)]
        d = lw - log_z
        if d < -745.0:
            continue
        p = math.exp(d)
        acc_total[0] += p
        if mask == 0:
            continue
        coef_moments(C, c, R, z, order, state, tss, dof, G, scale, mean, var)
        for h in range(K):
            if (mask >> h) & 1:
                acc_incl[h] += p
                acc_m1[h] += p * mean[h]
                acc_m2[h] += p * (var[h] + mean[h] * mean[h])


@njit(cache=True, nogil=True)
def fit_mask(C, c, mask, tol):
    """Fresh factorization of one model (regressors appended in index order).

    Returns ``(R, z, order, inact, state)``.
    """
    K = C.shape[0]
    R = np.zeros((K, K))
    z = np.zeros(K)
    order = np.zeros(K, dtype=np.int64)
    inact = np.zeros(K, dtype=np.int64)
    state = np.zeros(3, dtype=np.int64)
    build_state(C, c, R, z, order, inact, state, mask, tol)
    return R, z, order, inact, state
