"""Pure numpy implementations of the hot kernels.

These mirror ``_ckernels.pyx`` one-for-one and are used when the compiled
module is unavailable or ``LIFIWIFI_BACKEND=python`` is set.
"""
import numpy as np

# Bound on the (rows x points x nodes) temporary built per chunk.
_CHUNK_ELEMS = 2_000_000


def mixture_logsum(c, b, z, w, p, grad=True):
    """Expected log of a Gaussian-mixture likelihood ratio over quadrature nodes.

    With exponents ``e[k, m, t] = c[k, m] + b[k, m, :] @ z[t, :]`` and
    ``S[k, t] = sum_m p[m] exp(e[k, m, t])`` this returns

    * ``L[k] = sum_t w[t] log S[k, t]``
    * ``F[t] = sum_k p[k] log S[k, t]`` (per-node values, for error estimates)
    * ``G[i] = sum_t w[t] sum_k p[k] exp(e[k, i, t]) / S[k, t]`` if ``grad``.
    """
    c = np.asarray(c, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    K, M = c.shape
    T = z.shape[0]
    active = p > 0.0
    logp = np.full(M, -np.inf)
    logp[active] = np.log(p[active])

    L = np.empty(K)
    F = np.zeros(T)
    G = np.zeros(M) if grad else None
    rows = max(1, _CHUNK_ELEMS // max(1, M * T))
    for k0 in range(0, K, rows):
        k1 = min(K, k0 + rows)
        e = c[k0:k1, :, None] + np.einsum("kmd,td->kmt", b[k0:k1], z)
        a = e + logp[None, :, None]
        mx = a.max(axis=1, keepdims=True)
        s = np.exp(a - mx).sum(axis=1)
        logS = mx[:, 0, :] + np.log(s)
        L[k0:k1] = logS @ w
        F += p[k0:k1] @ logS
        if grad:
            rows_on = p[k0:k1] > 0.0
            if rows_on.any():
                r = np.exp(e[rows_on] - logS[rows_on][:, None, :])
                G += np.einsum("k,kmt,t->m", p[k0:k1][rows_on], r, w)
    return L, G, F


def simplex_project(x):
    """Euclidean projection onto the probability simplex (sort-based)."""
    x = np.asarray(x, dtype=np.float64)
    u = np.sort(x)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, x.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(x - theta, 0.0)


def _project_one_cap(y, a, bound, iters):
    p = simplex_project(y)
    if a @ p <= bound:
        return p, 0.0
    hi = 1.0
    for _ in range(2000):
        q = simplex_project(y - hi * a)
        if a @ q <= bound:
            break
        hi *= 2.0
    else:
        return q, hi
    lo = 0.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if a @ simplex_project(y - mid * a) > bound:
            lo = mid
        else:
            hi = mid
    return simplex_project(y - hi * a), hi


def capped_simplex_project(x, A, bounds, iters=200):
    """Project onto {p in simplex : A @ p <= bounds} for at most two caps.

    Dual bisection: the inner multiplier enforces the first cap for a
    fixed second multiplier; the outer one enforces the second cap.
    Returns ``(p, lam)`` with ``lam`` the cap multipliers found.
    """
    x = np.asarray(x, dtype=np.float64)
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    bounds = np.atleast_1d(np.asarray(bounds, dtype=np.float64))
    ncap = A.shape[0] if A.size else 0
    lam = np.zeros(2)
    if ncap == 0:
        return simplex_project(x), lam
    if ncap == 1:
        p, lam[0] = _project_one_cap(x, A[0], bounds[0], iters)
        return p, lam
    a1, a2 = A[0], A[1]
    b1, b2 = bounds[0], bounds[1]
    p, l1 = _project_one_cap(x, a1, b1, iters)
    if a2 @ p <= b2:
        lam[0] = l1
        return p, lam
    p, l2 = _project_one_cap(x, a2, b2, iters)
    if a1 @ p <= b1:
        lam[1] = l2
        return p, lam
    hi = 1.0
    for _ in range(2000):
        p, l1 = _project_one_cap(x - hi * a2, a1, b1, iters)
        if a2 @ p <= b2:
            break
        hi *= 2.0
    lo = 0.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        q, _ = _project_one_cap(x - mid * a2, a1, b1, iters)
        if a2 @ q > b2:
            lo = mid
        else:
            hi = mid
    p, l1 = _project_one_cap(x - hi * a2, a1, b1, iters)
    lam[0], lam[1] = l1, hi
    return p, lam
