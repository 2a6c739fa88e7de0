# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels in ``_pykernels``.

Same signatures and return conventions; see the numpy module for the
definitions.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, INFINITY
from libc.stdlib cimport malloc, free, qsort

cnp.import_array()


def mixture_logsum(c, b, z, w, p, bint grad=True):
    cdef const double[:, ::1] cv = np.ascontiguousarray(c, dtype=np.float64)
    cdef const double[:, :, ::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef const double[:, ::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef const double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef const double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef Py_ssize_t K = cv.shape[0], M = cv.shape[1]
    cdef Py_ssize_t T = zv.shape[0], D = zv.shape[1]
    cdef Py_ssize_t k, m, t, d

    L_arr = np.zeros(K)
    F_arr = np.zeros(T)
    G_arr = np.zeros(M)
    cdef double[::1] L = L_arr
    cdef double[::1] F = F_arr
    cdef double[::1] G = G_arr

    cdef double *e = <double *> malloc(M * sizeof(double))
    cdef double *logp = <double *> malloc(M * sizeof(double))
    if e == NULL or logp == NULL:
        free(e); free(logp)
        raise MemoryError()

    cdef double mx, s, acc, logS, wt, pk, scale
    try:
        for m in range(M):
            logp[m] = log(pv[m]) if pv[m] > 0.0 else -INFINITY
        for k in range(K):
            pk = pv[k]
            acc = 0.0
            for t in range(T):
                mx = -INFINITY
                for m in range(M):
                    s = cv[k, m]
                    for d in range(D):
                        s += bv[k, m, d] * zv[t, d]
                    e[m] = s
                    if pv[m] > 0.0 and s + logp[m] > mx:
                        mx = s + logp[m]
                s = 0.0
                for m in range(M):
                    if pv[m] > 0.0:
                        s += exp(e[m] + logp[m] - mx)
                logS = mx + log(s)
                wt = wv[t]
                acc += wt * logS
                F[t] += pk * logS
                if grad and pk > 0.0:
                    scale = wt * pk
                    for m in range(M):
                        G[m] += scale * exp(e[m] - logS)
            L[k] = acc
    finally:
        free(e); free(logp)
    return L_arr, (G_arr if grad else None), F_arr


cdef int _cmp_desc(const void *a, const void *b) noexcept nogil:
    cdef double x = (<double *> a)[0]
    cdef double y = (<double *> b)[0]
    if x < y:
        return 1
    if x > y:
        return -1
    return 0


cdef void _simplex(const double *x, double *out, double *work, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t j, rho = 0
    cdef double css = 0.0, theta = 0.0, v
    for j in range(n):
        work[j] = x[j]
    qsort(work, n, sizeof(double), _cmp_desc)
    for j in range(n):
        css += work[j]
        v = work[j] - (css - 1.0) / (j + 1.0)
        if v > 0.0:
            rho = j
            theta = (css - 1.0) / (j + 1.0)
    for j in range(n):
        v = x[j] - theta
        out[j] = v if v > 0.0 else 0.0


cdef inline double _dot(const double *a, const double *b, Py_ssize_t n) noexcept nogil:
    cdef double s = 0.0
    cdef Py_ssize_t j
    for j in range(n):
        s += a[j] * b[j]
    return s


cdef double _one_cap(const double *y, const double *a, double bound, double *out,
                     double *shift, double *work, Py_ssize_t n, int iters) noexcept nogil:
    """Project y onto simplex with a.p <= bound; returns the multiplier."""
    cdef double lo = 0.0, hi = 1.0, mid
    cdef Py_ssize_t j
    cdef int it
    _simplex(y, out, work, n)
    if _dot(a, out, n) <= bound:
        return 0.0
    for it in range(2000):
        for j in range(n):
            shift[j] = y[j] - hi * a[j]
        _simplex(shift, out, work, n)
        if _dot(a, out, n) <= bound:
            break
        hi *= 2.0
    else:
        return hi
    for it in range(iters):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        for j in range(n):
            shift[j] = y[j] - mid * a[j]
        _simplex(shift, out, work, n)
        if _dot(a, out, n) > bound:
            lo = mid
        else:
            hi = mid
    for j in range(n):
        shift[j] = y[j] - hi * a[j]
    _simplex(shift, out, work, n)
    return hi


def simplex_project(x):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0]
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    work_arr = np.empty(n)
    cdef double[::1] work = work_arr
    _simplex(&xv[0], &out[0], &work[0], n)
    return out_arr


def capped_simplex_project(x, A, bounds, int iters=200):
    xa = np.ascontiguousarray(x, dtype=np.float64)
    Aa = np.ascontiguousarray(np.atleast_2d(np.asarray(A, dtype=np.float64)))
    ba = np.atleast_1d(np.asarray(bounds, dtype=np.float64))
    cdef Py_ssize_t n = xa.shape[0]
    cdef int ncap = Aa.shape[0] if Aa.size else 0
    lam = np.zeros(2)
    if ncap == 0:
        return simplex_project(xa), lam

    cdef const double[::1] xv = xa
    cdef const double[:, ::1] Av = Aa
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    buf = np.empty((4, n))
    cdef double[:, ::1] bufv = buf
    cdef double *shift = &bufv[0, 0]
    cdef double *work = &bufv[1, 0]
    cdef double *y2 = &bufv[2, 0]
    cdef double *tmp = &bufv[3, 0]
    cdef double b1 = ba[0], b2 = 0.0, l1, l2, lo, hi, mid
    cdef Py_ssize_t j
    cdef int it

    if ncap == 1:
        lam[0] = _one_cap(&xv[0], &Av[0, 0], b1, &out[0], shift, work, n, iters)
        return out_arr, lam

    b2 = ba[1]
    l1 = _one_cap(&xv[0], &Av[0, 0], b1, &out[0], shift, work, n, iters)
    if _dot(&Av[1, 0], &out[0], n) <= b2:
        lam[0] = l1
        return out_arr, lam
    l2 = _one_cap(&xv[0], &Av[1, 0], b2, &out[0], shift, work, n, iters)
    if _dot(&Av[0, 0], &out[0], n) <= b1:
        lam[1] = l2
        return out_arr, lam

    hi = 1.0
    for it in range(2000):
        for j in range(n):
            y2[j] = xv[j] - hi * Av[1, j]
        l1 = _one_cap(y2, &Av[0, 0], b1, &out[0], shift, work, n, iters)
        if _dot(&Av[1, 0], &out[0], n) <= b2:
            break
        hi *= 2.0
    lo = 0.0
    for it in range(iters):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        for j in range(n):
            y2[j] = xv[j] - mid * Av[1, j]
        _one_cap(y2, &Av[0, 0], b1, tmp, shift, work, n, iters)
        if _dot(&Av[1, 0], tmp, n) > b2:
            lo = mid
        else:
            hi = mid
    for j in range(n):
        y2[j] = xv[j] - hi * Av[1, j]
    l1 = _one_cap(y2, &Av[0, 0], b1, &out[0], shift, work, n, iters)
    lam[0] = l1
    lam[1] = hi
    return out_arr, lam
