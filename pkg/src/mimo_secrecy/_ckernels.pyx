# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the scalar root-finding kernels.

Function signatures and results match ``_pykernels`` exactly; only the
evaluation loops are typed.
"""
from libc.math cimport sqrt, fabs

BACKEND = "compiled"


cdef inline double _secular(const double[::1] w, const double[::1] s,
                            double x) noexcept nogil:
    cdef Py_ssize_t i
    cdef double acc = 0.0, t
    for i in range(w.shape[0]):
        t = x + s[i]
        acc += w[i] / (t * t)
    return acc


cdef inline double _rational(const double[::1] a, const double[::1] lam,
                             double mu) noexcept nogil:
    cdef Py_ssize_t i
    cdef double acc = 0.0, t
    for i in range(a.shape[0]):
        t = 1.0 - mu * lam[i]
        acc += a[i] / (t * t)
    return acc


def secular_sum(const double[::1] w, const double[::1] s, double x):
    """Evaluate ``sum_i w[i] / (x + s[i])**2``."""
    return _secular(w, s, x)


def secular_root(const double[::1] w, const double[::1] s, double target,
                 double lo, double ftol, int max_iter=200):
    """Root of ``secular_sum(w, s, x) = target`` on ``(lo, inf)``."""
    cdef Py_ssize_t i
    cdef double wsum = 0.0, smin = s[0], hi, mid, val
    cdef int it
    for i in range(w.shape[0]):
        wsum += w[i]
        if s[i] < smin:
            smin = s[i]
    hi = sqrt(wsum / target) - smin
    if hi < lo:
        hi = lo
    hi = hi * (1.0 + 1e-12) + 1e-300
    with nogil:
        for it in range(max_iter):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            val = _secular(w, s, mid) - target
            if fabs(val) <= ftol * target:
                lo = mid
                hi = mid
                break
            if val > 0:
                lo = mid
            else:
                hi = mid
    return 0.5 * (lo + hi)


def rational_value(const double[::1] a, const double[::1] lam, double const_,
                   double mu):
    """Evaluate ``const + sum_i a[i] / (1 - mu * lam[i])**2``."""
    return const_ + _rational(a, lam, mu)


def rational_root(const double[::1] a, const double[::1] lam, double const_,
                  double target, double lo, double hi, double ftol,
                  int max_iter=200):
    """Bisection root of ``rational_value(...) = target`` on ``[lo, hi]``."""
    cdef double mid, val
    cdef bint rising = const_ + _rational(a, lam, lo) - target < 0
    cdef int it
    with nogil:
        for it in range(max_iter):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            val = const_ + _rational(a, lam, mid) - target
            if fabs(val) <= ftol:
                lo = mid
                hi = mid
                break
            if (val < 0) == rising:
                lo = mid
            else:
                hi = mid
    return 0.5 * (lo + hi)
