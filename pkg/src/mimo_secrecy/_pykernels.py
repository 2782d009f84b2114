"""Pure-Python implementations of the scalar root-finding kernels.

These mirror ``_ckernels.pyx`` function for function and are selected by
:mod:`mimo_secrecy.kernels` when the compiled extension is unavailable.

Both rational functions handled here are sums over a handful of terms,
evaluated many times inside a bisection loop. All arrays are 1-D float64.
"""
import math

import numpy as np

BACKEND = "python"


def secular_sum(w, s, x):
    """Evaluate ``sum_i w[i] / (x + s[i])**2``."""
    return float(np.sum(w / (x + s) ** 2))


def secular_root(w, s, target, lo, ftol, max_iter=200):
    """Root of ``secular_sum(w, s, x) = target`` on ``(lo, inf)``.

    The function is strictly decreasing on ``x > -min(s)``. The caller
    guarantees ``secular_sum(w, s, lo) > target``.

    Parameters
    ----------
    w : np.ndarray
        Non-negative weights.
    s : np.ndarray
        Shifts, with ``lo + s > 0``.
    target : float
        Positive right-hand side.
    lo : float
        Lower end of the search interval.
    ftol : float
        Relative tolerance on the function value.
    max_iter : int
        Maximum number of bisection steps.

    Returns
    -------
    float
        The bracketed root.
    """
    w = np.asarray(w, dtype=float)
    s = np.asarray(s, dtype=float)
    # Every term is below W/(x + s_min)^2, which gives a finite upper end.
    hi = max(lo, math.sqrt(float(np.sum(w)) / target) - float(np.min(s)))
    hi = max(hi, lo) * (1.0 + 1e-12) + 1e-300
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        val = float(np.sum(w / (mid + s) ** 2)) - target
        if abs(val) <= ftol * target:
            return mid
        if val > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def rational_value(a, lam, const, mu):
    """Evaluate ``const + sum_i a[i] / (1 - mu * lam[i])**2``."""
    return const + float(np.sum(a / (1.0 - mu * lam) ** 2))


def rational_root(a, lam, const, target, lo, hi, ftol, max_iter=200):
    """Bisection root of ``rational_value(...) = target`` on ``[lo, hi]``.

    The caller guarantees a sign change of ``rational_value - target``
    between the interval ends and that no pole lies inside.

    Returns
    -------
    float
        The bracketed root.
    """
    a = np.asarray(a, dtype=float)
    lam = np.asarray(lam, dtype=float)
    f_lo = const + float(np.sum(a / (1.0 - lo * lam) ** 2)) - target
    rising = f_lo < 0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        val = const + float(np.sum(a / (1.0 - mid * lam) ** 2)) - target
        if abs(val) <= ftol:
            return mid
        if (val < 0) == rising:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
