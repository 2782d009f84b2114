"""Backend selection for the scalar root-finding kernels.

The compiled extension ``_ckernels`` is preferred. Setting the environment
variable ``MIMO_SECRECY_PURE_PYTHON=1`` before import, or calling
:func:`use_backend`, switches to the pure-Python fallback.
"""
import os

import numpy as np

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # pragma: no cover - depends on build
    _ckernels = None

__all__ = ["secular_sum", "secular_root", "rational_value", "rational_root",
           "use_backend", "backend", "available_backends"]

_active = _pykernels


def available_backends():
    """Names of the importable backends."""
    names = ["python"]
    if _ckernels is not None:
        names.insert(0, "compiled")
    return names


def use_backend(name):
    """Select ``"compiled"`` or ``"python"`` for subsequent kernel calls.

    Raises
    ------
    ValueError
        If the requested backend is unknown or not built.
    """
    global _active
    if name == "python":
        _active = _pykernels
    elif name == "compiled":
        if _ckernels is None:
            raise ValueError("compiled kernels are not available")
        _active = _ckernels
    else:
        raise ValueError(f"unknown backend {name!r}")


def backend():
    """Name of the active backend."""
    return _active.BACKEND


def _vec(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def secular_sum(w, s, x):
    return _active.secular_sum(_vec(w), _vec(s), float(x))


def secular_root(w, s, target, lo, ftol, max_iter=200):
    return _active.secular_root(_vec(w), _vec(s), float(target), float(lo),
                                float(ftol), int(max_iter))


def rational_value(a, lam, const, mu):
    return _active.rational_value(_vec(a), _vec(lam), float(const), float(mu))


def rational_root(a, lam, const, target, lo, hi, ftol, max_iter=200):
    return _active.rational_root(_vec(a), _vec(lam), float(const),
                                 float(target), float(lo), float(hi),
                                 float(ftol), int(max_iter))


if _ckernels is not None and not os.environ.get("MIMO_SECRECY_PURE_PYTHON"):
    _active = _ckernels
