"""Small dense complex linear algebra and scalar root finding.

Every routine here is a pure function of its inputs. Matrices are
``numpy.ndarray`` objects of dtype ``complex128``.
"""
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import cho_factor, cho_solve

__all__ = ["NumericsError", "DimensionError", "NonFiniteError",
           "SolverError", "BracketError", "HermEig", "herm_eig",
           "solve_hpd", "find_root_monotone", "TOL"]

# Module tolerances. Callers may pass their own values where an argument
# exists; these are the defaults.
TOL = {
    "hermitian": 1e-10,
    "bisect_max_iter": 200,
}


class NumericsError(Exception):
    """Base class for errors raised by this package's numerical kernels."""


class DimensionError(NumericsError, ValueError):
    """Raised for non-square or incompatible operands."""


class NonFiniteError(NumericsError, ValueError):
    """Raised when an input carries NaN or Inf entries."""


class SolverError(NumericsError):
    """Raised when a Hermitian system is singular or indefinite.

    Attributes
    ----------
    min_eig : float
        Estimate of the smallest eigenvalue of the offending matrix.
    """

    def __init__(self, message, min_eig):
        super().__init__(message)
        self.min_eig = min_eig


class BracketError(NumericsError):
    """Raised when the function has no sign change over the bracket."""


@dataclass(frozen=True)
class HermEig:
    """Eigen-decomposition ``A = Q diag(values) Q^H`` of a Hermitian matrix.

    Attributes
    ----------
    values : np.ndarray
        Real eigenvalues in ascending order.
    vectors : np.ndarray
        Unitary matrix whose columns are the eigenvectors.
    """
    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self):
        """Return ``Q diag(values) Q^H``."""
        q = self.vectors
        return (q * self.values) @ q.conj().T


def _check_square(a):
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteError("matrix has non-finite entries")
    return a


def herm_eig(a):
    """Eigen-decomposition of a Hermitian matrix.

    The input is symmetrised as ``(a + a^H) / 2`` before factorisation, so a
    small loss of symmetry from round-off is harmless.

    Parameters
    ----------
    a : np.ndarray
        Square Hermitian matrix.

    Returns
    -------
    HermEig
        Ascending eigenvalues and orthonormal eigenvectors.

    Raises
    ------
    DimensionError
        If `a` is not square.
    NonFiniteError
        If `a` has NaN or Inf entries.
    """
    a = _check_square(a)
    values, vectors = np.linalg.eigh(0.5 * (a + a.conj().T))
    return HermEig(values, vectors)


def solve_hpd(a, b):
    """Solve ``a X = b`` for Hermitian positive-definite `a`.

    A Cholesky factorisation is attempted first. When it fails the
    smallest eigenvalue is computed and reported in the raised error.

    Parameters
    ----------
    a : np.ndarray
        Hermitian positive-definite matrix of shape ``(n, n)``.
    b : np.ndarray
        Right-hand side with ``n`` rows (1-D or 2-D).

    Returns
    -------
    np.ndarray
        Solution with the shape of `b`.

    Raises
    ------
    DimensionError
        If `a` is not square or `b` has the wrong number of rows.
    SolverError
        If `a` is singular or indefinite.
    """
    a = _check_square(a)
    b = np.asarray(b)
    if b.shape[0] != a.shape[0]:
        raise DimensionError(f"right-hand side has {b.shape[0]} rows, expected {a.shape[0]}")
    a = 0.5 * (a + a.conj().T)
    try:
        factor = cho_factor(a, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        min_eig = float(np.linalg.eigvalsh(a)[0])
        raise SolverError(
            f"matrix is not positive definite (min eigenvalue {min_eig:.3e})",
            min_eig) from None
    return cho_solve(factor, b, check_finite=False)


def find_root_monotone(f: Callable[[float], float], lo: float, hi: float,
                       tol: float, max_iter: int | None = None) -> float:
    """Bisection root of a continuous monotone scalar function.

    Parameters
    ----------
    f : callable
        Real function of one real variable, monotone on ``[lo, hi]``.
    lo, hi : float
        Bracket ends with ``lo < hi``.
    tol : float
        Stop once ``|f(x)| <= tol`` or the bracket width drops below
        ``tol * max(1, |x|)``.
    max_iter : int, optional
        Iteration cap, 200 by default.

    Returns
    -------
    float
        Approximate root.

    Raises
    ------
    BracketError
        If ``f(lo)`` and ``f(hi)`` have the same strict sign.
    """
    if max_iter is None:
        max_iter = TOL["bisect_max_iter"]
    if not lo <= hi:
        raise BracketError(f"empty bracket [{lo}, {hi}]")
    f_lo = f(lo)
    if f_lo == 0:
        return lo
    f_hi = f(hi)
    if f_hi == 0:
        return hi
    if (f_lo > 0) == (f_hi > 0):
        raise BracketError(f"no sign change on [{lo}, {hi}]: f={f_lo:.3e}, {f_hi:.3e}")
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        x = 0.5 * (lo + hi)
        fx = f(x)
        if abs(fx) <= tol or (hi - lo) <= tol * max(1.0, abs(x)):
            return x
        if (fx > 0) == (f_lo > 0):
            lo, f_lo = x, fx
        else:
            hi = x
    return x
