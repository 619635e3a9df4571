"""Dense complex linear algebra and quadrature helpers.

Matrices are plain ``numpy`` arrays (row-major, complex128). The functions here
add the tolerance checks the rest of the package relies on.
"""
import warnings

import numpy as np
from scipy import integrate

HERMITIAN_TOL = 1e-12
FACTOR_TOL = 1e-10
MAX_CONDITION = 1e12
MAX_PANELS = 20000


class ConventionError(ValueError):
    """Input violates a structural convention (e.g. Hermiticity)."""


class SingularMatrixError(np.linalg.LinAlgError):
    """Matrix is singular or too ill-conditioned to solve against."""

    def __init__(self, message, condition=np.inf):
        super().__init__(message)
        self.condition = condition


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, value=None, error=None):
        super().__init__(message)
        self.value = value
        self.error = error


def hermiticity_residual(a):
    """Return ``max|A - A^H|`` relative to ``max|A|`` (0 for the zero matrix)."""
    a = np.asarray(a)
    scale = np.abs(a).max() if a.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.abs(a - a.conj().T).max() / scale)


def is_hermitian(a, tol=HERMITIAN_TOL):
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and hermiticity_residual(a) <= tol


def hermitian_part(a):
    a = np.asarray(a)
    return 0.5 * (a + a.conj().T)


def antihermitian_part(a):
    a = np.asarray(a)
    return 0.5 * (a - a.conj().T)


def hermitian_eigendecompose(a, tol=HERMITIAN_TOL):
    """Eigendecomposition of a Hermitian matrix.

    Parameters
    ----------
    a : (N, N) array_like
        Hermitian matrix; checked to ``tol`` relative to ``max|a|``.
    tol : float
        Hermiticity tolerance.

    Returns
    -------
    eigenvalues : (N,) float ndarray
        Ascending real eigenvalues.
    eigenvectors : (N, N) complex ndarray
        Unitary matrix ``U`` with ``a = U diag(eigenvalues) U^H``.

    Raises
    ------
    ConventionError
        If ``a`` is not square or not Hermitian within ``tol``.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ConventionError(f"expected a square matrix, got shape {a.shape}")
    resid = hermiticity_residual(a)
    if resid > tol:
        raise ConventionError(f"matrix is not Hermitian: relative residual {resid:.3e} > {tol:.1e}")
    # eigh reads only one triangle; symmetrize so both halves count
    return np.linalg.eigh(hermitian_part(a))


def solve_linear(a, b, max_condition=MAX_CONDITION):
    """Solve ``a x = b`` after checking the condition number of ``a``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ConventionError(f"expected a square matrix, got shape {a.shape}")
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > max_condition:
        raise SingularMatrixError(f"matrix condition estimate {cond:.3e} exceeds {max_condition:.1e}",
                                  condition=cond)
    return np.linalg.solve(a, b)


def adaptive_quadrature(f, lo, hi, tol=1e-10, points=None, max_panels=MAX_PANELS):
    """Adaptive Gauss-Kronrod integral of a real- or complex-valued function.

    Parameters
    ----------
    f : callable
        Integrand ``f(x)`` returning a real or complex scalar.
    lo, hi : float
        Finite integration limits.
    tol : float
        Absolute error target.
    points : sequence of float, optional
        Interior breakpoints (discontinuities, sharp peaks).
    max_panels : int
        Subdivision budget.

    Returns
    -------
    value : complex
    error : float
        Estimated absolute error (real and imaginary parts combined).

    Raises
    ------
    QuadratureError
        If the estimated error exceeds ``tol`` once the budget is spent.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if lo == hi:
        return 0j, 0.0
    if points is not None:
        points = [p for p in points if min(lo, hi) < p < max(lo, hi)] or None

    parts = []
    for component in (lambda x: np.real(f(x)), lambda x: np.imag(f(x))):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(component, lo, hi, epsabs=tol / 2, epsrel=0.0,
                                      limit=max_panels, points=points)
        parts.append((val, err))
    value = parts[0][0] + 1j * parts[1][0]
    error = float(np.hypot(parts[0][1], parts[1][1]))
    if not np.isfinite(value) or error > tol:
        raise QuadratureError(f"quadrature on [{lo}, {hi}] reached error {error:.3e} > {tol:.1e}",
                              value=value, error=error)
    return value, error
