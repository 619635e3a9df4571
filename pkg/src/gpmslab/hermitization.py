r"""Solutions of the Hermitization condition for the slab QNMs.

The extended-domain condition
:math:`\tilde\omega_\mu \tilde f_\mu(x) = \sum_\nu \tilde T_{\mu\nu}\tilde f^*_\nu(x)`
is solved exactly by the anti-Hermitian :math:`T^{(1)}`, by the overlap matrix
:math:`T^{(2)}` and by any combination ``(1 - a) T1 + a T2``. The matrix used
for the pseudomodes is the Hermitian part of the positive block
(:math:`\mu, \nu \ge 1`), factorized as ``T^H = V V^H``.

Extended matrices are indexed by ``mu + M`` for ``mu = -M..M``.
"""
from dataclasses import dataclass

import numpy as np

from gpmslab.linalg import (FACTOR_TOL, adaptive_quadrature, hermitian_eigendecompose,
                            hermitian_part)
from gpmslab.slab import _check_inside, _mode_at, _mode_values

T2_AGREEMENT_TOL = 1e-8


class PositiveDefinitenessError(np.linalg.LinAlgError):
    """The Hermitian transformation matrix has non-positive eigenvalues."""

    def __init__(self, message, eigenvalues):
        super().__init__(message)
        self.eigenvalues = np.asarray(eigenvalues)


class ClosedFormMismatchError(AssertionError):
    """Closed-form and quadrature overlap matrices disagree."""


def _index_grids(mus):
    return np.meshgrid(mus, mus, indexing="ij")


def _slab_kernel(cavity, mu, nu):
    r"""Shared factor :math:`(1 + (-1)^{\mu-\nu}) / ((\mu-\nu)\pi + 2i\ln\alpha)`."""
    parity = 1.0 + (-1.0) ** (mu - nu)
    return parity / ((mu - nu) * np.pi + 2j * np.log(cavity.alpha))


def t1_matrix(qnms):
    """Anti-Hermitian solution ``T1[mu, nu] = omega_mu delta(mu, -nu)`` on the extended domain."""
    return np.diag(qnms.frequencies)[:, ::-1].copy()


def _t2_closed_form(qnms):
    cav = qnms.cavity
    mu, nu = _index_grids(qnms.indices)
    contrast = 2j * cav.n_r * cav.n_b / (cav.n_r**2 - cav.n_b**2)
    w = qnms.frequency(mu)
    return 0.5 * w * ((mu == -nu) - contrast * _slab_kernel(cav, mu, nu))


def _t2_quadrature(qnms, tol):
    cav = qnms.cavity
    half = cav.length / 2
    mus = qnms.indices
    out = np.empty((mus.size, mus.size), dtype=complex)
    for i, mu in enumerate(mus):
        for j, nu in enumerate(mus):
            def overlap(x):
                return cav.n_r**2 * _mode_at(cav, mu, x) * np.conj(_mode_at(cav, nu, x))
            val, _ = adaptive_quadrature(overlap, -half, half, tol=tol)
            out[i, j] = 0.5 * qnms.frequency(mu) * val
    return out


def t2_matrix(qnms, method="slab_closed_form", tol=1e-13):
    r"""Overlap solution :math:`T^{(2)}_{\mu\nu} = \tfrac{\tilde\omega_\mu}{2}\int n^2 \tilde f_\mu \tilde f^*_\nu\,dx`.

    Parameters
    ----------
    qnms : QnmSet
    method : {"slab_closed_form", "quadrature"}
        Closed-form slab result or direct adaptive quadrature over the slab.
    tol : float
        Absolute quadrature tolerance per entry (``"quadrature"`` only).
    """
    if method == "slab_closed_form":
        return _t2_closed_form(qnms)
    if method == "quadrature":
        return _t2_quadrature(qnms, tol)
    raise ValueError(f"unknown method {method!r}; expected 'slab_closed_form' or 'quadrature'")


def t2_agreement(qnms, tol=1e-13):
    """Largest entrywise closed-form vs quadrature difference, relative to ``max|T2|``."""
    closed = _t2_closed_form(qnms)
    quad = _t2_quadrature(qnms, tol)
    return float(np.abs(closed - quad).max() / np.abs(closed).max())


def verify_t2_closed_form(qnms, rtol=T2_AGREEMENT_TOL):
    """Raise :class:`ClosedFormMismatchError` if the two T2 routes disagree beyond ``rtol``."""
    err = t2_agreement(qnms)
    if err > rtol:
        raise ClosedFormMismatchError(f"closed-form T2 deviates from quadrature by {err:.3e} (> {rtol:.1e})")
    return err


def family_matrix(qnms, a_param=2.0, method="slab_closed_form"):
    """``(1 - a) T1 + a T2`` on the extended index domain."""
    return (1 - a_param) * t1_matrix(qnms) + a_param * t2_matrix(qnms, method=method)


def slab_exact_solution(qnms):
    """Printed closed form of the ``a = 2`` family member, free of ``delta(mu, -nu)`` terms."""
    cav = qnms.cavity
    mu, nu = _index_grids(qnms.indices)
    contrast = 2j * cav.n_r * cav.n_b / (cav.n_r**2 - cav.n_b**2)
    return -contrast * qnms.frequency(mu) * _slab_kernel(cav, mu, nu)


def slab_hermitian_closed_form(qnms):
    """Printed closed form of the Hermitian part of the positive block (units c/L)."""
    cav = qnms.cavity
    mu, nu = _index_grids(qnms.positive_indices)
    pref = np.pi * 1j * cav.n_b / (cav.n_r**2 - cav.n_b**2)
    return -(cav.c / cav.length) * (mu + nu) * pref * _slab_kernel(cav, mu, nu)


def extended_identity_residual(qnms, t, mu, x, include_zero=True):
    r"""Residual of :math:`\tilde\omega_\mu f_\mu(x) = \sum_{\nu=-M}^{M} T_{\mu\nu} f^*_\nu(x)`.

    Relative to :math:`|\tilde\omega_\mu f_\mu(x)|`, or absolute where that
    vanishes (below 1e-12, at a mode node). ``include_zero=False`` drops the
    ``nu = 0`` term from the sum.
    """
    _check_inside(qnms.cavity, x)
    if abs(mu) > qnms.big_m:
        raise ValueError(f"mu = {mu} outside the index range -{qnms.big_m}..{qnms.big_m}")
    row = np.asarray(t)[mu + qnms.big_m]
    lhs = qnms.frequency(mu) * _mode_at(qnms.cavity, mu, x)
    terms = row * np.conj(_mode_values(qnms.cavity, qnms.indices, x))
    if not include_zero:
        terms = np.where(qnms.indices == 0, 0, terms)
    rhs = np.sum(terms)
    diff = abs(lhs - rhs)
    return float(diff / abs(lhs)) if abs(lhs) > 1e-12 else float(diff)


def positive_block(t_extended, qnms):
    m = qnms.big_m
    return np.asarray(t_extended)[m + 1:, m + 1:]


def hermitian_block(t_extended, qnms):
    """Hermitian part of the ``mu, nu >= 1`` block of an extended matrix."""
    return hermitian_part(positive_block(t_extended, qnms))


def factorize_v(t_hermitian):
    """Canonical factor ``V = U diag(sqrt(lambda))`` with ``V V^H = t_hermitian``.

    Raises
    ------
    PositiveDefinitenessError
        If any eigenvalue is ``<= 0``; the spectrum is attached to the error.
    """
    eigvals, eigvecs = hermitian_eigendecompose(t_hermitian)
    if eigvals.size == 0 or eigvals[0] <= 0:
        raise PositiveDefinitenessError(
            f"T^H is not positive definite: smallest eigenvalue {eigvals[0] if eigvals.size else float('nan'):.6g}",
            eigvals)
    if np.allclose(t_hermitian, np.diag(np.diag(t_hermitian)), rtol=0, atol=0):
        # diagonal input: keep V diagonal and sorted like the input rather than eigh's order
        return np.diag(np.sqrt(np.diag(t_hermitian).real)).astype(complex)
    return eigvecs * np.sqrt(eigvals)


@dataclass(frozen=True)
class HermitizationSolution:
    """Transformation matrices for one choice of the family parameter ``a``."""

    a_param: complex
    t_extended: np.ndarray
    t_hermitian: np.ndarray
    eigenvalues: np.ndarray
    v_factor: np.ndarray

    @property
    def reconstruction_residual(self):
        v = self.v_factor
        scale = np.abs(self.t_hermitian).max()
        return float(np.abs(v @ v.conj().T - self.t_hermitian).max() / scale)


def solve_hermitization(qnms, a_param=2.0, method="slab_closed_form"):
    """Build ``T``, its Hermitian positive block and the factor ``V``.

    Raises :class:`PositiveDefinitenessError` when ``T^H`` is not positive definite.
    """
    t_ext = family_matrix(qnms, a_param, method=method)
    t_h = hermitian_block(t_ext, qnms)
    eigvals, _ = hermitian_eigendecompose(t_h)
    v = factorize_v(t_h)
    sol = HermitizationSolution(complex(a_param), t_ext, t_h, eigvals, v)
    resid = sol.reconstruction_residual
    if resid > FACTOR_TOL:
        raise np.linalg.LinAlgError(f"V V^H reconstruction residual {resid:.3e} exceeds {FACTOR_TOL:.1e}")
    return sol
