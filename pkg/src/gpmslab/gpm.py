r"""Generalized-pseudomode parameters and their spectral density.

Given the factor ``V`` of the Hermitized residue matrix, the pseudomode
profiles are :math:`\chi_\lambda(x) = \sum_\nu V_{\nu\lambda}\tilde f_\nu(x)`,
the effective non-Hermitian matrix is :math:`\mathbb H = V^{-1}\mathrm{diag}(\tilde\omega)V`
and the Lindblad matrices follow from :math:`\mathbb H = \omega - i(\kappa - \gamma)/2`.

All quantities use the positive QNM block ``mu = 1..M``.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np

from gpmslab.linalg import (MAX_CONDITION, SingularMatrixError, adaptive_quadrature,
                            antihermitian_part, hermitian_eigendecompose, hermitian_part,
                            solve_linear)
from gpmslab.slab import DomainError, _check_inside, _mode_values, pole_terms_spectral


class DecayWarning(RuntimeWarning):
    """The correlator has not decayed by the end of the integration horizon."""


def recover_chi_profiles(v, qnms, x):
    """All pseudomode profiles at ``x``: array of shape ``x.shape + (M,)``."""
    _check_inside(qnms.cavity, x)
    f = _mode_values(qnms.cavity, qnms.positive_indices, x)
    return f @ np.asarray(v)


def recover_chi(v, qnms, lam, x):
    r"""Pseudomode profile :math:`\chi_\lambda(x)` from :math:`\chi^* = V^\dagger \tilde f^*` (``lam`` is 1-based)."""
    if not 1 <= lam <= qnms.big_m:
        raise ValueError(f"lambda = {lam} outside 1..{qnms.big_m}")
    return recover_chi_profiles(v, qnms, x)[..., lam - 1]


def recover_chi_inverse_form(v, qnms, x):
    r"""Diagnostic profiles from :math:`\chi^* = V^{-1}\,\tilde\omega\tilde f`.

    Agrees with :func:`recover_chi_profiles` only as far as
    ``omega_mu f_mu = sum_nu T^H_{mu nu} f*_nu`` holds on the positive block.
    """
    _check_inside(qnms.cavity, x)
    g = qnms.positive_frequencies * _mode_values(qnms.cavity, qnms.positive_indices, x)
    y = solve_linear(v, np.atleast_2d(g).T).T
    return np.conj(y.reshape(np.shape(g)))


def effective_matrix(v, qnms):
    """``H = V^{-1} diag(omega) V``."""
    v = np.asarray(v, dtype=complex)
    return solve_linear(v, qnms.positive_frequencies[:, None] * v)


def recover_couplings(v, qnms):
    """Return ``(omega, kappa - gamma)`` with ``H = omega - i (kappa - gamma) / 2``."""
    h = effective_matrix(v, qnms)
    return hermitian_part(h), 2j * antihermitian_part(h)


def split_kappa_gamma(kappa_minus_gamma):
    """Split a Hermitian matrix into its positive and negative spectral parts (both PSD)."""
    lam, u = hermitian_eigendecompose(kappa_minus_gamma)
    pos = np.clip(lam, 0.0, None)
    neg = np.clip(-lam, 0.0, None)
    uh = u.conj().T
    return (u * pos) @ uh, (u * neg) @ uh


@dataclass(frozen=True)
class GpmParameters:
    """Pseudomode parameter set. Matrices are in units of c/L."""

    qnms: object
    v_factor: np.ndarray
    h_matrix: np.ndarray
    omega_matrix: np.ndarray
    kappa_matrix: np.ndarray
    gamma_matrix: np.ndarray
    t_hermitian: np.ndarray = field(default=None, repr=False)

    @property
    def size(self):
        return self.h_matrix.shape[0]

    def chi(self, x):
        return recover_chi_profiles(self.v_factor, self.qnms, x)

    def reconstructed_h(self):
        return self.omega_matrix - 0.5j * (self.kappa_matrix - self.gamma_matrix)


def build_gpm(qnms, v, t_hermitian=None):
    """Recover all pseudomode parameters from ``V``."""
    v = np.asarray(v, dtype=complex)
    if v.shape != (qnms.big_m, qnms.big_m):
        raise ValueError(f"V has shape {v.shape}, expected ({qnms.big_m}, {qnms.big_m})")
    h = effective_matrix(v, qnms)
    omega = hermitian_part(h)
    kappa, gamma = split_kappa_gamma(2j * antihermitian_part(h))
    return GpmParameters(qnms, v, h, omega, kappa, gamma, t_hermitian)


def from_solution(qnms, solution):
    return build_gpm(qnms, solution.v_factor, solution.t_hermitian)


def _resolvent_batch(h, omega, rhs):
    """Solve ``(H - w) Y = rhs`` for every ``w``; shape ``(nw, M, k)``."""
    m = h.shape[0]
    a = h[None, :, :] - np.asarray(omega)[:, None, None] * np.eye(m)[None]
    cond = np.linalg.cond(a)
    if not np.all(np.isfinite(cond)) or cond.max() > MAX_CONDITION:
        bad = int(np.argmax(np.where(np.isfinite(cond), cond, np.inf)))
        raise SingularMatrixError(f"resolvent at omega = {omega[bad]!r} is ill-conditioned "
                                  f"(condition {cond[bad]:.3e})", condition=cond[bad])
    return np.linalg.solve(a, np.broadcast_to(rhs, (a.shape[0],) + rhs.shape))


def gpm_correlator_grid(params, x, xp, omega):
    r"""Complex correlator :math:`\tfrac12\chi(x)(\mathbb H - \omega)^{-1}\chi^\dagger(x')`.

    ``x``, ``xp``, ``omega`` are 1D arrays; result has shape ``(nx, nxp, nw)``.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    chi_x = params.chi(np.atleast_1d(x))
    chi_xp = params.chi(np.atleast_1d(xp))
    if params.size == 0:
        return np.zeros((chi_x.shape[0], chi_xp.shape[0], omega.size), dtype=complex)
    y = _resolvent_batch(params.h_matrix, omega, chi_xp.conj().T)
    return 0.5 * np.einsum("al,wlb->abw", chi_x, y)


def gpm_correlator(params, x, xp, omega):
    val = gpm_correlator_grid(params, x, xp, omega)[0, 0]
    return complex(val[0]) if np.ndim(omega) == 0 else val


def gpm_spectral(params, x, xp, omega):
    """Imaginary part of :func:`gpm_correlator`, in units hbar/(eps0 L)."""
    val = gpm_correlator_grid(params, x, xp, omega)[0, 0].imag
    return float(val[0]) if np.ndim(omega) == 0 else val


def pole_expansion_spectral_hermitized(t_hermitian, qnms, x, xp, omega):
    r""":math:`\tfrac12\operatorname{Im}\sum_{\mu\nu\ge1} f_\mu(x) T^H_{\mu\nu} f^*_\nu(x')/(\tilde\omega_\mu - \omega)`."""
    _check_inside(qnms.cavity, x, xp)
    if qnms.big_m == 0:
        return 0.0 if np.ndim(omega) == 0 else np.zeros(np.shape(omega))
    mus = qnms.positive_indices
    fx = _mode_values(qnms.cavity, mus, np.atleast_1d(x))
    fxp = _mode_values(qnms.cavity, mus, np.atleast_1d(xp))
    val = pole_terms_spectral(qnms.positive_frequencies, fx, fxp.conj(), t_hermitian, omega)
    return float(val[0, 0, 0]) if np.ndim(omega) == 0 else val[0, 0]


# --- time-domain oracle -------------------------------------------------------

def filon_weights(theta):
    """Filon alpha, beta, gamma weights, with series for small ``|theta|``."""
    th = np.asarray(theta, dtype=float)
    small = np.abs(th) < 0.2
    t = np.where(small, 1.0, th)
    s, c = np.sin(t), np.cos(t)
    alpha = (t**2 + t * s * c - 2 * s**2) / t**3
    beta = 2 * (t * (1 + c**2) - 2 * s * c) / t**3
    gamma = 4 * (s - t * c) / t**3
    t2 = th**2
    alpha_s = 2 * th**3 / 45 - 2 * th**5 / 315 + 2 * th**7 / 4725
    beta_s = 2 / 3 + 2 * t2 / 15 - 4 * t2**2 / 105 + 2 * t2**3 / 567
    gamma_s = 4 / 3 - 2 * t2 / 15 + t2**2 / 210 - t2**3 / 11340
    return (np.where(small, alpha_s, alpha), np.where(small, beta_s, beta),
            np.where(small, gamma_s, gamma))


@dataclass(frozen=True)
class OracleResult:
    omega: np.ndarray
    deviation: np.ndarray
    transform: np.ndarray
    tail_estimate: float


def time_domain_oracle(params, omega_grid, horizon=200.0, step=0.01, tail_tol=1e-6):
    """Compare the resolvent ``i (w - H)^{-1}`` with the one-sided transform of ``C(t)``.

    ``C`` solves ``C' = -i H C`` with ``C(0) = I`` (classical RK4, fixed step);
    the transform uses Filon's rule on ``[0, horizon]``. A :class:`DecayWarning`
    is raised when the neglected tail ``|C(T)| / min|Im eig H|`` exceeds ``tail_tol``.
    """
    h_mat = np.asarray(params.h_matrix if hasattr(params, "h_matrix") else params, dtype=complex)
    omega = np.atleast_1d(np.asarray(omega_grid, dtype=float))
    m = h_mat.shape[0]
    n = int(round(horizon / step))
    n += n % 2
    k = -1j * h_mat

    phase_step = np.exp(1j * omega * step)[:, None, None]
    phase = np.ones((omega.size, 1, 1), dtype=complex)
    c = np.eye(m, dtype=complex)
    first = phase * c
    even = np.zeros((omega.size, m, m), dtype=complex)
    odd = np.zeros_like(even)
    for i in range(n + 1):
        term = phase * c
        if i % 2:
            odd += term
        else:
            even += term
        if i == n:
            break
        k1 = k @ c
        k2 = k @ (c + 0.5 * step * k1)
        k3 = k @ (c + 0.5 * step * k2)
        k4 = k @ (c + step * k3)
        c = c + step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        phase = phase * phase_step
    last = term
    even -= 0.5 * (first + last)

    a, b, g = filon_weights(omega * step)
    a, b, g = (w[:, None, None] for w in (a, b, g))
    transform = step * (-1j * a * (last - first) + b * even + g * odd)

    eye = np.eye(m)[None]
    reference = 1j * np.linalg.inv(omega[:, None, None] * eye - h_mat[None])
    deviation = np.abs(transform - reference).reshape(omega.size, -1).max(axis=1)

    decay = np.abs(np.linalg.eigvals(h_mat).imag).min()
    tail = float(np.abs(c).max() / decay) if decay > 0 else np.inf
    if tail > tail_tol:
        warnings.warn(f"correlator not decayed at horizon {n * step:g}: tail estimate {tail:.3e}",
                      DecayWarning, stacklevel=2)
    return OracleResult(omega, deviation, transform, tail)


# --- Kramers-Kronig -----------------------------------------------------------

def _excluded_integral(spectral, omega, lo, hi, delta, tol, points):
    def integrand(w):
        return spectral(w) / (w - omega)
    left, _ = adaptive_quadrature(integrand, lo, omega - delta, tol=tol, points=points)
    right, _ = adaptive_quadrature(integrand, omega + delta, hi, tol=tol, points=points)
    return (left + right).real


def kramers_kronig_check(spectral, omega, cutoff, lower=0.0, exclusion=None, levels=4,
                         tol=1e-9, points=None):
    r"""Re-part reconstruction :math:`\frac1\pi\mathcal P\int_{lo}^{cut} \operatorname{Im}C(\omega')/(\omega'-\omega)\,d\omega'`.

    The principal value uses a symmetric exclusion ``[omega - d, omega + d]``
    (``d = 1e-3 * cutoff`` by default). The exclusion error is odd in ``d``;
    it is removed by Richardson extrapolation over ``d, d/2, d/4, ...``.
    """
    delta = 1e-3 * cutoff if exclusion is None else exclusion
    if not lower + delta < omega < cutoff - delta:
        raise DomainError(f"omega = {omega!r} must lie more than {delta:g} inside [{lower}, {cutoff}]")
    table = [_excluded_integral(spectral, omega, lower, cutoff, delta / 2**j, tol, points)
             for j in range(levels)]
    # error series in delta, delta^3, delta^5, ...
    for order in range(levels - 1):
        p = 2 ** (2 * order + 1)
        table = [(p * table[j + 1] - table[j]) / (p - 1) for j in range(len(table) - 1)]
    return table[0] / np.pi
