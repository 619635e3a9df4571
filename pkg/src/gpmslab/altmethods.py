r"""Baseline constructions: naive Hermitization and quantized QNMs (qQNMs).

The naive guess replaces the residue matrix by :math:`|\tilde\omega_\mu|\delta_{\mu\nu}`.
The qQNM route continues each mode outside the slab with the background
Green's function, builds a radiative overlap :math:`S^{rad}(\omega)`, integrates
it against a windowed resonance factor into a matrix :math:`S`, and symmetrizes
the modes with the principal square root of :math:`S`.
"""
import logging
from dataclasses import dataclass

import numpy as np

from gpmslab.gpm import _resolvent_batch, pole_expansion_spectral_hermitized
from gpmslab.linalg import (adaptive_quadrature, hermitian_eigendecompose, hermitian_part,
                            hermiticity_residual, solve_linear)
from gpmslab.slab import DomainError, _check_inside, _mode_at, _mode_values

log = logging.getLogger(__name__)

CUTOFF_FACTOR = 14.0
S_HERMITIAN_TOL = 1e-6


def naive_spectral(qnms, x, xp, omega):
    """Hermitized pole correlator with ``T = diag(|omega_mu|)``."""
    t = np.diag(np.abs(qnms.positive_frequencies))
    return pole_expansion_spectral_hermitized(t, qnms, x, xp, omega)


def background_green(cavity, x, xp, omega):
    """``c/(2 i omega n_b) exp(i n_b omega |x - x'| / c)``, kept with its printed sign."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise DomainError("background_green requires omega > 0")
    sep = np.abs(np.asarray(x, float) - np.asarray(xp, float))
    val = cavity.c / (2j * omega * cavity.n_b) * np.exp(1j * cavity.n_b * omega * sep / cavity.c)
    return val[()] if np.ndim(val) == 0 else val


def _box_transform(q, length):
    """``int_{-L/2}^{L/2} exp(i q x) dx`` for complex ``q``."""
    return length * np.sinc(q * length / (2 * np.pi))


def _regularized_exterior(cavity, qnms, mu, x, omega):
    """Closed-form exterior continuation and its x-derivative.

    ``cavity`` supplies the contrast and background; ``qnms`` the mode.
    """
    qc = qnms.cavity
    kb = cavity.n_b * omega / cavity.c
    k = qc.n_r * qnms.frequency(mu) / qc.c
    amp = qnms.normalization[mu + qnms.big_m]
    s = np.exp(1j * np.pi * mu)
    pref = -(omega / cavity.c) ** 2 * (cavity.n_r**2 - cavity.n_b**2) * cavity.c / (2j * omega * cavity.n_b)
    length = qc.length
    if x > 0:
        integral = amp * (_box_transform(k - kb, length) + s * _box_transform(-k - kb, length))
        val = pref * np.exp(1j * kb * x) * integral
        return val, 1j * kb * val
    integral = amp * (_box_transform(k + kb, length) + s * _box_transform(kb - k, length))
    val = pref * np.exp(-1j * kb * x) * integral
    return val, -1j * kb * val


def regularized_qnm(cavity, qnms, lam, x, omega, method="quadrature", tol=1e-12):
    r"""Regularized mode :math:`\tilde F_\lambda(x, \omega)`.

    Inside the slab this is the QNM itself. Outside it is
    :math:`-(\omega^2/c^2)\int G_B(x, x', \omega)(n_R^2 - n_B^2)\tilde f_\lambda(x')\,dx'`,
    by quadrature or (``method="closed_form"``) analytically. The
    :math:`-\omega^2/c^2` factor makes :math:`\tilde F_\lambda(x, \tilde\omega_\lambda)`
    the outgoing continuation of the mode.

    ``lam`` is any mode index available in ``qnms``; ``cavity`` sets the
    refractive indices of the convolution (a homogeneous cavity gives zero).
    """
    if abs(lam) > qnms.big_m:
        raise ValueError(f"mode index {lam} not in -{qnms.big_m}..{qnms.big_m}")
    half = qnms.cavity.length / 2
    if abs(x) <= half:
        return complex(_mode_at(qnms.cavity, lam, x))
    if omega <= 0:
        raise DomainError("regularized_qnm outside the slab requires omega > 0")
    if method == "closed_form":
        return complex(_regularized_exterior(cavity, qnms, lam, x, omega)[0])
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    contrast = cavity.n_r**2 - cavity.n_b**2

    def integrand(s):
        return background_green(cavity, x, s, omega) * contrast * _mode_at(qnms.cavity, lam, s)

    val, _ = adaptive_quadrature(integrand, -half, half, tol=tol)
    return complex(-(omega / cavity.c) ** 2 * val)


def s_rad(cavity, qnms, lam, lamp, omega):
    r"""Radiative overlap from the boundary bracket of the regularized modes at :math:`x=\pm L/2`."""
    if omega <= 0:
        raise DomainError("s_rad requires omega > 0")
    half = qnms.cavity.length / 2
    total = 0j
    for sign in (1.0, -1.0):
        f1, d1 = _regularized_exterior(cavity, qnms, lam, sign * half, omega)
        f2, d2 = _regularized_exterior(cavity, qnms, lamp, sign * half, omega)
        total += sign * (d1 * np.conj(f2) - f1 * np.conj(d2))
    return complex(cavity.c**2 / (2j * omega**2) * total)


def cutoff_frequency(qnms, lam):
    return -CUTOFF_FACTOR * qnms.frequency(lam).imag


def cutoff_window(qnms, lam):
    """Support ``(lo, hi)`` of the Rect factor in :func:`a_cutoff` (``lo`` unclipped)."""
    w = qnms.frequency(lam).real
    wc = cutoff_frequency(qnms, lam)
    return w - 2 * wc / 3, w + 2 * wc


def a_cutoff(qnms, lam, omega):
    """Windowed resonance factor ``omega / (2 (w_lam - omega)) * Rect(u)``."""
    w = qnms.frequency(lam)
    wc = cutoff_frequency(qnms, lam)
    u = (omega - w.real) / (omega - w.real + 2 * wc)
    inside = -0.5 < u < 0.5
    return complex(omega / (2 * (w - omega))) if inside else 0j


def _s_entry(cavity, qnms, lam, lamp, tol):
    lo1, hi1 = cutoff_window(qnms, lam)
    lo2, hi2 = cutoff_window(qnms, lamp)
    lo, hi = max(lo1, lo2, 0.0), min(hi1, hi2)
    if hi <= lo:
        return 0j
    w1, w2 = qnms.frequency(lam).real, qnms.frequency(lamp).real
    norm = 2 / (np.pi * np.sqrt(w1 * w2))

    def integrand(om):
        if om <= 0:
            return 0j
        return norm * a_cutoff(qnms, lam, om) * np.conj(a_cutoff(qnms, lamp, om)) * s_rad(cavity, qnms, lam, lamp, om)

    val, _ = adaptive_quadrature(integrand, lo, hi, tol=tol, points=[w1, w2])
    return val


def s_matrix(cavity, qnms, tol=1e-10):
    """Normalization matrix of the qQNMs on the positive block.

    Every entry is integrated on its own, so Hermiticity is a genuine check;
    a residual above 1e-6 is logged and the matrix is symmetrized.
    """
    mus = qnms.positive_indices
    s = np.array([[_s_entry(cavity, qnms, a, b, tol) for b in mus] for a in mus], dtype=complex)
    resid = hermiticity_residual(s)
    if resid > S_HERMITIAN_TOL:
        log.warning("S matrix non-Hermitian (relative residual %.3e); symmetrizing", resid)
        s = hermitian_part(s)
    return s


def principal_sqrt(s):
    """Principal square root of a Hermitian matrix via its eigendecomposition."""
    lam, u = hermitian_eigendecompose(s, tol=S_HERMITIAN_TOL)
    return (u * np.sqrt(lam.astype(complex))) @ u.conj().T


@dataclass(frozen=True)
class QqnmParameters:
    qnms: object
    s_matrix: np.ndarray
    s_sqrt: np.ndarray
    x_matrix: np.ndarray
    real_frequencies: np.ndarray
    cutoffs: np.ndarray

    def symmetrized_modes(self, x):
        """``f^s_lam(x) = sum_l' S^{1/2}_{l' lam} sqrt(w_l'/w_lam) f_l'(x)``, shape ``x.shape + (M,)``."""
        _check_inside(self.qnms.cavity, x)
        f = _mode_values(self.qnms.cavity, self.qnms.positive_indices, x)
        w = self.real_frequencies
        weights = self.s_sqrt * np.sqrt(w[:, None] / w[None, :])
        return f @ weights


def build_qqnm(cavity, qnms, tol=1e-10, s=None):
    if s is None:
        s = s_matrix(cavity, qnms, tol=tol)
    root = principal_sqrt(s)
    xm = solve_linear(root, qnms.positive_frequencies[:, None] * root)
    w = qnms.positive_frequencies.real
    cuts = -CUTOFF_FACTOR * qnms.positive_frequencies.imag
    return QqnmParameters(qnms, s, root, xm, w, cuts)


def qqnm_spectral_grid(params, x, xp, omega):
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    fx = params.symmetrized_modes(np.atleast_1d(x))
    fxp = params.symmetrized_modes(np.atleast_1d(xp))
    sq = np.sqrt(params.real_frequencies)
    y = _resolvent_batch(params.x_matrix, omega, (fxp * sq).conj().T)
    return 0.5 * np.einsum("al,wlb->abw", fx * sq, y).imag


def qqnm_spectral(params, x, xp, omega):
    r""":math:`\tfrac12\operatorname{Im}\sum\sqrt{\omega_\lambda\omega_{\lambda'}}\,f^s_\lambda(x)(\mathcal X-\omega)^{-1}_{\lambda\lambda'}f^{s*}_{\lambda'}(x')`."""
    val = qqnm_spectral_grid(params, x, xp, omega)[0, 0]
    return float(val[0]) if np.ndim(omega) == 0 else val
