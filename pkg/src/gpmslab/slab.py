r"""Quasi-normal modes and the exact Green's function of a 1D dielectric slab.

The slab occupies :math:`[-L/2, L/2]` with refractive index ``n_r`` and is
embedded in a background of index ``n_b``. Its quasi-normal modes (QNMs) are

.. math::

   \tilde f_\mu(x) = A_\mu\left(e^{i n_R \tilde\omega_\mu x/c}
                     + e^{-i n_R \tilde\omega_\mu x/c + i\mu\pi}\right),\qquad
   \tilde\omega_\mu = (\mu\pi + i\ln\alpha)\,\frac{c}{L n_R},

with :math:`A_\mu = (e^{i\mu\pi/2} n_R\sqrt{2L})^{-1}` and
:math:`\alpha = |n_R - n_B|/(n_R + n_B)`.

Spectral densities are returned in units of :math:`\hbar/(\epsilon_0 L)` with
:math:`\hbar = \epsilon_0 = 1`. The Green's function solves
:math:`[-\partial_x^2 - n^2(x)\omega^2/c^2]G = \delta(x - x')` with outgoing
boundary conditions, so that :math:`\operatorname{Im} G(x, x, \omega) > 0`
for :math:`\omega > 0`.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from gpmslab.linalg import adaptive_quadrature

_EDGE_TOL = 1e-12


class DomainError(ValueError):
    """Position or frequency outside the domain of an evaluator."""


@dataclass(frozen=True)
class SlabCavity:
    """Geometry and refractive indices of the slab resonator.

    ``allow_homogeneous`` admits ``n_r == n_b``; only the Green's-function
    self-tests use it; QNM construction rejects it.
    """

    n_r: float
    n_b: float = 1.0
    length: float = 1.0
    c: float = 1.0
    allow_homogeneous: bool = False

    def __post_init__(self):
        for name in ("n_r", "n_b", "length", "c"):
            val = getattr(self, name)
            if not np.isfinite(val) or val <= 0:
                raise ValueError(f"{name} must be positive and finite, got {val!r}")
        if self.n_r == self.n_b and not self.allow_homogeneous:
            raise ValueError("n_r == n_b gives a vanishing reflection (alpha = 0); "
                             "pass allow_homogeneous=True for Green's-function self-tests")
        if not self.homogeneous and self.alpha >= 1.0 - 1e-15:
            raise ValueError(f"alpha = {self.alpha!r} is numerically 1; index contrast is degenerate")

    @property
    def homogeneous(self):
        return self.n_r == self.n_b

    @property
    def alpha(self):
        return abs(self.n_r - self.n_b) / (self.n_r + self.n_b)

    @property
    def reflection(self):
        """Amplitude reflection coefficient ``(n_r - n_b)/(n_r + n_b)``."""
        return (self.n_r - self.n_b) / (self.n_r + self.n_b)

    def index(self, x):
        """Refractive index profile ``n(x)``."""
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x) <= self.length / 2, self.n_r, self.n_b)

    def inside(self, x):
        return np.all(np.abs(np.asarray(x, dtype=float)) <= self.length / 2 * (1 + _EDGE_TOL))


def _check_inside(cavity, *xs):
    for x in xs:
        if not cavity.inside(x):
            raise DomainError(f"position {x!r} lies outside the slab [-{cavity.length / 2}, {cavity.length / 2}]")


def _check_qnm_cavity(cavity):
    if cavity.homogeneous:
        raise ValueError("QNMs are undefined for a homogeneous medium (n_r == n_b)")
    if cavity.n_r < cavity.n_b:
        # the closed-form modes assume a positive reflection coefficient
        raise ValueError("closed-form slab QNMs require n_r > n_b")


def qnm_frequency(cavity, mu):
    """Complex QNM frequency ``(mu*pi + i ln(alpha)) c / (L n_r)`` (vectorized in ``mu``)."""
    _check_qnm_cavity(cavity)
    mu = np.asarray(mu)
    return (mu * np.pi + 1j * np.log(cavity.alpha)) * cavity.c / (cavity.length * cavity.n_r)


def qnm_normalization(cavity, mu):
    mu = np.asarray(mu)
    return 1.0 / (np.exp(0.5j * np.pi * mu) * cavity.n_r * np.sqrt(2 * cavity.length))


def _mode_values(cavity, mu, x):
    """``f_mu(x)`` broadcast over ``x[..., None]`` and ``mu[None, ...]``; no domain check."""
    mu = np.asarray(mu)
    k = cavity.n_r * qnm_frequency(cavity, mu) / cavity.c
    x = np.asarray(x, dtype=float)[..., None]
    return qnm_normalization(cavity, mu) * (np.exp(1j * k * x) + np.exp(-1j * k * x + 1j * np.pi * mu))


def _mode_at(cavity, mu, x):
    """Scalar ``f_mu(x)`` for scalar ``mu`` and ``x``."""
    return complex(_mode_values(cavity, mu, x).ravel()[0])


def _mode_derivatives(cavity, mu, x):
    mu = np.asarray(mu)
    k = cavity.n_r * qnm_frequency(cavity, mu) / cavity.c
    x = np.asarray(x, dtype=float)[..., None]
    return qnm_normalization(cavity, mu) * 1j * k * (np.exp(1j * k * x) - np.exp(-1j * k * x + 1j * np.pi * mu))


def qnm_mode(cavity, mu, x):
    """QNM ``f_mu(x)`` inside the slab.

    Scalar ``mu`` and ``x`` give a complex scalar; array inputs give an array of
    shape ``x.shape + mu.shape``.
    """
    _check_qnm_cavity(cavity)
    _check_inside(cavity, x)
    val = _mode_values(cavity, mu, x)
    if np.ndim(mu) == 0:
        val = val[..., 0]
    return val[()] if np.ndim(val) == 0 else val


def round_trip_residual(cavity, mu):
    """``|r^2 exp(2 i n_r omega_mu L / c) - 1|`` for each ``mu``."""
    w = qnm_frequency(cavity, mu)
    return np.abs(cavity.reflection**2 * np.exp(2j * cavity.n_r * w * cavity.length / cavity.c) - 1.0)


def silver_mueller_residual(cavity, mu):
    r"""Mismatch of the outgoing-wave condition at :math:`x = \pm L/2`.

    The exterior continuation of ``f_mu`` to the right is
    ``f_mu(L/2) exp(i n_b omega_mu (x - L/2)/c)``; continuity of ``f`` and
    ``f'`` at the boundary therefore requires
    ``f'(L/2) = i n_b omega_mu f(L/2) / c`` (and the mirrored relation at
    ``-L/2``). Returns the larger relative mismatch of the two ends.
    """
    _check_qnm_cavity(cavity)
    mu = np.atleast_1d(mu)
    w = qnm_frequency(cavity, mu)
    kb = cavity.n_b * w / cavity.c
    edge = cavity.length / 2
    out = []
    for sign in (1.0, -1.0):
        f = _mode_values(cavity, mu, sign * edge)
        df = _mode_derivatives(cavity, mu, sign * edge)
        out.append(np.abs(df - sign * 1j * kb * f) / np.abs(kb * f))
    return np.maximum(*out)


@dataclass(frozen=True)
class QnmSet:
    """QNMs with indices ``-M..M`` of a slab cavity.

    The positive block ``1..M`` enters the meromorphic approximation; the full
    range (``mu = 0`` included) enters the extended-domain identities.
    """

    cavity: SlabCavity
    big_m: int

    def __post_init__(self):
        _check_qnm_cavity(self.cavity)
        if int(self.big_m) != self.big_m or self.big_m < 0:
            raise ValueError(f"truncation M must be a non-negative integer, got {self.big_m!r}")

    @cached_property
    def indices(self):
        return np.arange(-self.big_m, self.big_m + 1)

    @cached_property
    def positive_indices(self):
        return np.arange(1, self.big_m + 1)

    @cached_property
    def frequencies(self):
        return qnm_frequency(self.cavity, self.indices)

    @cached_property
    def positive_frequencies(self):
        return qnm_frequency(self.cavity, self.positive_indices)

    @cached_property
    def normalization(self):
        return qnm_normalization(self.cavity, self.indices)

    def frequency(self, mu):
        return qnm_frequency(self.cavity, mu)

    def mode(self, mu, x):
        return qnm_mode(self.cavity, mu, x)

    def modes(self, x, block="full"):
        """Mode values on the chosen index block, shape ``x.shape + (n_modes,)``."""
        _check_inside(self.cavity, x)
        return _mode_values(self.cavity, self._block(block), x)

    def g_tilde(self, mu, x):
        """``omega_mu f_mu(x)``: residue factor paired with the pole."""
        return self.frequency(mu) * self.mode(mu, x)

    def g_bar(self, mu, x):
        """``conj(f_mu(x))``: companion residue factor."""
        return np.conj(self.mode(mu, x))

    def _block(self, block):
        if block == "full":
            return self.indices
        if block == "positive_only":
            return self.positive_indices
        raise ValueError(f"unknown block {block!r}; expected 'full' or 'positive_only'")


def _green_coefficients(cavity, omega):
    """Coefficients of the right-outgoing solution inside the slab.

    ``u_right(x) = a e^{i k x} + b e^{-i k x}`` for ``|x| <= L/2`` and
    ``e^{i k_b x}`` for ``x >= L/2``; ``u_left(x) = u_right(-x)``.
    """
    omega = np.asarray(omega, dtype=float)
    k = cavity.n_r * omega / cavity.c
    kb = cavity.n_b * omega / cavity.c
    ratio = cavity.n_b / cavity.n_r
    half = cavity.length / 2
    a = 0.5 * (1 + ratio) * np.exp(1j * (kb - k) * half)
    b = 0.5 * (1 - ratio) * np.exp(1j * (kb + k) * half)
    return k, a, b


def _green_values(cavity, x, xp, omega):
    """Vectorized Green's function; ``x``, ``xp``, ``omega`` broadcast together."""
    x, xp, omega = np.broadcast_arrays(np.asarray(x, float), np.asarray(xp, float), np.asarray(omega, float))
    k, a, b = _green_coefficients(cavity, omega)
    lo = np.minimum(x, xp)
    hi = np.maximum(x, xp)
    u_left = a * np.exp(-1j * k * lo) + b * np.exp(1j * k * lo)
    u_right = a * np.exp(1j * k * hi) + b * np.exp(-1j * k * hi)
    wronskian = 2j * k * (a**2 - b**2)
    return -u_left * u_right / wronskian


def exact_green(cavity, x, xp, omega):
    """Exact outgoing Green's function ``G(x, x', omega)`` for positions inside the slab."""
    _check_inside(cavity, x, xp)
    if np.any(np.asarray(omega) <= 0):
        raise DomainError("exact_green requires omega > 0")
    val = _green_values(cavity, x, xp, omega)
    return val[()] if val.ndim == 0 else val


def exact_spectral(cavity, x, xp, omega):
    """Continuum spectral density ``theta(omega) omega^2 Im G(x, x', omega) / c^2``.

    Vectorized over broadcastable ``x``, ``xp`` and ``omega``; exactly zero for
    ``omega <= 0``.
    """
    _check_inside(cavity, x, xp)
    omega = np.asarray(omega, dtype=float)
    safe = np.where(omega > 0, omega, 1.0)
    g = _green_values(cavity, x, xp, safe)
    val = np.where(omega > 0, safe**2 * g.imag / cavity.c**2, 0.0)
    return float(val) if val.ndim == 0 else val


def pole_terms_spectral(freqs, left, right, t_matrix, omega):
    r"""Evaluate :math:`\tfrac12\operatorname{Im}\sum_{\mu\nu} l_\mu(x) T_{\mu\nu} r_\nu(x')/(\tilde\omega_\mu - \omega)`.

    ``left`` has shape ``(nx, n)``, ``right`` shape ``(nxp, n)`` and ``omega``
    shape ``(nw,)``; the result has shape ``(nx, nxp, nw)``. ``t_matrix=None``
    means ``T = I``.
    """
    freqs = np.asarray(freqs)
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if t_matrix is not None:
        right = right @ np.asarray(t_matrix).T
    inv = 1.0 / (freqs[None, :] - omega[:, None])
    return 0.5 * np.einsum("am,wm,bm->abw", left, inv, right).imag


def pole_spectral(qnms, x, xp, omega, block="full"):
    r"""Pole-expansion spectral density built from the QNMs.

    ``block="full"`` sums :math:`\mu = -M..M`; ``"positive_only"`` keeps the
    poles with positive real part (:math:`\mu \ge 1`), i.e. the meromorphic
    approximation, which does not vanish for :math:`\omega < 0`.
    """
    _check_inside(qnms.cavity, x, xp)
    mus = qnms._block(block)
    if mus.size == 0:
        return 0.0
    freqs = qnms.frequency(mus)
    fx = _mode_values(qnms.cavity, mus, np.atleast_1d(x))
    fxp = _mode_values(qnms.cavity, mus, np.atleast_1d(xp))
    # residues pair f_mu(x) f_mu(x') without conjugation
    val = pole_terms_spectral(freqs, fx * freqs, fxp, None, omega)
    return float(val[0, 0, 0]) if np.ndim(omega) == 0 else val[0, 0]


def completeness_check(qnms, testfn, x, tol=1e-11):
    r"""Deviation :math:`|\varphi(x) - \tfrac{n_R^2}{2}\sum_\mu f_\mu(x)\int f_\mu\varphi|`."""
    cav = qnms.cavity
    _check_inside(cav, x)
    half = cav.length / 2
    total = 0j
    for mu in qnms.indices:
        proj, _ = adaptive_quadrature(lambda s: _mode_at(cav, mu, s) * testfn(s), -half, half, tol=tol)
        total += _mode_at(cav, mu, x) * proj
    return float(abs(testfn(x) - 0.5 * cav.n_r**2 * total))


def overcompleteness_check(qnms, x, xp, include_zero=True):
    r"""Partial sum :math:`\sum_{|\mu|\le M} f_\mu(x) f_\mu(x')/\tilde\omega_\mu`, which tends to 0."""
    _check_inside(qnms.cavity, x, xp)
    mus = qnms.indices if include_zero else qnms.indices[qnms.indices != 0]
    fx = _mode_values(qnms.cavity, mus, x)
    fxp = _mode_values(qnms.cavity, mus, xp)
    return complex(np.sum(fx * fxp / qnms.frequency(mus)))
