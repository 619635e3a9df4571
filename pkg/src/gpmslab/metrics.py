"""Spectral-density grids for every method and their comparison metrics."""
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from gpmslab import altmethods, gpm, hermitization
from gpmslab.slab import QnmSet, exact_spectral, pole_terms_spectral, _mode_values

METHODS = ("exact", "gpm", "pole_full", "pole_positive", "naive", "qqnm")


class GridMismatchError(ValueError):
    """Two grids do not share their axes."""


class GridEvaluationError(RuntimeError):
    pass


def axis(spec):
    """``(min, max, count)`` -> strictly increasing axis; ``count == 1`` requires ``min == max``."""
    lo, hi, n = spec
    n = int(n)
    if n < 1:
        raise ValueError(f"grid spec {spec!r} is empty")
    if n == 1:
        if lo != hi:
            raise ValueError(f"single-point grid spec {spec!r} needs min == max")
        return np.array([float(lo)])
    if not hi > lo:
        raise ValueError(f"grid spec {spec!r} must have max > min")
    return np.linspace(float(lo), float(hi), n)


@dataclass(frozen=True)
class SpectralGrid:
    """Tabulated spectral density.

    ``values`` has shape ``(nx, nw)`` when ``diagonal`` (``xp == x``), else
    ``(nx, nxp, nw)``.
    """

    x_values: np.ndarray
    xp_values: np.ndarray
    omega_values: np.ndarray
    values: np.ndarray
    method: str
    cavity: object
    big_m: int
    diagonal: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("x_values", "xp_values", "omega_values"):
            ax = getattr(self, name)
            if ax.size > 1 and np.any(np.diff(ax) <= 0):
                raise ValueError(f"{name} must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid contains non-finite values")

    def full_values(self):
        """Values as ``(nx, nxp, nw)``; diagonal grids give ``nxp = 1``."""
        return self.values[:, None, :] if self.diagonal else self.values

    def nodes(self):
        """Iterate ``(x, xp, omega, value)`` with x outer, xp middle, omega inner."""
        vals = self.full_values()
        for i, x in enumerate(self.x_values):
            xps = (x,) if self.diagonal else self.xp_values
            for j, xp in enumerate(xps):
                for k, w in enumerate(self.omega_values):
                    yield x, xp, w, vals[i, j, k]


def _pole_positions(qnms, x):
    return _mode_values(qnms.cavity, qnms.positive_indices, x)


def _evaluator(cavity, big_m, method, a_param=2.0, qqnm_tol=1e-10, qqnm_params=None):
    """Return ``f(x_arr, xp_arr, omega_arr) -> (nx, nxp, nw)`` for one method."""
    if method == "exact":
        def ev(x, xp, w):
            return exact_spectral(cavity, x[:, None, None], xp[None, :, None], w[None, None, :])
        return ev
    qnms = QnmSet(cavity, big_m)
    if method == "gpm":
        params = gpm.from_solution(qnms, hermitization.solve_hermitization(qnms, a_param))
        return lambda x, xp, w: gpm.gpm_correlator_grid(params, x, xp, w).imag
    if method in ("pole_full", "pole_positive"):
        mus = qnms.indices if method == "pole_full" else qnms.positive_indices
        freqs = qnms.frequency(mus)

        def ev(x, xp, w):
            if mus.size == 0:
                return np.zeros((x.size, xp.size, w.size))
            fx = _mode_values(cavity, mus, x)
            return pole_terms_spectral(freqs, fx * freqs, _mode_values(cavity, mus, xp), None, w)
        return ev
    if method == "naive":
        t = np.diag(np.abs(qnms.positive_frequencies))

        def ev(x, xp, w):
            return pole_terms_spectral(qnms.positive_frequencies, _pole_positions(qnms, x),
                                       _pole_positions(qnms, xp).conj(), t, w)
        return ev
    if method == "qqnm":
        params = qqnm_params or altmethods.build_qqnm(cavity, qnms, tol=qqnm_tol)
        return lambda x, xp, w: altmethods.qqnm_spectral_grid(params, x, xp, w)
    raise ValueError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")


def build_grid(cavity, big_m, method, x_spec, xp_spec, omega_spec, jobs=None, a_param=2.0,
               qqnm_params=None):
    """Evaluate ``method`` on a grid.

    ``x_spec``/``omega_spec`` are ``(min, max, count)``; ``xp_spec`` is the same
    or ``"diag"``. Work is split over x rows across ``jobs`` threads (numpy
    releases the GIL inside the batched solves).
    """
    xs = axis(x_spec)
    ws = axis(omega_spec)
    diagonal = isinstance(xp_spec, str)
    if diagonal and xp_spec != "diag":
        raise ValueError(f"xp spec must be (min, max, count) or 'diag', got {xp_spec!r}")
    xps = xs if diagonal else axis(xp_spec)
    ev = _evaluator(cavity, big_m, method, a_param=a_param, qqnm_params=qqnm_params)

    def row(i):
        x = xs[i:i + 1]
        try:
            out = ev(x, x if diagonal else xps, ws)
        except Exception as exc:
            raise GridEvaluationError(f"{method} failed at x = {float(x[0])!r}: {exc}") from exc
        return out[0, 0] if diagonal else out[0]

    jobs = jobs or os.cpu_count() or 1
    if jobs == 1:
        rows = [row(i) for i in range(xs.size)]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(row, range(xs.size)))
    values = np.array(rows, dtype=float)
    return SpectralGrid(xs, xps, ws, values, method, cavity, big_m, diagonal)


def _region_mask(grid, region):
    vals = grid.full_values()
    if region is None:
        return np.ones(vals.shape, dtype=bool)
    x = grid.x_values[:, None, None]
    xp = x if grid.diagonal else grid.xp_values[None, :, None]
    w = grid.omega_values[None, None, :]
    return np.broadcast_to(region(x, xp, w), vals.shape)


def box_region(x=None, xp=None, omega=None):
    """Predicate selecting closed intervals ``(lo, hi)`` on each axis (``None`` = all)."""
    def pred(xv, xpv, wv):
        mask = np.ones(np.broadcast_shapes(xv.shape, xpv.shape, wv.shape), dtype=bool)
        for lim, v in ((x, xv), (xp, xpv), (omega, wv)):
            if lim is not None:
                mask &= (v >= lim[0]) & (v <= lim[1])
        return mask
    return pred


def compare_grids(a, b, region=None):
    """Metrics of ``a`` against the reference ``b`` over ``region``.

    Returns ``max_abs_diff``, ``rel_l2`` (``|a - b|_2 / |b|_2``) and
    ``peak_of_reference`` (``max|b|``).
    """
    for name in ("x_values", "xp_values", "omega_values"):
        ax_a, ax_b = getattr(a, name), getattr(b, name)
        if ax_a.shape != ax_b.shape or not np.array_equal(ax_a, ax_b):
            raise GridMismatchError(f"grids differ along {name}")
    if a.diagonal != b.diagonal:
        raise GridMismatchError("cannot compare a diagonal grid with a full grid")
    mask = _region_mask(b, region)
    if not mask.any():
        raise ValueError("region selects no grid nodes")
    va = a.full_values()[mask]
    vb = b.full_values()[mask]
    diff = va - vb
    ref_norm = np.linalg.norm(vb)
    return {
        "max_abs_diff": float(np.abs(diff).max()),
        "rel_l2": float(np.linalg.norm(diff) / ref_norm) if ref_norm > 0 else float(np.linalg.norm(diff)),
        "peak_of_reference": float(np.abs(vb).max()),
    }


def swap_asymmetry(grid, region=None):
    """``max |g(x, x') - g(x', x)|`` for a square full grid with ``x_values == xp_values``."""
    if grid.diagonal or not np.array_equal(grid.x_values, grid.xp_values):
        raise GridMismatchError("swap asymmetry needs a square position-position grid")
    vals = grid.values
    diff = np.abs(vals - vals.transpose(1, 0, 2))
    mask = _region_mask(grid, region)
    return float(diff[mask].max())
