"""Duhamel integral operator and Picard iteration on a single time slab.

A slab covers [t_start, t_start + T] with M+1 equispaced quadrature nodes.
One Picard sweep maps node values v(tau_m) to

    exp(i xi^3 tau_m) phi_hat - integral_0^tau_m exp(i xi^3 (tau_m - tau))
                                * Nhat(v(tau)) d tau

where Nhat is the spectral form of d/dx(u^2/2 + u^3/3).  Time integrals
use composite Simpson weights on the node grid (odd node counts fall back
to a 3/8 panel, all rules locally fourth order).  Iterating from the free
Airy evolution contracts to the slab solution when the step length passed
the certified admissibility conditions in :mod:`gardnercert.stepping`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import TYPE_CHECKING

import numpy as np

from . import kernels
from .errors import NonlinearOverflowError, PicardDivergenceError, QuadratureNodeError
from .grid import (
    GridSpec,
    SpectralFunction,
    _dealias_mask,
    _forward_mult,
    _hs_weights,
    _inverse_mult,
    _wavenumbers,
    _xi_cubed,
    as_sobolev,
)

if TYPE_CHECKING:  # pragma: no cover
    from .stepping import StepPlan

OVERFLOW_GUARD = 1e100
DIVERGENCE_RUN = 3


@dataclass(frozen=True, eq=False)
class TimeSlab:
    """Field values at the quadrature nodes of one step [t_start, t_start+T]."""

    t_start: float
    length: float
    nodes: np.ndarray
    values: tuple[SpectralFunction, ...]

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=np.float64)
        if nodes.ndim != 1 or len(nodes) != len(self.values):
            raise ValueError("node count must match value count")
        if len(nodes) < 2 or not np.all(np.diff(nodes) > 0):
            raise ValueError("nodes must be strictly increasing")
        grids = {v.grid for v in self.values}
        if len(grids) != 1:
            raise ValueError("all slab values must share one grid")
        object.__setattr__(self, "nodes", nodes)

    @property
    def grid(self) -> GridSpec:
        return self.values[0].grid

    @property
    def end_value(self) -> SpectralFunction:
        return self.values[-1]


@dataclass(frozen=True, eq=False)
class IterationReport:
    """Measured Picard diffs against the a-priori geometric bound.

    diffs[j] is the sup over nodes of the H^s distance between sweeps j+1
    and j; predicted_bound[j] = 2^-j (3+T)^(1/2) ||phi||_s.
    """

    diffs: np.ndarray
    ratios: np.ndarray
    J_used: int
    predicted_bound: np.ndarray
    bound_satisfied: bool
    quad_estimate: float


def required_iterations(r: float, T: float, eps: float) -> int:
    """Smallest J >= 0 with 2^-J (3+T)^(1/2) r <= eps."""
    if eps <= 0:
        raise ValueError(f"tolerance must be positive, got {eps}")
    if r < 0 or not math.isfinite(r):
        raise ValueError(f"norm bound must be finite and nonnegative, got {r}")
    level = math.sqrt(3.0 + T) * r
    j = 0
    while level > eps and j < 1100:
        level *= 0.5
        j += 1
    return j


@lru_cache(maxsize=None)
def quadrature_weights(num_panels: int, spacing: float) -> np.ndarray:
    """Weight matrix W with row m integrating [0, tau_m] over all nodes.

    Even m: composite Simpson.  Odd m >= 3: one 3/8 panel then Simpson.
    m = 1: the quadratic through nodes 0..2 integrated over the first
    subinterval, h (5 f0 + 8 f1 - f2) / 12.
    """
    m_total = num_panels
    if m_total < 2 or m_total % 2 != 0:
        raise QuadratureNodeError(f"node panel count must be even and >= 2, got {m_total}")
    h = spacing
    w = np.zeros((m_total + 1, m_total + 1))
    w[1, 0:3] = np.array([5.0, 8.0, -1.0]) * (h / 12.0)
    for m in range(2, m_total + 1):
        if m % 2 == 0:
            w[m, 0 : m + 1] = _simpson_row(m, h)
        else:
            w[m, 0:4] = np.array([1.0, 3.0, 3.0, 1.0]) * (3.0 * h / 8.0)
            if m > 3:
                w[m, 3 : m + 1] += _simpson_row(m - 3, h)
    w.setflags(write=False)
    return w


def _simpson_row(panels: int, h: float) -> np.ndarray:
    row = np.full(panels + 1, 2.0)
    row[1::2] = 4.0
    row[0] = row[-1] = 1.0
    return row * (h / 3.0)


@lru_cache(maxsize=None)
def _node_phases(grid: GridSpec, num_panels: int, spacing: float) -> np.ndarray:
    """exp(i xi^3 tau_m) for every node, shape (M+1, N)."""
    taus = spacing * np.arange(num_panels + 1)
    ph = np.exp(1j * np.outer(taus, _xi_cubed(grid)))
    ph.setflags(write=False)
    return ph


def _nonlinear_hat(grid: GridSpec, coeffs: np.ndarray) -> np.ndarray:
    """Spectral d/dx(u^2/2 + u^3/3), dealiased on both sides."""
    mask = _dealias_mask(grid)
    u = np.fft.ifft(_inverse_mult(grid) * (mask * coeffs)).real
    w = kernels.nonlinear_terms(u)
    if not np.isfinite(w).all() or np.abs(u).max() > OVERFLOW_GUARD:
        raise NonlinearOverflowError(float(np.abs(u).max()))
    return _flux_mult(grid) * np.fft.fft(w)


@lru_cache(maxsize=None)
def _flux_mult(grid: GridSpec) -> np.ndarray:
    """Forward scaling, x-derivative, and output dealiasing in one multiplier."""
    m = _forward_mult(grid) * (1j * _wavenumbers(grid)) * _dealias_mask(grid)
    m = np.ascontiguousarray(m)
    m.setflags(write=False)
    return m


def nonlinearity(v: SpectralFunction) -> SpectralFunction:
    """Pseudospectral evaluation of the flux derivative d/dx(u^2/2 + u^3/3)."""
    return SpectralFunction(v.grid, _nonlinear_hat(v.grid, v.coeffs))


def _stacked_nonlinear(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    nhat = np.empty_like(values)
    for m in range(values.shape[0]):
        nhat[m] = _nonlinear_hat(grid, values[m])
    return nhat


def _slab_spacing(slab: TimeSlab) -> float:
    """Node spacing; the quadrature rules require an equispaced grid."""
    gaps = np.diff(slab.nodes)
    spacing = float(gaps[0])
    if not np.allclose(gaps, spacing, rtol=1e-12, atol=0.0):
        raise QuadratureNodeError("slab nodes must be equispaced")
    return spacing


def duhamel_integral(slab: TimeSlab, t: float) -> SpectralFunction:
    """Quadrature of int_0^t exp(i xi^3 (t-tau)) Nhat(v(tau)) dtau, t a node."""
    num_panels = len(slab.nodes) - 1
    if num_panels % 2 != 0:
        raise QuadratureNodeError(f"slab must carry an even panel count, got {num_panels}")
    matches = np.isclose(slab.nodes, t, rtol=0.0, atol=1e-12 * max(1.0, slab.length))
    if not matches.any():
        raise QuadratureNodeError(f"t={t} is not a quadrature node of the slab")
    m = int(np.argmax(matches))
    grid = slab.grid
    spacing = _slab_spacing(slab)
    weights = quadrature_weights(num_panels, spacing)
    phases = _node_phases(grid, num_panels, spacing)
    values = np.stack([v.coeffs for v in slab.values])
    nhat = _stacked_nonlinear(grid, values)
    integrals = kernels.duhamel_combine(weights, phases, nhat)
    return SpectralFunction(grid, integrals[m])


def duhamel_operator(slab: TimeSlab, phi: SpectralFunction) -> TimeSlab:
    """One sweep: free Airy flow of phi minus the Duhamel integral, per node."""
    if phi.grid != slab.grid:
        raise ValueError("initial data and slab live on different grids")
    num_panels = len(slab.nodes) - 1
    if num_panels % 2 != 0:
        raise QuadratureNodeError(f"slab must carry an even panel count, got {num_panels}")
    spacing = _slab_spacing(slab)
    weights = quadrature_weights(num_panels, spacing)
    phases = _node_phases(slab.grid, num_panels, spacing)
    values = np.stack([v.coeffs for v in slab.values])
    nhat = _stacked_nonlinear(slab.grid, values)
    integrals = kernels.duhamel_combine(weights, phases, nhat)
    new_values = phases * phi.coeffs[None, :] - integrals
    return TimeSlab(
        slab.t_start,
        slab.length,
        slab.nodes,
        tuple(SpectralFunction(slab.grid, row) for row in new_values),
    )


def free_slab(phi: SpectralFunction, t_start: float, T: float, M: int) -> TimeSlab:
    """The iteration seed: pure Airy evolution of phi at every node."""
    spacing = T / M
    phases = _node_phases(phi.grid, M, spacing)
    return TimeSlab(
        t_start,
        T,
        spacing * np.arange(M + 1),
        tuple(SpectralFunction(phi.grid, row) for row in phases * phi.coeffs[None, :]),
    )


def picard_solve(
    phi: SpectralFunction,
    plan: "StepPlan",
    s,
    stop_tol: float | None = None,
    t_start: float = 0.0,
) -> tuple[TimeSlab, IterationReport]:
    """Iterate the Duhamel operator from the free-flow seed.

    Certified plans run exactly ``plan.iterations`` sweeps and check each
    measured diff against the geometric bound 2^-j (3+T)^(1/2) ||phi||_s
    with slack ``CERT_SLACK``; violation clears ``bound_satisfied`` rather
    than raising.  With ``stop_tol`` set (fast mode) the sweep loop exits
    as soon as the measured diff falls below it, ``plan.iterations``
    acting as a cap.
    """
    from .stepping import CERT_SLACK  # local import to avoid a cycle

    idx = as_sobolev(s)
    grid = phi.grid
    M = plan.nodes
    if M % 2 != 0 or M < 2:
        raise QuadratureNodeError(f"quadrature node panel count must be even, got {M}")
    T = plan.length
    spacing = T / M
    weights = quadrature_weights(M, spacing)
    phases = _node_phases(grid, M, spacing)
    hs_w = _hs_weights(grid, idx.s)

    r = math.sqrt(kernels.weighted_sumsq(hs_w, phi.coeffs))
    free = phases * phi.coeffs[None, :]
    v = free.copy()

    bound_base = math.sqrt(3.0 + T) * r
    noise_floor = 1e-14 * max(1.0, r)
    diffs: list[float] = []
    rising = 0
    nhat = None
    for j in range(plan.iterations):
        nhat = _stacked_nonlinear(grid, v)
        v_new = free - kernels.duhamel_combine(weights, phases, nhat)
        diff = float(kernels.node_diff_norms(hs_w, v_new, v).max())
        diffs.append(diff)
        v = v_new
        if len(diffs) >= 2 and diff > diffs[-2] and diff > noise_floor:
            rising += 1
            if rising >= DIVERGENCE_RUN:
                raise PicardDivergenceError(
                    f"diffs rose {DIVERGENCE_RUN} sweeps in a row "
                    f"(last {diff:.3e}); use a smaller step length than {T:.3e}"
                )
        else:
            rising = 0
        if stop_tol is not None and (diff <= stop_tol or diff <= noise_floor * 10.0):
            break

    j_used = len(diffs)
    diffs_arr = np.asarray(diffs)
    predicted = bound_base * 0.5 ** np.arange(j_used)
    bound_ok = bool(np.all(diffs_arr <= predicted * (1.0 + CERT_SLACK)))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(diffs_arr[:-1] > 0.0, diffs_arr[1:] / diffs_arr[:-1], 0.0)

    quad_est = _quadrature_estimate(grid, weights, phases, nhat, hs_w, M, spacing)
    slab = TimeSlab(
        t_start,
        T,
        spacing * np.arange(M + 1),
        tuple(SpectralFunction(grid, row) for row in v),
    )
    report = IterationReport(
        diffs=diffs_arr,
        ratios=ratios,
        J_used=j_used,
        predicted_bound=predicted,
        bound_satisfied=bound_ok,
        quad_estimate=quad_est,
    )
    return slab, report


def _quadrature_estimate(
    grid: GridSpec,
    weights: np.ndarray,
    phases: np.ndarray,
    nhat: np.ndarray | None,
    hs_w: np.ndarray,
    M: int,
    spacing: float,
) -> float:
    """Richardson gap between full- and half-resolution endpoint integrals.

    Uncertified diagnostic; reuses the last sweep's nonlinearity values.
    """
    if nhat is None or M % 4 != 0:
        return 0.0
    g = np.conj(phases) * nhat
    full = phases[M] * (weights[M] @ g)
    half_w = quadrature_weights(M // 2, 2.0 * spacing)
    half = phases[M] * (half_w[M // 2] @ g[::2])
    gap = math.sqrt(kernels.weighted_sumsq(hs_w, np.ascontiguousarray(full - half)))
    return gap / 15.0
