"""Certified step-size selection, time marching, and the error ledger.

The admissible step length comes from two explicit inequalities in the
contraction coefficient a(s, T) = sqrt(s) 2^s sqrt(T) + 1:

  contraction (Picard sweeps halve):
      a(s,T) sqrt(T) [8 (3+T)^(3/2) r^2 + 4 (3+T) r] <= 1/2
  stability (data perturbations amplify by at most 2 sqrt(3+T)):
      a(s,T) sqrt(T) (3+T)^(3/2) (12 r^2 + 16 r + 6) <= 1/2

where r bounds the H^s norm of the step's initial data.  Both left sides
are monotone in T and r, so the largest admissible dyadic step 2^-q is
found by a scan.  Certified marches re-measure r each restart, evaluate
the conditions at r+1 (slack absorbing within-step norm drift), and
accumulate an additive error ledger:

  picard: sum over steps of 2^-J (3+T)^(1/2) r   (iteration truncation)
  data:   input uncertainty, multiplied by 2 (3+T)^(1/2) each step.

Fast mode keeps the same Picard machinery on a fixed user step, stops
sweeps by measured diff, and reports the ledger as uncertified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NormCapError, StepSelectionError
from .grid import (
    RealGridFunction,
    SobolevIndex,
    as_sobolev,
    forward,
    inverse,
    sobolev_norm,
)
from .picard import picard_solve, required_iterations

CERT_SLACK = 0.25
DEFAULT_NODES = 8
FAST_SWEEP_CAP = 200
MAX_DYADIC_EXP = 60
NORM_CAP_FACTOR = 10.0


@dataclass(frozen=True)
class StepPlan:
    """One step's certified (or user-fixed) parameters."""

    length: float
    iterations: int
    nodes: int = DEFAULT_NODES
    mode: str = "certified"

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError(f"step length must be positive, got {self.length}")
        if self.mode not in ("certified", "fast"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class ErrorLedger:
    """Additive certified error components plus uncertified diagnostics."""

    picard: float = 0.0
    data: float = 0.0
    steps_taken: int = 0
    diagnostics: dict = field(default_factory=dict)

    @property
    def certified_total(self) -> float:
        return self.picard + self.data

    def copy(self) -> "ErrorLedger":
        return ErrorLedger(self.picard, self.data, self.steps_taken, dict(self.diagnostics))


@dataclass(frozen=True, eq=False)
class SolveResult:
    """Snapshots at requested times with norms, ledgers, and flags."""

    times: list[float]
    snapshots: list[RealGridFunction]
    norms: list[float]
    ledger: ErrorLedger
    plan_log: list[StepPlan]
    mode: str
    sobolev_index: SobolevIndex
    certificate_violated: bool
    snapshot_ledgers: list[ErrorLedger]
    snapshot_flags: list[bool]

    @property
    def certified(self) -> bool:
        return self.mode == "certified" and not self.certificate_violated


def contraction_coefficient(s, T: float) -> float:
    """sqrt(s) * 2^s * sqrt(T) + 1."""
    idx = as_sobolev(s)
    if T <= 0:
        raise ValueError(f"step length must be positive, got {T}")
    return math.sqrt(idx.s) * (2.0**idx.s) * math.sqrt(T) + 1.0


def contraction_condition(s, T: float, r: float) -> bool:
    """Admissibility for the geometric Picard bound at data norm r."""
    a = contraction_coefficient(s, T)
    lhs = a * math.sqrt(T) * (8.0 * (3.0 + T) ** 1.5 * r * r + 4.0 * (3.0 + T) * r)
    return lhs <= 0.5


def stability_condition(s, T: float, r: float) -> bool:
    """Admissibility for the data-perturbation bound at data norm r."""
    a = contraction_coefficient(s, T)
    lhs = a * math.sqrt(T) * (3.0 + T) ** 1.5 * (12.0 * r * r + 16.0 * r + 6.0)
    return lhs <= 0.5


def choose_step(s, r: float) -> float:
    """Largest dyadic T = 2^-q, q <= 60, passing both admissibility conditions."""
    if not math.isfinite(r) or r < 0:
        raise ValueError(f"norm bound must be finite and nonnegative, got {r}")
    for q in range(MAX_DYADIC_EXP + 1):
        T = 2.0**-q
        if contraction_condition(s, T, r) and stability_condition(s, T, r):
            return T
    raise StepSelectionError(
        f"no dyadic step down to 2^-{MAX_DYADIC_EXP} is admissible at r={r:.3e}; "
        "data norm too large for certified double-precision operation"
    )


def reflect(f: RealGridFunction) -> RealGridFunction:
    """Spatial reflection about x = 0: sample index i -> (N - i) mod N."""
    return RealGridFunction(f.grid, np.roll(f.samples[::-1], 1))


def march_forward(
    phi: RealGridFunction,
    t_target: float,
    eps: float,
    s,
    mode: str = "certified",
    dt: float | None = None,
    snapshot_times: list[float] | None = None,
    input_uncertainty: int | None = None,
    nodes: int = DEFAULT_NODES,
    norm_cap_factor: float = NORM_CAP_FACTOR,
) -> SolveResult:
    """March to t_target >= 0 by restarted certified (or fixed) steps.

    Each restart re-measures r = ||state||_s, picks the step, runs the
    Picard solve, and extends the ledger.  Steps are clipped so every
    requested snapshot time is hit exactly.  The per-step iteration
    budget equidistributes eps over the horizon: eps_step = eps * T / t_target.
    """
    idx = as_sobolev(s)
    if t_target < 0:
        raise ValueError("march_forward handles t >= 0; use solve_ivp for t < 0")
    if eps <= 0:
        raise ValueError(f"tolerance must be positive, got {eps}")
    if mode == "certified" and idx.diagnostic:
        raise ValueError(f"certified mode requires Sobolev index s >= 3, got {idx.s}")
    if mode == "fast" and (dt is None or dt <= 0):
        raise ValueError("fast mode requires a positive step length dt")

    targets = _snapshot_schedule(t_target, snapshot_times)
    ledger = ErrorLedger()
    if input_uncertainty is not None:
        ledger.data = 2.0 ** (-input_uncertainty)
    r0 = sobolev_norm(forward(phi), idx)
    norm_cap = norm_cap_factor * max(r0, 1e-300)

    times: list[float] = []
    snapshots: list[RealGridFunction] = []
    norms: list[float] = []
    snapshot_ledgers: list[ErrorLedger] = []
    snapshot_flags: list[bool] = []
    plan_log: list[StepPlan] = []
    violated = False

    state = forward(phi)
    t_now = 0.0
    for t_next in targets:
        if t_next == 0.0:
            _emit(times, snapshots, norms, snapshot_ledgers, snapshot_flags,
                  0.0, phi, sobolev_norm(state, idx), ledger, violated)
            continue
        while t_next - t_now > 1e-12 * max(1.0, t_next):
            r = sobolev_norm(state, idx)
            if r > norm_cap:
                raise NormCapError(
                    f"norm {r:.3e} exceeded safety cap {norm_cap:.3e} "
                    f"({norm_cap_factor} x initial); no a-priori growth bound is available"
                )
            remaining = t_next - t_now
            if mode == "certified":
                T = min(choose_step(idx, r + 1.0), remaining)
            else:
                T = min(dt, remaining)
            eps_step = eps * T / t_target
            if mode == "certified":
                plan = StepPlan(T, required_iterations(r, T, eps_step), nodes, mode)
                slab, report = picard_solve(state, plan, idx, t_start=t_now)
                if not report.bound_satisfied:
                    violated = True
                ledger.picard += 0.5**plan.iterations * math.sqrt(3.0 + T) * r
            else:
                plan = StepPlan(T, FAST_SWEEP_CAP, nodes, mode)
                slab, report = picard_solve(state, plan, idx, stop_tol=eps_step, t_start=t_now)
                ledger.picard += float(report.diffs[-1]) if report.J_used else 0.0
                plan = replace(plan, iterations=report.J_used)
            ledger.data *= 2.0 * math.sqrt(3.0 + T)
            ledger.steps_taken += 1
            _accumulate_diagnostics(ledger, report)
            plan_log.append(plan)
            state = slab.end_value
            t_now = t_next if remaining <= T else t_now + T
        u = inverse(state)
        _update_state_diagnostics(ledger, state, u, idx)
        _emit(times, snapshots, norms, snapshot_ledgers, snapshot_flags,
              t_next, u, sobolev_norm(state, idx), ledger, violated)

    return SolveResult(
        times=times,
        snapshots=snapshots,
        norms=norms,
        ledger=ledger,
        plan_log=plan_log,
        mode=mode,
        sobolev_index=idx,
        certificate_violated=violated,
        snapshot_ledgers=snapshot_ledgers,
        snapshot_flags=snapshot_flags,
    )


def solve_ivp(
    phi: RealGridFunction,
    t: float,
    eps: float,
    s,
    mode: str = "certified",
    **kwargs,
) -> SolveResult:
    """Solve the initial-value problem at any finite time.

    Negative times use the reflection conjugation: reflect the data,
    march forward to -t, and reflect every snapshot back.
    """
    if not math.isfinite(t):
        raise ValueError(f"target time must be finite, got {t}")
    if t >= 0:
        return march_forward(phi, t, eps, s, mode=mode, **kwargs)
    snap = kwargs.pop("snapshot_times", None)
    mirrored = sorted(-x for x in snap) if snap is not None else None
    fwd = march_forward(reflect(phi), -t, eps, s, mode=mode, snapshot_times=mirrored, **kwargs)
    order = list(reversed(range(len(fwd.times))))
    return SolveResult(
        times=[-fwd.times[i] for i in order],
        snapshots=[reflect(fwd.snapshots[i]) for i in order],
        norms=[fwd.norms[i] for i in order],
        ledger=fwd.ledger,
        plan_log=fwd.plan_log,
        mode=fwd.mode,
        sobolev_index=fwd.sobolev_index,
        certificate_violated=fwd.certificate_violated,
        snapshot_ledgers=[fwd.snapshot_ledgers[i] for i in order],
        snapshot_flags=[fwd.snapshot_flags[i] for i in order],
    )


def _snapshot_schedule(t_target: float, snapshot_times: list[float] | None) -> list[float]:
    if snapshot_times is None:
        return [t_target]
    out = sorted(set(float(t) for t in snapshot_times))
    for t in out:
        if t < 0 or t > t_target:
            raise ValueError(f"snapshot time {t} outside [0, {t_target}]")
    if not out or out[-1] != t_target:
        out.append(t_target)
    return out


def _emit(times, snapshots, norms, ledgers, flags, t, u, norm, ledger, violated):
    times.append(t)
    snapshots.append(u)
    norms.append(norm)
    ledgers.append(ledger.copy())
    flags.append(violated)


def _accumulate_diagnostics(ledger: ErrorLedger, report) -> None:
    d = ledger.diagnostics
    d["quadrature_estimate"] = d.get("quadrature_estimate", 0.0) + report.quad_estimate


def _update_state_diagnostics(ledger: ErrorLedger, state, u, idx) -> None:
    d = ledger.diagnostics
    n = u.grid.num_points
    d["boundary_abs_max"] = max(abs(float(u.samples[0])), abs(float(u.samples[-1])))
    high = np.abs(state.grid.mode_numbers) > n // 4
    total = sobolev_norm(state, idx)
    if total > 0.0:
        from .grid import SpectralFunction

        tail = SpectralFunction(state.grid, np.where(high, state.coeffs, 0.0))
        d["alias_energy"] = sobolev_norm(tail, idx) / total
    else:
        d["alias_energy"] = 0.0
