"""Command-line entry point: configure a run, solve, write records.

Output is a stream of json-lines by default: one isolated metadata header
line, then one record per snapshot carrying the field (or a side-file
reference for large grids), its H^s norm, the running error ledger, a
run-length-encoded plan log, and flags.  The record schema is versioned
as "gardner-certified/1" and documented in the README.  CSV output keeps
the scalar columns only.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import kernels, profiles
from .errors import GardnerCertError, ProfileFileError, UsageError
from .grid import GridSpec, RealGridFunction, forward, sobolev_norm
from .oracle import ifrk4_solve
from .stepping import SolveResult, solve_ivp

SCHEMA = "gardner-certified/1"
INLINE_SAMPLE_LIMIT = 4096


@dataclass
class RunConfig:
    profile_kind: str
    profile_params: tuple
    s: int = 3
    t_target: float = 0.0
    eps: float = 1e-4
    half_length: float = 30.0
    num_points: int = 512
    mode: str = "fast"
    fast_dt: float | None = 1e-3
    snapshot_times: list[float] | None = None
    output: str | None = None
    fmt: str = "json-lines"
    compare: bool = False
    input_uncertainty: int | None = None
    extra: dict = field(default_factory=dict)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); keep 2 for flags
        raise UsageError(message)


def _build_parser() -> _Parser:
    p = _Parser(
        prog="gardner-solve",
        description="Solve the Gardner (combined KdV) initial-value problem "
        "with certified or fast Picard stepping.",
    )
    p.add_argument("--profile", help="gaussian:a,w,c | sech:a,w,c | soliton:c,x0 | file:PATH")
    p.add_argument("--s", type=int, default=3, help="Sobolev index (default 3)")
    p.add_argument("--t", type=float, default=0.0, help="target time, any sign")
    p.add_argument("--eps", type=float, default=1e-4, help="error budget (default 1e-4)")
    p.add_argument("--grid", default="30,512", help="L,N (default 30,512; N a power of two)")
    p.add_argument("--mode", default="fast:1e-3", help="certified | fast:dt (default fast:1e-3)")
    p.add_argument("--snapshots", default=None, help="comma-separated snapshot times")
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.add_argument("--format", dest="fmt", default="json-lines", choices=["json-lines", "csv"])
    p.add_argument("--compare", action="store_true", help="append reference-solver distances")
    p.add_argument(
        "--uncertainty",
        type=int,
        default=None,
        help="input data accurate to 2^-n in H^s; seeds the data ledger",
    )
    return p


def parse_config(argv: list[str]) -> RunConfig:
    """Parse and validate; raises UsageError listing every violation."""
    args = _build_parser().parse_args(argv)
    problems: list[str] = []

    kind, params = "", ()
    if not args.profile:
        problems.append("--profile is required (gaussian:a,w,c | sech:a,w,c | soliton:c,x0 | file:PATH)")
    else:
        try:
            kind, params = _parse_profile(args.profile)
        except ValueError as e:
            problems.append(str(e))

    half_length, num_points = 30.0, 512
    try:
        half_length, num_points = _parse_grid(args.grid)
    except ValueError as e:
        problems.append(str(e))

    mode, fast_dt = "fast", 1e-3
    try:
        mode, fast_dt = _parse_mode(args.mode)
    except ValueError as e:
        problems.append(str(e))

    if args.eps <= 0:
        problems.append(f"--eps must be positive, got {args.eps}")
    if args.s < 0:
        problems.append(f"--s must be nonnegative, got {args.s}")
    if mode == "certified" and args.s < 3:
        problems.append(
            f"--mode certified requires Sobolev index s >= 3 (certified operation "
            f"is only established for integer s >= 3), got s={args.s}"
        )
    if num_points < 8 or num_points & (num_points - 1):
        problems.append(f"grid N must be a power of two >= 8, got {num_points}")
    if half_length <= 0:
        problems.append(f"grid L must be positive, got {half_length}")

    snapshot_times = None
    if args.snapshots:
        try:
            snapshot_times = [float(x) for x in args.snapshots.split(",") if x.strip()]
        except ValueError:
            problems.append(f"--snapshots must be comma-separated reals, got {args.snapshots!r}")
        if snapshot_times:
            lo, hi = min(0.0, args.t), max(0.0, args.t)
            bad = [x for x in snapshot_times if x < lo or x > hi]
            if bad:
                problems.append(f"snapshot times {bad} outside [{lo}, {hi}]")
    if args.uncertainty is not None and args.uncertainty < 0:
        problems.append(f"--uncertainty must be a nonnegative integer, got {args.uncertainty}")
    if kind == "file" and args.uncertainty is None:
        pass  # exact file input is allowed; uncertainty is opt-in
    if num_points > INLINE_SAMPLE_LIMIT and args.out is None and args.fmt == "json-lines":
        problems.append(
            f"N={num_points} exceeds the inline sample limit {INLINE_SAMPLE_LIMIT}; "
            "--out is required so side files have a base path"
        )

    if problems:
        raise UsageError("invalid configuration:\n  " + "\n  ".join(problems))

    return RunConfig(
        profile_kind=kind,
        profile_params=params,
        s=args.s,
        t_target=args.t,
        eps=args.eps,
        half_length=half_length,
        num_points=num_points,
        mode=mode,
        fast_dt=fast_dt,
        snapshot_times=snapshot_times,
        output=args.out,
        fmt=args.fmt,
        compare=args.compare,
        input_uncertainty=args.uncertainty,
    )


def _parse_profile(text: str) -> tuple[str, tuple]:
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    if kind == "file":
        if not rest:
            raise ValueError("profile 'file' needs a path, e.g. file:data.txt")
        return kind, (rest,)
    arity = {"gaussian": 3, "sech": 3, "soliton": 2}.get(kind)
    if arity is None:
        raise ValueError(f"unknown profile kind {kind!r}")
    try:
        vals = tuple(float(x) for x in rest.split(",")) if rest else ()
    except ValueError:
        raise ValueError(f"profile parameters must be reals, got {rest!r}") from None
    if len(vals) != arity:
        raise ValueError(f"profile {kind!r} takes {arity} parameters, got {len(vals)}")
    return kind, vals


def _parse_grid(text: str) -> tuple[float, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"--grid must be L,N, got {text!r}")
    try:
        return float(parts[0]), int(parts[1])
    except ValueError:
        raise ValueError(f"--grid must be L,N with N an integer, got {text!r}") from None


def _parse_mode(text: str) -> tuple[str, float | None]:
    if text == "certified":
        return "certified", None
    if text.startswith("fast"):
        _, _, dt_text = text.partition(":")
        if not dt_text:
            raise ValueError("fast mode needs a step, e.g. fast:1e-3")
        dt = float(dt_text)
        if dt <= 0:
            raise ValueError(f"fast step must be positive, got {dt}")
        return "fast", dt
    raise ValueError(f"--mode must be 'certified' or 'fast:dt', got {text!r}")


def read_profile_file(path: str, grid: GridSpec) -> RealGridFunction:
    """Two-column (x, u) on exactly the run grid, or N samples one per line."""
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as e:
        raise ProfileFileError(f"cannot read {path}: {e}") from None
    xs: list[float] = []
    us: list[float] = []
    ncols = None
    for lineno, line in enumerate(lines, start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        parts = body.split()
        if ncols is None:
            ncols = len(parts)
            if ncols not in (1, 2):
                raise ProfileFileError(f"{path}:{lineno}: expected 1 or 2 columns, got {ncols}")
        if len(parts) != ncols:
            raise ProfileFileError(f"{path}:{lineno}: inconsistent column count")
        try:
            vals = [float(x) for x in parts]
        except ValueError:
            raise ProfileFileError(f"{path}:{lineno}: not a number: {body!r}") from None
        if not all(math.isfinite(v) for v in vals):
            raise ProfileFileError(f"{path}:{lineno}: non-finite value")
        if ncols == 2:
            xs.append(vals[0])
            us.append(vals[1])
        else:
            us.append(vals[0])
    if len(us) != grid.num_points:
        raise ProfileFileError(
            f"{path}: {len(us)} samples but the run grid has {grid.num_points} points"
        )
    if xs:
        mismatch = np.abs(np.asarray(xs) - grid.x)
        worst = int(np.argmax(mismatch))
        if mismatch[worst] > 1e-12:
            raise ProfileFileError(
                f"{path}: x column does not match the run grid "
                f"(row {worst + 1}: {xs[worst]!r} vs {grid.x[worst]!r})"
            )
    return RealGridFunction(grid, np.asarray(us))


def build_profile(config: RunConfig, grid: GridSpec) -> RealGridFunction:
    kind, p = config.profile_kind, config.profile_params
    if kind == "gaussian":
        return profiles.gaussian(grid, *p)
    if kind == "sech":
        return profiles.sech(grid, *p)
    if kind == "soliton":
        return profiles.soliton(grid, *p)
    if kind == "file":
        return read_profile_file(p[0], grid)
    raise UsageError(f"unknown profile kind {kind!r}")


def _rle_plans(plans) -> list[dict]:
    out: list[dict] = []
    for plan in plans:
        entry = {
            "length": plan.length,
            "iterations": plan.iterations,
            "nodes": plan.nodes,
            "mode": plan.mode,
        }
        if out and all(out[-1][k] == entry[k] for k in entry):
            out[-1]["count"] += 1
        else:
            out.append({**entry, "count": 1})
    return out


def _oracle_distances(
    phi: RealGridFunction, result: SolveResult, config: RunConfig
) -> list[tuple[float, float]]:
    """Sup and H^s distance to an IFRK4 trajectory at each snapshot time."""
    order = sorted(range(len(result.times)), key=lambda i: abs(result.times[i]))
    span = max((abs(t) for t in result.times), default=0.0)
    if config.mode == "fast" and config.fast_dt:
        dt = config.fast_dt
    else:
        dt = span / 64.0 if span > 0 else 1.0
    dists: dict[int, tuple[float, float]] = {}
    state, t_state = phi, 0.0
    for i in order:
        t = result.times[i]
        if abs(t - t_state) > 1e-15 * max(1.0, abs(t)):
            state = ifrk4_solve(state, t - t_state, dt)
            t_state = t
        diff = result.snapshots[i].samples - state.samples
        sup = float(np.abs(diff).max())
        hs = sobolev_norm(forward(RealGridFunction(phi.grid, diff)), result.sobolev_index)
        dists[i] = (sup, hs)
    return [dists[i] for i in range(len(result.times))]


def _make_records(
    config: RunConfig,
    result: SolveResult,
    compare: list[tuple[float, float]] | None,
    out_base: str | None,
) -> list[dict]:
    records = []
    for i, t in enumerate(result.times):
        led = result.snapshot_ledgers[i]
        rec: dict = {
            "schema": SCHEMA,
            "t": t,
            "s": result.sobolev_index.s,
            "h_norm_s": result.norms[i],
        }
        samples = result.snapshots[i].samples
        if len(samples) <= INLINE_SAMPLE_LIMIT:
            rec["samples"] = samples.tolist()
        else:
            path = f"{out_base}.snap{i:03d}.dat"
            _write_samples_file(path, result.snapshots[i])
            rec["samples_file"] = path
        rec["ledger"] = {
            "picard": led.picard,
            "data": led.data,
            "certified_total": led.certified_total,
            "steps_taken": led.steps_taken,
            "diagnostics": led.diagnostics,
        }
        rec["plans"] = _rle_plans(result.plan_log[: led.steps_taken])
        rec["flags"] = {
            "mode": result.mode,
            "certificate_violated": result.snapshot_flags[i],
            "certified": result.mode == "certified" and not result.snapshot_flags[i],
        }
        if compare is not None:
            rec["compare"] = {"sup_distance": compare[i][0], "hs_distance": compare[i][1]}
        records.append(rec)
    return records


def _write_samples_file(path: str, u: RealGridFunction) -> None:
    with open(path, "w") as fh:
        for x, v in zip(u.grid.x, u.samples):
            fh.write(f"{x!r} {v!r}\n")


def _write_json_lines(fh, config: RunConfig, records: list[dict]) -> None:
    header = {
        "schema": SCHEMA,
        "header": True,
        "generated_at": datetime.now(timezone.utc).isoformat(),
        "backend": kernels.backend_name(),
        "config": {
            "profile": [config.profile_kind, list(config.profile_params)],
            "s": config.s,
            "t": config.t_target,
            "eps": config.eps,
            "grid": [config.half_length, config.num_points],
            "mode": config.mode if config.mode == "certified" else f"fast:{config.fast_dt}",
            "format": config.fmt,
            "compare": config.compare,
            "uncertainty": config.input_uncertainty,
        },
    }
    fh.write(json.dumps(header) + "\n")
    for rec in records:
        fh.write(json.dumps(rec) + "\n")


def _write_csv(fh, records: list[dict]) -> None:
    cols = ["t", "s", "h_norm_s", "picard", "data", "certified_total", "steps_taken",
            "mode", "certificate_violated"]
    if records and "compare" in records[0]:
        cols += ["sup_distance", "hs_distance"]
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(cols)
    for rec in records:
        row = [
            rec["t"], rec["s"], rec["h_norm_s"],
            rec["ledger"]["picard"], rec["ledger"]["data"],
            rec["ledger"]["certified_total"], rec["ledger"]["steps_taken"],
            rec["flags"]["mode"], rec["flags"]["certificate_violated"],
        ]
        if "compare" in rec:
            row += [rec["compare"]["sup_distance"], rec["compare"]["hs_distance"]]
        writer.writerow(row)


def run(config: RunConfig) -> int:
    """Execute a configured run; returns the process exit code."""
    grid = GridSpec(config.half_length, config.num_points)
    phi = build_profile(config, grid)
    result = solve_ivp(
        phi,
        config.t_target,
        config.eps,
        config.s,
        mode=config.mode,
        dt=config.fast_dt if config.mode == "fast" else None,
        snapshot_times=config.snapshot_times,
        input_uncertainty=config.input_uncertainty,
    )
    compare = _oracle_distances(phi, result, config) if config.compare else None
    out_base = config.output
    records = _make_records(config, result, compare, out_base)

    if config.output is None:
        _write_output(sys.stdout, config, records)
    else:
        buf = io.StringIO()
        _write_output(buf, config, records)
        with open(config.output, "w") as fh:
            fh.write(buf.getvalue())

    if config.mode == "certified" and result.certificate_violated:
        return 2
    return 0


def _write_output(fh, config: RunConfig, records: list[dict]) -> None:
    if config.fmt == "csv":
        _write_csv(fh, records)
    else:
        _write_json_lines(fh, config, records)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        config = parse_config(argv)
        return run(config)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except GardnerCertError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
