"""Command-line entry point: simulate, sweep, calibrate.

Every command loads a key=value config, runs the requested computation, and
writes its artifacts plus a manifest (config snapshot, resolved regime,
wall-clock per stage, output checksums) into the output directory.

Exit codes: 0 success, 2 config/usage error, 3 simulation error,
4 calibration bracket failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, channel, experiments, inout
from .errors import ConfigError, FibergateError, NoBracket
from .params import ParameterSet, RegimeTag, classify_regime, load_params

JOBS_ENV = "CAVSIM_JOBS"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SIMULATION = 3
EXIT_NOBRACKET = 4


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


class Manifest:
    """Collects run metadata and output checksums."""

    def __init__(self, command: str, args: dict, config_text: str):
        self.data = {
            "tool": "fibergate",
            "version": __version__,
            "command": command,
            "args": args,
            "config": config_text,
            "regime": None,
            "timings": {},
            "outputs": [],
        }
        self._t0 = time.perf_counter()

    def stage_done(self, name: str) -> None:
        now = time.perf_counter()
        self.data["timings"][name] = round(now - self._t0, 6)
        self._t0 = now

    def add_output(self, path: Path) -> None:
        self.data["outputs"].append(
            {"path": path.name, "sha256": _sha256(path), "bytes": path.stat().st_size}
        )

    def write(self, out_dir: Path) -> None:
        path = out_dir / "manifest.json"
        path.write_text(json.dumps(self.data, indent=2) + "\n")


def _resolve_jobs(flag_value: int | None) -> int:
    env = os.environ.get(JOBS_ENV)
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"{JOBS_ENV} must be an integer, got {env!r}") from exc
    if flag_value is not None:
        return max(1, flag_value)
    return os.cpu_count() or 1


def _resolve_regime(params: ParameterSet, requested: str) -> str:
    if requested in ("short", "long"):
        return requested
    tag = classify_regime(params, params.pulse.delta_t).tag
    if tag == RegimeTag.AMBIGUOUS:
        raise ConfigError(
            "configuration is neither clearly short- nor long-distance; "
            "pass --regime explicitly"
        )
    return tag.value


def cmd_simulate(args: argparse.Namespace) -> int:
    params = load_params(args.config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(
        "simulate",
        {"regime": args.regime, "atom_b": args.atom_b, "config": str(args.config)},
        Path(args.config).read_text(),
    )
    regime = _resolve_regime(params, args.regime)
    manifest.data["regime"] = regime
    manifest.stage_done("setup")

    result_path = out_dir / "step2_result.json"
    traj_path = out_dir / "trajectory.csv"
    try:
        if regime == "short":
            res = experiments.run_short_step2(
                params, params.pulse.omega0, args.atom_b
            )
            manifest.stage_done("propagation")
            payload = {
                "regime": regime,
                "atom_b": args.atom_b,
                "omega0": params.pulse.omega0,
                "p_no_loss": res.p,
                "phi": res.phi,
                "leakage": res.leakage,
                "loss": res.loss,
            }
            basis = res.traj.basis
            res.traj.export_csv(
                traj_path,
                amp_indices=[basis.i_g1, basis.i_e, basis.i_cav_a, basis.i_cav_b],
            )
        else:
            res = inout.run_long_gate(params, args.atom_b)
            manifest.stage_done("pipeline")
            payload = {
                "regime": regime,
                "atom_b": args.atom_b,
                "p_no_loss": res.p_no_loss,
                "phi": res.phi,
                "reflected_fraction": res.reflected_fraction,
                "budget": res.budget,
            }
            ts = res.emitted.times
            lines = ["t,re_emitted,im_emitted,re_returned,im_returned"]
            for i, t in enumerate(ts):
                lines.append(
                    f"{t:.17g},{res.emitted.values[i].real:.17g},"
                    f"{res.emitted.values[i].imag:.17g},"
                    f"{res.returned.values[i].real:.17g},"
                    f"{res.returned.values[i].imag:.17g}"
                )
            traj_path.write_text("\n".join(lines) + "\n")
    except FibergateError as exc:
        print(f"simulation failed during the {regime} run: {exc}", file=sys.stderr)
        return EXIT_SIMULATION
    result_path.write_text(json.dumps(payload, indent=2) + "\n")
    manifest.stage_done("write")
    manifest.add_output(result_path)
    manifest.add_output(traj_path)
    manifest.write(out_dir)
    return EXIT_OK


def _sweep_worker(task):
    params, axis, value, tol = task
    if axis == "omega0":
        r1, r2 = experiments.run_branch_pair(params, value, tol=tol)
        return {
            "phi1": r1.phi, "phi2": r2.phi,
            "sin_phi1": float(np.sin(r1.phi)),
            "sin_diff": float(np.sin(r2.phi - r1.phi)),
            "p1": r1.p, "p2": r2.p,
        }
    if axis == "kappa_f":
        p_x = replace(params, kappa_f=value)
        r1, r2 = experiments.run_branch_pair(p_x, params.pulse.omega0, tol=tol)
        fid = channel.fidelity(experiments.EQUAL_SUPERPOSITION, r1.p, r2.p)
        return {"p1": r1.p, "p2": r2.p, "fidelity": fid}
    if axis == "kappa_l":
        p_x = replace(params, kappa_l=value)
        pair = inout.run_long_gate_pair(p_x)
        fid = channel.fidelity(
            experiments.EQUAL_SUPERPOSITION, pair.g0.p_no_loss, pair.g2.p_no_loss
        )
        return {"p1": pair.g0.p_no_loss, "p2": pair.g2.p_no_loss, "fidelity": fid}
    if axis == "modes":
        p_x = replace(params, n_fiber_modes=int(round(value)))
        r2 = experiments.run_short_step2(p_x, params.pulse.omega0, "g2", tol=tol)
        return {"phi2": r2.phi, "p2": r2.p}
    raise ConfigError(f"unknown sweep axis {axis!r}")


def cmd_sweep(args: argparse.Namespace) -> int:
    params = load_params(args.config)
    if args.axis not in ("omega0", "kappa_f", "kappa_l", "modes"):
        raise ConfigError(f"unknown sweep axis {args.axis!r}")
    if args.points < 1:
        raise ConfigError(f"--points must be >= 1, got {args.points}")
    if args.stop < args.start:
        raise ConfigError("--to must be >= --from")
    if args.points == 1:
        values = np.array([args.start])
    else:
        values = np.linspace(args.start, args.stop, args.points)
    if np.any(np.diff(values) <= 0):
        raise ConfigError("sweep axis must be strictly increasing")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(
        "sweep",
        {
            "axis": args.axis, "from": args.start, "to": args.stop,
            "points": args.points, "config": str(args.config),
        },
        Path(args.config).read_text(),
    )
    jobs = _resolve_jobs(args.jobs)
    tasks = [(params, args.axis, float(v), experiments.STEP2_TOL) for v in values]
    try:
        if jobs == 1 or len(tasks) == 1:
            rows = [_sweep_worker(t) for t in tasks]
        else:
            with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
                rows = list(pool.map(_sweep_worker, tasks))
    except FibergateError as exc:
        print(f"simulation failed during the sweep: {exc}", file=sys.stderr)
        return EXIT_SIMULATION
    manifest.stage_done("sweep")

    columns = {name: np.array([row[name] for row in rows]) for name in rows[0]}
    axis_name = {"modes": "m_modes"}.get(args.axis, args.axis)
    table = experiments.SweepTable(axis_name, values, columns)
    csv_path = out_dir / "sweep.csv"
    table.to_csv(csv_path)
    manifest.stage_done("write")
    manifest.add_output(csv_path)
    manifest.write(out_dir)
    return EXIT_OK


def cmd_calibrate(args: argparse.Namespace) -> int:
    params = load_params(args.config)
    if args.target_phase not in ("pi", "PI"):
        try:
            target = float(args.target_phase)
        except ValueError as exc:
            raise ConfigError(f"bad --target-phase {args.target_phase!r}") from exc
        if abs(target - np.pi) > 1e-9:
            raise ConfigError("only --target-phase pi is supported")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(
        "calibrate",
        {"target_phase": "pi", "config": str(args.config),
         "from": args.start, "to": args.stop},
        Path(args.config).read_text(),
    )
    try:
        cal = experiments.calibrate_omega0(
            params, omega_lo=args.start, omega_hi=args.stop
        )
    except NoBracket as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        return EXIT_NOBRACKET
    except FibergateError as exc:
        print(f"simulation failed during calibration: {exc}", file=sys.stderr)
        return EXIT_SIMULATION
    manifest.stage_done("calibrate")
    payload = {
        "omega0_star": cal.omega0_star,
        "achieved_diff": cal.achieved_diff,
        "target": float(np.pi),
        "n_evaluations": cal.n_evaluations,
        "iterations": [{"omega0": om, "diff_minus_pi": d} for om, d in cal.iterations],
    }
    path = out_dir / "calibration.json"
    path.write_text(json.dumps(payload, indent=2) + "\n")
    manifest.stage_done("write")
    manifest.add_output(path)
    manifest.write(out_dir)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fibergate",
        description="Controlled-phase gate simulator for fiber-linked cavities",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a single gate simulation")
    p_sim.add_argument("config")
    p_sim.add_argument("--regime", choices=["short", "long", "auto"], default="auto")
    p_sim.add_argument("--atom-b", dest="atom_b", choices=["g0", "g2"], default="g2")
    p_sim.add_argument("--out", required=True)
    p_sim.set_defaults(func=cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="sweep one axis and write a CSV table")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--axis", required=True)
    p_sweep.add_argument("--from", dest="start", type=float, required=True)
    p_sweep.add_argument("--to", dest="stop", type=float, required=True)
    p_sweep.add_argument("--points", type=int, required=True)
    p_sweep.add_argument("--jobs", type=int, default=None,
                         help=f"worker processes (env {JOBS_ENV} overrides)")
    p_sweep.add_argument("--out", required=True)
    p_sweep.set_defaults(func=cmd_sweep)

    p_cal = sub.add_parser("calibrate", help="find the pi-phase drive amplitude")
    p_cal.add_argument("config")
    p_cal.add_argument("--target-phase", default="pi")
    p_cal.add_argument("--from", dest="start", type=float, default=None)
    p_cal.add_argument("--to", dest="stop", type=float, default=None)
    p_cal.add_argument("--out", required=True)
    p_cal.set_defaults(func=cmd_calibrate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FibergateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SIMULATION


if __name__ == "__main__":
    sys.exit(main())
