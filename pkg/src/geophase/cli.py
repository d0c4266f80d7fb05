"""Command-line entry point.

Exit codes: 0 pass, 1 verification failure, 2 usage or validation error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import GeophaseError, ScenarioError
from .scenario import Scenario, execute, report_json, run_sweep, sweep_csv, trajectory_csv
from .wframe import write_frame_csv


def _parse_values(text: str) -> list:
    text = text.strip()
    if not text:
        return []
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise ScenarioError("--values", f"expected comma-separated numbers, got {text!r}") from None


def _emit(report: dict) -> int:
    sys.stdout.write(report_json(report))
    return 0 if report["pass"] else 1


def cmd_simulate(args) -> int:
    s = Scenario.load(args.scenario)
    res = execute(s)
    if args.traj_out:
        trajectory_csv(res.trajectory, args.traj_out)
    return _emit(res.report)


def _single(kind):
    def run(args) -> int:
        s = Scenario.load(args.scenario)
        opts = [a for a in s.analyses if a["kind"] == kind] or [{"kind": kind}]
        res = execute(s.with_analyses(opts))
        if kind == "frame" and getattr(args, "frame_out", None):
            if res.frame is None:
                raise GeophaseError("no w-frame was built (trajectory not cyclic)")
            write_frame_csv(res.frame, args.frame_out)
        return _emit(res.report)

    return run


def cmd_sweep(args) -> int:
    s = Scenario.load(args.scenario)
    rows = run_sweep(s, args.axis, _parse_values(args.values), jobs=args.jobs)
    text = sweep_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0 if all(r["pass"] == "true" for r in rows) else 1


def cmd_verify(args) -> int:
    from .acceptance import verify

    return verify(args.steps_factor)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="geophase", description="Geometric-phase laboratory for driven finite-dimensional quantum systems.")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="propagate a scenario and run all its analyses")
    sp.add_argument("scenario")
    sp.add_argument("--traj-out", metavar="FILE", help="write the trajectory as CSV")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("phases", help="total, dynamical, AA and Berry phases with oracle rows")
    sp.add_argument("scenario")
    sp.set_defaults(func=_single("phases"))

    sp = sub.add_parser("frame", help="w-frame, effective Hamiltonian and amplitude reconstruction")
    sp.add_argument("scenario")
    sp.add_argument("--frame-out", metavar="FILE", help="write the frame as CSV")
    sp.set_defaults(func=_single("frame"))

    sp = sub.add_parser("interfere", help="interference of psi(0) with psi(T)")
    sp.add_argument("scenario")
    sp.set_defaults(func=_single("interfere"))

    sp = sub.add_parser("sweep", help="vary one model parameter and tabulate phases as CSV")
    sp.add_argument("scenario")
    sp.add_argument("--axis", required=True, help="parameter name, e.g. theta")
    sp.add_argument("--values", required=True, help="comma-separated values")
    sp.add_argument("--out", metavar="FILE")
    sp.add_argument("--jobs", type=int, default=1, help="worker processes (rows stay in input order)")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("verify", help="run the acceptance suite")
    sp.add_argument("--steps-factor", type=float, default=1.0, help=argparse.SUPPRESS)
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GeophaseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
