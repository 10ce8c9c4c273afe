"""Command-line front end: scenario files in, CSV tables out.

Subcommands: check, evolve, measure, sweep.  Exit codes are uniform across
subcommands: 0 success / conditions hold, 1 computed negative result or
runtime failure, 2 input error.  All output files are UTF-8 with LF line
endings; floats use the dot decimal separator at full precision, so repeated
runs with identical inputs produce identical bytes.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .model import check_conditions, prepare_initial
from .dynamics import IntegrationError, evolve_exact, evolve_stepped
from .measurement import (
    ImpossibleOutcomeError,
    aggregate_sigma,
    dispersion_experiment,
    measurement_trials,
    outcome_distribution,
    repeatability_protocol,
)
from .scenarios import (
    DEFAULT_ETA_GRID,
    Schedule,
    interpolation_sweep,
    write_sweep_csv,
)
from .scenario_io import ScenarioFormatError, load_scenario_file

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INPUT = 2


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _say(args, *parts) -> None:
    if not args.quiet:
        print(*parts)


def _load(path, args):
    try:
        return load_scenario_file(path)
    except ScenarioFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return None


def cmd_check(args) -> int:
    s = _load(args.scenario, args)
    if s is None:
        return EXIT_INPUT
    report = check_conditions(s.model)
    _say(args, f"eq4_defect = {_fmt(report.eq4_defect)}  holds = {report.eq4_holds}")
    _say(args, f"eq5_defect = {_fmt(report.eq5_defect)}  holds = {report.eq5_holds}")
    return EXIT_OK if report.both_hold else EXIT_NEGATIVE


def _write_trajectory(path, times, states) -> None:
    dim = states[0].shape[0]
    header = ["time"]
    for r in range(dim):
        for c in range(dim):
            header += [f"re_{r}_{c}", f"im_{r}_{c}"]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for t, w in zip(times, states):
            row = [_fmt(t)]
            for r in range(dim):
                for c in range(dim):
                    row += [_fmt(w[r, c].real), _fmt(w[r, c].imag)]
            writer.writerow(row)


def cmd_evolve(args) -> int:
    s = _load(args.scenario, args)
    if s is None:
        return EXIT_INPUT
    if args.t_end < 0 or args.dt <= 0:
        print("error: need t-end >= 0 and dt > 0", file=sys.stderr)
        return EXIT_INPUT
    w0 = prepare_initial(s.model, s.preparation, pointer_basis=s.pointer.basis)
    if args.t_end == 0:
        times = [0.0]
        states = [w0.matrix]
    elif args.stepped:
        try:
            traj = evolve_stepped(s.model, w0, args.t_end, args.dt)
        except IntegrationError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_NEGATIVE
        times = list(traj.times)
        states = [w.matrix for w in traj.states]
    else:
        n = int(round(args.t_end / args.dt))
        times = [k * args.t_end / n for k in range(n + 1)]
        states = [w0.matrix] + [
            evolve_exact(s.model, w0, t).matrix for t in times[1:]
        ]
    if args.out:
        _write_trajectory(args.out, times, states)
    final = states[-1]
    trace_dev = abs(float(np.trace(final).real) - 1.0)
    purity0 = float(np.trace(states[0] @ states[0]).real)
    purity1 = float(np.trace(final @ final).real)
    _say(args, f"terminal trace deviation = {_fmt(trace_dev)}")
    _say(args, f"purity drift = {_fmt(abs(purity1 - purity0))}")
    return EXIT_OK


def cmd_measure(args) -> int:
    s = _load(args.scenario, args)
    if s is None:
        return EXIT_INPUT
    seed = args.seed if args.seed is not None else s.seed
    n_repeats = args.repeats if args.repeats is not None else s.schedule.n_repeats
    n_trials = args.trials if args.trials is not None else s.schedule.n_trials
    sched = s.schedule
    try:
        repeat_record = repeatability_protocol(
            s.model, s.preparation, s.pointer, s.calibration,
            sched.tau, sched.delta_tau, n_repeats, seed,
        )
        trials = measurement_trials(
            s.model, s.preparation, s.pointer, s.calibration,
            sched.tau, n_trials, seed,
        )
        variance = dispersion_experiment(
            s.model, s.preparation, s.pointer, s.calibration,
            sched.tau, n_trials, seed,
        )
    except ImpossibleOutcomeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    w_tau = evolve_exact(
        s.model,
        prepare_initial(s.model, s.preparation, pointer_basis=s.pointer.basis),
        sched.tau,
    )
    p = outcome_distribution(w_tau, s.pointer, (s.model.d_system, s.model.d_apparatus))
    i = s.preparation.system_index
    analytic = aggregate_sigma(s.calibration, i, distribution=p)
    empirical = aggregate_sigma(s.calibration, i, record=trials)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            trials.write_csv(fh)
    if args.repeat_out:
        with open(args.repeat_out, "w", encoding="utf-8", newline="\n") as fh:
            repeat_record.write_csv(fh)
    _say(args, f"sigma_analytic = {_fmt(analytic.sigma)}")
    _say(args, f"sigma_empirical = {_fmt(empirical.sigma)}")
    degenerate = " (degenerate: single trial)" if n_trials < 2 else ""
    _say(args, f"reading_variance = {_fmt(variance)}{degenerate}")
    _say(args, f"repeat_changes = {repeat_record.outcome_changes()}")
    return EXIT_OK


def _parse_float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _parse_int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            lo, hi = part.split(":")
            out.extend(range(int(lo), int(hi)))
        else:
            out.append(int(part))
    return out


def cmd_sweep(args) -> int:
    try:
        dims = tuple(int(x) for x in args.dims.split(","))
        eta_grid = _parse_float_list(args.eta_grid)
        seeds = _parse_int_list(args.seeds)
        if len(dims) != 2:
            raise ValueError("dims must be dS,dM")
        if not seeds:
            raise ValueError("seed list is empty")
        if not eta_grid:
            raise ValueError("eta grid is empty")
        if any(not 0.0 <= e <= 1.0 for e in eta_grid):
            raise ValueError("eta values must lie in [0, 1]")
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    schedule = Schedule(
        tau=args.tau,
        delta_tau=args.delta_tau,
        n_repeats=args.repeats,
        n_trials=args.trials,
    )
    rows = interpolation_sweep(dims, eta_grid, seeds, schedule)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            write_sweep_csv(rows, fh)
    else:
        write_sweep_csv(rows, sys.stdout)
    _say(args, f"swept {len(rows)} (eta, seed) points")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qndsim",
        description="Bipartite system-apparatus measurement simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--quiet", action="store_true", help="suppress stdout summary")
        p.add_argument("--out", type=Path, default=None, help="output CSV path")
        p.add_argument("--seed", type=int, default=None, help="override scenario seed")

    p_check = sub.add_parser("check", help="evaluate the commutation conditions")
    p_check.add_argument("scenario", type=Path)
    common(p_check)
    p_check.set_defaults(func=cmd_check)

    p_evolve = sub.add_parser("evolve", help="propagate the joint state")
    p_evolve.add_argument("scenario", type=Path)
    p_evolve.add_argument("--t-end", type=float, default=1.0)
    p_evolve.add_argument("--dt", type=float, default=1e-3)
    mode = p_evolve.add_mutually_exclusive_group()
    mode.add_argument("--exact", dest="stepped", action="store_false")
    mode.add_argument("--stepped", dest="stepped", action="store_true")
    p_evolve.set_defaults(stepped=False)
    common(p_evolve)
    p_evolve.set_defaults(func=cmd_evolve)

    p_measure = sub.add_parser("measure", help="run measurement protocols")
    p_measure.add_argument("scenario", type=Path)
    p_measure.add_argument("--repeats", type=int, default=None)
    p_measure.add_argument("--trials", type=int, default=None)
    p_measure.add_argument(
        "--repeat-out", type=Path, default=None,
        help="CSV path for the repeated-measurement sequence",
    )
    common(p_measure)
    p_measure.set_defaults(func=cmd_measure)

    p_sweep = sub.add_parser("sweep", help="interpolation sweep over (eta, seed)")
    p_sweep.add_argument("--dims", default="2,2", help="dS,dM")
    p_sweep.add_argument(
        "--eta-grid", default=",".join(str(e) for e in DEFAULT_ETA_GRID)
    )
    p_sweep.add_argument("--seeds", default="0:20", help="comma list or lo:hi range")
    p_sweep.add_argument("--tau", type=float, default=1.0)
    p_sweep.add_argument("--delta-tau", type=float, default=0.5)
    p_sweep.add_argument("--repeats", type=int, default=5)
    p_sweep.add_argument("--trials", type=int, default=50)
    common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
