"""Command-line entry points: calibrate, oc, replay, run, serve.

Exit codes: 0 success, 1 validation error, 2 infeasible truncated design.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__, calibration, data_io, evaluation, population, procedure

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INFEASIBLE = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; reserve 2 for infeasibility instead.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(message)


class CliError(Exception):
    pass


def _add_config_flags(parser) -> None:
    parser.add_argument("--config", help="design config JSON path")
    parser.add_argument("--n", type=int)
    parser.add_argument("--r", type=float)
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--beta", type=float)
    parser.add_argument("--theta-h", type=float, dest="theta_h")
    parser.add_argument("--theta-k", type=float, dest="theta_k")
    parser.add_argument("--variant", choices=calibration.VARIANTS)
    parser.add_argument("--t0", type=int)
    parser.add_argument("--T", type=int, dest="T")
    parser.add_argument("--m-reps", type=int, dest="m_reps")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--backend", choices=calibration.BACKENDS)


_FLAG_BY_KEY = {
    "n": "--n", "r": "--r", "alpha": "--alpha", "beta": "--beta",
    "theta_h": "--theta-h", "theta_k": "--theta-k", "variant": "--variant",
    "t0": "--t0", "T": "--T", "m_reps": "--m-reps", "seed": "--seed",
    "backend": "--backend",
}


def _config_from_args(args) -> calibration.DesignConfig:
    inline = {k: getattr(args, k) for k in _FLAG_BY_KEY if getattr(args, k, None) is not None}
    if args.config:
        if inline:
            raise CliError("--config cannot be combined with inline design flags")
        try:
            return data_io.load_config(args.config)
        except FileNotFoundError:
            raise CliError(f"--config: file not found: {args.config}") from None
        except ValueError as err:
            raise CliError(f"--config: {err}") from None
    missing = [k for k in ("n", "r", "alpha", "beta", "theta_h", "theta_k") if k not in inline]
    if missing:
        raise CliError(
            "missing design flags: " + ", ".join(_FLAG_BY_KEY[k] for k in missing)
        )
    try:
        return data_io.config_from_dict(inline)
    except ValueError as err:
        msg = str(err)
        for key, flag in _FLAG_BY_KEY.items():
            msg = msg.replace(f"{key} must", f"{flag} must").replace(f"key {key!r}", f"flag {flag}")
        raise CliError(msg) from None


def parse_grid(spec: str, n: int) -> list[int]:
    """Grid spec: "all" or comma-separated counts/ranges like "0,5,10-20"."""
    spec = spec.strip()
    if spec.lower() == "all":
        return list(range(n + 1))
    out: list[int] = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo_s, hi_s = part.split("-", 1)
            try:
                lo, hi = int(lo_s), int(hi_s)
            except ValueError:
                raise CliError(f"--grid: bad range {part!r}") from None
            if lo > hi:
                raise CliError(f"--grid: empty range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            try:
                out.append(int(part))
            except ValueError:
                raise CliError(f"--grid: bad count {part!r}") from None
    for m in out:
        if not 0 <= m <= n:
            raise CliError(f"--grid: count {m} outside [0, {n}]")
    return out


def _load_schedule(path) -> calibration.BoundarySchedule:
    try:
        return data_io.load_schedule(path)
    except FileNotFoundError:
        raise CliError(f"--schedule: file not found: {path}") from None
    except ValueError as err:
        raise CliError(f"--schedule: {err}") from None


def _parse_synth(spec: str) -> tuple[int, int]:
    try:
        n_s, m_s = spec.split(",", 1)
        return int(n_s), int(m_s)
    except ValueError:
        raise CliError(f"--synth: expected 'n,m', got {spec!r}") from None


def _cmd_calibrate(args) -> int:
    config = _config_from_args(args)
    schedule = calibration.calibrate(config)
    data_io.save_schedule(schedule, args.out)
    artifacts = {"schedule": str(args.out)}
    if args.csv:
        data_io.save_schedule_csv(schedule, args.csv)
        artifacts["schedule_csv"] = str(args.csv)
    if args.manifest:
        data_io.save_manifest(data_io.RunManifest.for_config(config, artifacts), args.manifest)
    trunc = schedule.truncation
    if trunc is not None and trunc.infeasible:
        print(
            f"warning: truncated design infeasible at T={trunc.T}: "
            f"residual lower-side error {trunc.residual_beta:.6g} exceeds beta={config.beta}",
            file=sys.stderr,
        )
        return EXIT_INFEASIBLE
    print(f"schedule written to {args.out} (backend={config.backend}, n={config.n})")
    return EXIT_OK


def _cmd_oc(args) -> int:
    schedule = _load_schedule(args.schedule)
    grid = parse_grid(args.grid, schedule.n)
    points = evaluation.oc_curve(schedule, grid, args.reps, args.seed, workers=args.workers)
    data_io.save_oc_csv(points, args.out)
    if args.manifest:
        manifest = data_io.RunManifest.for_config(
            schedule.config,
            {"oc_csv": str(args.out), "schedule": str(args.schedule)},
            parameters={"command": "oc", "grid": args.grid, "reps": args.reps, "seed": args.seed},
        )
        data_io.save_manifest(manifest, args.manifest)
    peak = evaluation.expected_tau_peak(points) if points else None
    print(f"oc curve over {len(grid)} grid points written to {args.out}; expected-tau peak at m={peak}")
    return EXIT_OK


def _cmd_replay(args) -> int:
    schedule = _load_schedule(args.schedule)
    if (args.data is None) == (args.synth is None):
        raise CliError("exactly one of --data or --synth is required")
    if args.data:
        try:
            pop = data_io.load_population_csv(args.data, column=args.column)
        except (FileNotFoundError, ValueError) as err:
            raise CliError(f"--data: {err}") from None
    else:
        n, m = _parse_synth(args.synth)
        try:
            pop = population.synth_population(n, m)
        except ValueError as err:
            raise CliError(f"--synth: {err}") from None
    summary = evaluation.replay(pop, schedule, args.reps, args.seed, workers=args.workers)
    data_io.save_replay(summary, args.out, config_hash=schedule.config.config_hash)
    if args.hist:
        data_io.save_tau_histogram_csv(summary, args.hist)
    if args.manifest:
        manifest = data_io.RunManifest.for_config(
            schedule.config,
            {"replay_json": str(args.out), "schedule": str(args.schedule)},
            parameters={
                "command": "replay",
                "source": args.data or f"synth:{args.synth}",
                "reps": args.reps,
                "seed": args.seed,
            },
        )
        data_io.save_manifest(manifest, args.manifest)
    print(
        f"replay over {summary.runs} orderings: mean tau {summary.mean_tau:.1f} "
        f"({summary.inspected_pct:.1f}% inspected), incorrect {summary.incorrect_pct:.1f}%"
    )
    return EXIT_OK


def _cmd_run(args) -> int:
    schedule = _load_schedule(args.schedule)
    try:
        pop = data_io.load_population_csv(args.data, column=args.column)
    except (FileNotFoundError, ValueError) as err:
        raise CliError(f"--data: {err}") from None
    if pop.n != schedule.n:
        raise CliError(f"--data: population size {pop.n} does not match schedule n={schedule.n}")
    path = population.sample_path(pop, args.order_seed)
    session = procedure.new_session(schedule)
    for t in range(1, schedule.n + 1):
        x = int(path.prefix_counts[t - 1]) - (int(path.prefix_counts[t - 2]) if t > 1 else 0)
        session = procedure.observe(session, x)
        if session.decided:
            break
    if args.export:
        data_io.save_session(session, args.export)
    print(
        f"decision: {session.status} at tau={session.decided_at} "
        f"({session.decision_source}); inspected {session.t} of {schedule.n}"
    )
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.state_dir, ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="seqaudit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"seqaudit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="calibrate a boundary schedule")
    _add_config_flags(p)
    p.add_argument("--out", required=True, help="schedule JSON output path")
    p.add_argument("--csv", help="also write the per-stage schedule CSV")
    p.add_argument("--manifest", help="write a run manifest JSON")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("oc", help="operating characteristic over a grid of counts")
    p.add_argument("--schedule", required=True)
    p.add_argument("--grid", required=True, help='"all" or counts like "0,5,10-20"')
    p.add_argument("--reps", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True, help="OC CSV output path")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--manifest", help="write a run manifest JSON")
    p.set_defaults(func=_cmd_oc)

    p = sub.add_parser("replay", help="replay a population over random orderings")
    p.add_argument("--schedule", required=True)
    p.add_argument("--data", help="population CSV path")
    p.add_argument("--column", help="population CSV column name or index")
    p.add_argument("--synth", help="synthetic population as 'n,m'")
    p.add_argument("--reps", type=int, default=1_000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True, help="replay summary JSON output path")
    p.add_argument("--hist", help="also write the stopping-time histogram CSV")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--manifest", help="write a run manifest JSON")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("run", help="run one session over a random ordering of a population file")
    p.add_argument("--schedule", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--column", help="population CSV column name or index")
    p.add_argument("--order-seed", type=int, dest="order_seed", default=0)
    p.add_argument("--export", help="session export JSON path")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("serve", help="serve the HTTP API for live sessions")
    p.add_argument("--port", type=int, default=8714)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--state-dir", required=True, dest="state_dir")
    p.add_argument("--ui-dir", dest="ui_dir", help="serve a static console build at /ui")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except calibration.CalibrationError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
