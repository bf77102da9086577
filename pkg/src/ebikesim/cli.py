"""Command-line harness: simulate scenarios, analyse logs, fit parameters.

Subcommands:
  simulate    run a scenario file and write the session CSV
  report      summarise a session CSV and render figures
  sweep       generate pedal-speed sweep datasets at fixed assist levels
  fit-noload  fit the no-load power line from a sweep CSV
  replay      parse a newline-delimited sensor-frame log and count errors

Exit codes: 0 success, 1 user or configuration error, 2 internal error.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import report as report_mod
from . import sim as sim_mod
from .powersplit import FitError, PowerSplitParams, fit_noload_params
from .scenario import ConfigError, load_scenario
from .telemetry import FrameError, parse_frame


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage problems are user errors
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="ebikesim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a scenario and write the session CSV")
    p_sim.add_argument("--scenario", required=True, help="scenario config file")
    p_sim.add_argument("--out", required=True, help="session CSV output path")
    p_sim.add_argument("--frames", help="also write the wire-format sensor frames here")
    p_sim.add_argument("--seed", type=int, help="seed for noise-bearing scenarios")

    p_rep = sub.add_parser("report", help="summarise a session CSV and render figures")
    p_rep.add_argument("--log", required=True, help="session CSV from simulate")
    p_rep.add_argument("--out-dir", help="directory for summary.csv and figures "
                                         "(default: <log stem>_report next to the log)")
    p_rep.add_argument("--settle", type=float, default=report_mod.DEFAULT_SETTLE_S,
                       help="seconds to skip after each zone entry for steady means")
    p_rep.add_argument("--no-figures", action="store_true", help="skip figure rendering")

    p_sweep = sub.add_parser("sweep", help="generate pedal-speed sweep datasets")
    p_sweep.add_argument("--scenario", required=True, help="scenario config file (plant parameters)")
    p_sweep.add_argument("--out", required=True, help="sweep CSV output path")
    p_sweep.add_argument("--y-tilde", default="1-16",
                         help="assist levels, e.g. '2,6,10,14' or '1-16'")
    p_sweep.add_argument("--max-rpm", type=float, default=140.0)
    p_sweep.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")

    p_fit = sub.add_parser("fit-noload", help="fit the no-load power line from a sweep CSV")
    p_fit.add_argument("--sweep", required=True, help="sweep CSV from the sweep command")

    p_replay = sub.add_parser("replay", help="parse a sensor-frame log and count errors")
    p_replay.add_argument("--frames", required=True, help="newline-delimited frame log")
    return parser


def _parse_levels(text: str) -> list[int]:
    levels: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            levels.extend(range(int(lo), int(hi) + 1))
        else:
            levels.append(int(part))
    for level in levels:
        if not 1 <= level <= 16:
            raise ConfigError(f"assist level {level} out of range 1-16")
    return levels


def cmd_simulate(args) -> int:
    cfg = load_scenario(args.scenario)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    log = sim_mod.run(cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    log.write_csv(out)
    if args.frames:
        with open(args.frames, "w", encoding="utf-8") as fh:
            from .telemetry import encode_frame

            for record in log.records:
                fh.write(encode_frame(sim_mod.frame_for_tick(record, cfg.battery.nominal_voltage)))
    last = log.records[-1] if log.records else None
    for event in log.events:
        print(f"event: {event}")
    if last is None:
        print(f"wrote {out}: 0 ticks")
    else:
        print(
            f"wrote {out}: {len(log.records)} ticks, {last.position:.0f} m, "
            f"dose {last.dose:.2f} ug, battery {last.battery_ah:.2f} Ah"
        )
    return 0


def cmd_report(args) -> int:
    rows = report_mod.load_log(args.log)
    summary = report_mod.summarise(rows, settle_s=args.settle)
    out_dir = Path(args.out_dir) if args.out_dir else Path(args.log).parent / (Path(args.log).stem + "_report")
    out_dir.mkdir(parents=True, exist_ok=True)
    report_mod.write_summary_csv(summary, out_dir / "summary.csv")
    for line in summary.lines():
        print(line)
    written = [out_dir / "summary.csv"]
    if not args.no_figures:
        written += report_mod.render_figures(rows, out_dir)
    print("wrote " + ", ".join(str(p) for p in written))
    return 0


def _sweep_one(packed) -> list[sim_mod.SweepRow]:
    cfg, level, max_rpm = packed
    return sim_mod.sweep_experiment(cfg, level, max_rpm=max_rpm)


def cmd_sweep(args) -> int:
    cfg = load_scenario(args.scenario)
    levels = _parse_levels(args.y_tilde)
    tasks = [(cfg, level, args.max_rpm) for level in levels]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_one, tasks))
    else:
        results = [_sweep_one(task) for task in tasks]
    rows = [row for result in results for row in result]
    sim_mod.write_sweep_csv(rows, args.out)
    print(f"wrote {args.out}: {len(rows)} rows over levels {','.join(map(str, levels))}")
    return 0


def cmd_fit_noload(args) -> int:
    rows = sim_mod.read_sweep_csv(args.sweep)
    samples = [(r.y_tilde, r.p_me) for r in rows if r.p_mw == 0 and r.p_hw > 0]
    if not samples:
        raise FitError("sweep has no motor free-wheel rows")
    # sweep files carry electrical draw; the wheel-side fit needs the
    # same motor efficiency the drivetrain model uses
    eta = PowerSplitParams().motor_efficiency
    slope, intercept = fit_noload_params(samples, motor_efficiency=eta)
    residuals = [eta * p - (slope * y + intercept) for y, p in samples]
    rms = (sum(r * r for r in residuals) / len(residuals)) ** 0.5
    print(f"noload_slope = {slope:.6f} W/level")
    print(f"noload_intercept = {intercept:.6f} W")
    print(f"residual_rms = {rms:.6f} W over {len(samples)} samples")
    return 0


def cmd_replay(args) -> int:
    ok = 0
    error_counts: dict[str, int] = {}
    try:
        with open(args.frames, encoding="utf-8") as fh:
            for index, line in enumerate(fh):
                try:
                    parse_frame(line, received_at=float(index))
                except FrameError as err:
                    error_counts[err.kind] = error_counts.get(err.kind, 0) + 1
                else:
                    ok += 1
    except OSError as err:
        raise ConfigError(f"cannot read frame log {args.frames}: {err}") from err
    if not error_counts:
        print(f"{ok} ok, 0 errors")
    else:
        parts = ", ".join(f"{count} {kind}" for kind, count in sorted(error_counts.items()))
        print(f"{ok} ok, {parts}")
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "report": cmd_report,
    "sweep": cmd_sweep,
    "fit-noload": cmd_fit_noload,
    "replay": cmd_replay,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits; keep main() callable
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, FitError, report_mod.LogFormatError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except Exception as err:  # internal invariant violation
        print(f"internal error: {err!r}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
