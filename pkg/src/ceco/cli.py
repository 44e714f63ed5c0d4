"""Command-line front end.

::

    ceco --dump-default-config > default.cfg
    ceco run --config default.cfg --controller ceco-e [--solver-log log.csv]
    ceco compare --config default.cfg
    ceco plot ceco_out/trace_ceco-e.csv [--out-dir figs]
    ceco pmv eval --t-a 26 --t-mr 28 --v-air 0.3

Exit status is 0 on success, 2 for invalid input and 1 for a failed run.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import comfort, config, sim
from .comfort import KELVIN
from .mpc import ControllerKind
from .plotting import TraceParseError, plot_trace

EXIT_OK, EXIT_FAILED, EXIT_INVALID = 0, 1, 2


def _load_config(path) -> config.ScenarioConfig:
    return config.ScenarioConfig() if path is None else config.load(path)


def _load_cycle(cfg: config.ScenarioConfig) -> sim.DriveCycle:
    path = cfg.cycle_path() or sim.bundled_cycle_path()
    return sim.load_cycle(path, cycle_dt=cfg.scenario.cycle_dt)


def _output_dir(cfg, override) -> Path:
    out = Path(override or cfg.scenario.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_solver_log(trace: sim.SimTrace, path) -> None:
    """All per-iteration records of a run, keyed by control step."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "iter", "f", "violation", "step_length", "grad_norm"])
        for k, log in trace.solver_logs:
            for r in log:
                w.writerow([k, r.iter, repr(r.f), repr(r.violation), repr(r.step), repr(r.grad_norm)])


def cmd_run(args) -> int:
    cfg = _load_config(args.config)
    kind = ControllerKind(args.controller)
    cycle = _load_cycle(cfg)
    out = _output_dir(cfg, args.output_dir)
    timing = cfg.scenario.record_timing
    try:
        trace = sim.run_closed_loop(
            kind, cycle, cfg.plant_params(), cfg.mpc, cfg.occupant, cfg.bounds, cfg.solver,
            keep_solver_logs=args.solver_log is not None,
        )
    except sim.SimulationError as exc:
        exc.trace.write_csv(out / f"trace_{kind.value}.csv", record_timing=timing)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    trace.write_csv(out / f"trace_{kind.value}.csv", record_timing=timing)
    report = sim.metrics(trace, record_timing=timing)
    _write_json(out / f"metrics_{kind.value}.json", report.to_dict())
    if args.solver_log is not None:
        write_solver_log(trace, args.solver_log)
    row = sim.ComparisonRow(kind, report, trace)
    print(sim.format_table([row]))
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _load_config(args.config)
    cycle = _load_cycle(cfg)
    out = _output_dir(cfg, args.output_dir)
    timing = cfg.scenario.record_timing
    rows = sim.compare_controllers(
        cycle, cfg.plant_params(), cfg.mpc, cfg.occupant, cfg.bounds, cfg.solver,
        record_timing=timing,
    )
    for r in rows:
        if r.trace is not None:
            r.trace.write_csv(out / f"trace_{r.kind.value}.csv", record_timing=timing)
    (out / "metrics.json").write_text(sim.rows_to_json(rows) + "\n", encoding="utf-8")
    print(sim.format_table(rows))
    return EXIT_OK if all(r.error is None for r in rows) else EXIT_FAILED


def cmd_plot(args) -> int:
    out = Path(args.out_dir) if args.out_dir else Path(args.trace).parent
    try:
        paths = plot_trace(args.trace, out)
    except TraceParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    for p in paths:
        print(p)
    return EXIT_OK


def cmd_pmv_eval(args) -> int:
    occ = _load_config(args.config).occupant
    if args.t_cab is not None:
        need = {"--t-ain": args.t_ain, "--t-int": args.t_int, "--m-bl": args.m_bl}
        missing = [k for k, v in need.items() if v is None]
        if missing:
            print(f"error: modified PMV also needs {', '.join(missing)}", file=sys.stderr)
            return EXIT_INVALID
        y = comfort.pmv_modified(args.t_cab, args.t_ain, args.t_int, args.m_bl, args.w_rad, occ)
    else:
        need = {"--t-a": args.t_a, "--t-mr": args.t_mr, "--v-air": args.v_air}
        missing = [k for k, v in need.items() if v is None]
        if missing:
            print(f"error: PMV needs {', '.join(missing)} (or --t-cab for the cabin variant)", file=sys.stderr)
            return EXIT_INVALID
        y = comfort.pmv_original(occ, comfort.ComfortEnv(args.t_a, args.t_mr, args.v_air))
    y = float(y)
    print(f"pmv = {y:.6f} ({comfort.sensation_level(y)})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ceco", description="Energy and comfort MPC for a vehicle A/C system.")
    p.add_argument("--dump-default-config", action="store_true", help="print the default configuration and exit")
    sub = p.add_subparsers(dest="command")

    run = sub.add_parser("run", help="closed-loop run of one controller")
    run.add_argument("--config", help="scenario config file (defaults if omitted)")
    run.add_argument("--controller", required=True, choices=[k.value for k in ControllerKind])
    run.add_argument("--output-dir", help="override scenario.output_dir")
    run.add_argument("--solver-log", metavar="CSV", help="write per-iteration solver records")
    run.set_defaults(func=cmd_run)

    cmp_ = sub.add_parser("compare", help="run all four controllers on the same scenario")
    cmp_.add_argument("--config")
    cmp_.add_argument("--output-dir")
    cmp_.set_defaults(func=cmd_compare)

    plot = sub.add_parser("plot", help="SVG panels from a trace CSV")
    plot.add_argument("trace")
    plot.add_argument("--out-dir")
    plot.set_defaults(func=cmd_plot)

    pmv = sub.add_parser("pmv", help="comfort index utilities")
    pmv_sub = pmv.add_subparsers(dest="pmv_command", required=True)
    ev = pmv_sub.add_parser("eval", help="one PMV value (degC, m/s, kg/s, W/m2)")
    ev.add_argument("--config", help="take occupant parameters from this config")
    ev.add_argument("--t-a", type=float, help="air temperature")
    ev.add_argument("--t-mr", type=float, help="mean radiant temperature")
    ev.add_argument("--v-air", type=float, help="air velocity")
    ev.add_argument("--t-cab", type=float, help="cabin temperature (selects the cabin variant)")
    ev.add_argument("--t-ain", type=float, help="vent air temperature")
    ev.add_argument("--t-int", type=float, help="interior surface temperature")
    ev.add_argument("--m-bl", type=float, help="blower mass flow")
    ev.add_argument("--w-rad", type=float, default=0.0, help="solar irradiance")
    ev.set_defaults(func=cmd_pmv_eval)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.dump_default_config:
        sys.stdout.write(config.dumps())
        return EXIT_OK
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except config.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (sim.CycleParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
