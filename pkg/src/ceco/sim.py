"""Closed-loop drive-cycle simulation and energy/comfort metrics."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from . import comfort
from .cabin import ACState, ControlInput, ExogenousSample, Plant, PlantParams
from .comfort import KELVIN, ComfortBoundsSpec, OccupantParams
from .mpc import ControllerKind, MpcConfig, PreviewWindow, make_controller
from .nlp import SolverOptions

CYCLE_COLUMNS = ("t_s", "v_mps", "w_rad_wm2", "t_amb_k")
TRACE_COLUMNS = (
    "t_s", "t_cab_k", "t_evap_k", "t_int_k", "t_shell_k", "m_bl_kgps", "t_evap_sp_k",
    "p_comp_w", "p_bl_w", "y_pmv", "y_lb", "y_ub", "solver_iters", "solve_ms",
)
HOT_SOAK = ACState(t_cab=313.15, t_evap=288.15, t_int=313.15, t_shell=318.15)


class CycleParseError(ValueError):
    pass


@dataclass(frozen=True)
class DriveCycle:
    name: str
    cycle_dt: float
    t: np.ndarray
    v_veh: np.ndarray
    w_rad: np.ndarray
    t_amb: np.ndarray

    def __post_init__(self):
        if len(self.t) == 0:
            raise ValueError("drive cycle is empty")
        if not self.cycle_dt > 0:
            raise ValueError("cycle_dt must be > 0")
        if np.any(self.v_veh < 0):
            raise ValueError("vehicle speed must be >= 0")

    def __len__(self):
        return len(self.t)

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    def sample(self, t: float) -> ExogenousSample:
        """Exogenous inputs at time ``t``, held at the end values past the cycle."""
        return ExogenousSample(
            float(np.interp(t, self.t, self.v_veh)),
            float(np.interp(t, self.t, self.w_rad)),
            float(np.interp(t, self.t, self.t_amb)),
        )


def load_cycle(path, cycle_dt: float = 5.0, name: Optional[str] = None) -> DriveCycle:
    """Read a drive-cycle CSV and resample it to ``cycle_dt`` seconds."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CycleParseError(f"{path}:1: empty file") from None
        missing = [c for c in CYCLE_COLUMNS if c not in header]
        if missing:
            raise CycleParseError(f"{path}:1: missing column(s) {', '.join(missing)}")
        idx = [header.index(c) for c in CYCLE_COLUMNS]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                vals = [float(row[i]) for i in idx]
            except (IndexError, ValueError):
                raise CycleParseError(f"{path}:{lineno}: malformed row {row!r}") from None
            if not all(np.isfinite(vals)):
                raise CycleParseError(f"{path}:{lineno}: non-finite value")
            if rows and vals[0] <= rows[-1][0]:
                raise CycleParseError(f"{path}:{lineno}: time not strictly increasing")
            if vals[1] < 0:
                raise CycleParseError(f"{path}:{lineno}: negative speed")
            rows.append(vals)
    if not rows:
        raise CycleParseError(f"{path}: no data rows")
    data = np.array(rows)
    t_raw = data[:, 0]
    n = int(np.floor((t_raw[-1] - t_raw[0]) / cycle_dt + 1e-9)) + 1
    t = t_raw[0] + cycle_dt * np.arange(n)
    return DriveCycle(
        name=name or path.stem,
        cycle_dt=cycle_dt,
        t=t,
        v_veh=np.interp(t, t_raw, data[:, 1]),
        w_rad=np.interp(t, t_raw, data[:, 2]),
        t_amb=np.interp(t, t_raw, data[:, 3]),
    )


# (time s, speed m/s) knots: idle, urban stop-and-go and two faster stretches
_SC03_LIKE_SPEED = (
    (0, 0.0), (20, 0.0), (40, 12.0), (80, 12.0), (100, 0.0), (115, 0.0),
    (150, 24.6), (230, 24.6), (250, 15.0), (290, 15.0), (310, 0.0), (330, 0.0),
    (355, 20.0), (420, 20.0), (440, 24.0), (500, 24.0), (520, 8.0), (545, 8.0),
    (560, 0.0), (600, 0.0),
)


def synthetic_sc03(cycle_dt: float = 5.0, t_amb: float = 308.15) -> DriveCycle:
    """600 s urban cycle with SC03-like speeds and irradiance falling 1000 to 400 W/m2."""
    knots = np.array(_SC03_LIKE_SPEED, dtype=float)
    t = np.arange(0.0, 600.0 + 1e-9, cycle_dt)
    return DriveCycle(
        name="sc03-synthetic",
        cycle_dt=cycle_dt,
        t=t,
        v_veh=np.interp(t, knots[:, 0], knots[:, 1]),
        w_rad=1000.0 - 600.0 * t / 600.0,
        t_amb=np.full_like(t, t_amb),
    )


def write_cycle(cycle: DriveCycle, path) -> None:
    """Write ``cycle`` as CSV with round-trip exact floats."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CYCLE_COLUMNS)
        for row in zip(cycle.t, cycle.v_veh, cycle.w_rad, cycle.t_amb):
            w.writerow([repr(float(x)) for x in row])


def bundled_cycle_path() -> Path:
    return Path(str(resources.files("ceco") / "data" / "sc03_synthetic.csv"))


def preview_window(cycle: DriveCycle, k: int, cfg: MpcConfig, bounds: ComfortBoundsSpec) -> PreviewWindow:
    """Exact exogenous inputs and comfort bounds for steps ``k..k+N``."""
    times = (k + np.arange(cfg.horizon + 1)) * cfg.ts
    ex = [cycle.sample(cycle.t[0] + t) for t in times]
    lb, ub = comfort.comfort_bounds(times, bounds)
    return PreviewWindow(
        v_veh=np.array([e.v_veh for e in ex]),
        w_rad=np.array([e.w_rad for e in ex]),
        t_amb=np.array([e.t_amb for e in ex]),
        lb=np.asarray(lb, dtype=float),
        ub=np.asarray(ub, dtype=float),
    )


@dataclass
class TraceRecord:
    t: float
    state: ACState
    control: ControlInput
    p_comp: float
    p_bl: float
    y_pmv: float
    lb: float
    ub: float
    solver_iters: int
    solve_time: float
    eps: Optional[float] = None


@dataclass
class SimTrace:
    kind: str
    ts: float
    records: list[TraceRecord] = field(default_factory=list)
    solver_logs: list = field(default_factory=list, repr=False)

    def __len__(self):
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        getters = {
            "t": lambda r: r.t,
            "t_cab": lambda r: r.state.t_cab,
            "t_evap": lambda r: r.state.t_evap,
            "t_int": lambda r: r.state.t_int,
            "t_shell": lambda r: r.state.t_shell,
            "m_bl": lambda r: r.control.m_bl,
            "t_evap_sp": lambda r: r.control.t_evap_sp,
            "p_comp": lambda r: r.p_comp,
            "p_bl": lambda r: r.p_bl,
            "y_pmv": lambda r: r.y_pmv,
            "lb": lambda r: r.lb,
            "ub": lambda r: r.ub,
            "solver_iters": lambda r: r.solver_iters,
            "solve_time": lambda r: r.solve_time,
            "eps": lambda r: np.nan if r.eps is None else r.eps,
        }
        return np.array([getters[name](r) for r in self.records], dtype=float)

    def write_csv(self, path, record_timing: bool = False) -> None:
        """One row per sample.  ``solve_ms`` is left blank unless timing is recorded."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_COLUMNS)
            for r in self.records:
                w.writerow(
                    [repr(float(x)) for x in (
                        r.t, *r.state, *r.control, r.p_comp, r.p_bl, r.y_pmv, r.lb, r.ub,
                    )]
                    + [r.solver_iters, f"{1000 * r.solve_time:.3f}" if record_timing else ""]
                )


class SimulationError(RuntimeError):
    def __init__(self, message: str, trace: SimTrace):
        super().__init__(message)
        self.trace = trace


def run_closed_loop(
    kind: ControllerKind,
    cycle: DriveCycle,
    plant: PlantParams = PlantParams(),
    cfg: MpcConfig = MpcConfig(),
    occ: OccupantParams = OccupantParams(),
    bounds: ComfortBoundsSpec = ComfortBoundsSpec(),
    solver: SolverOptions = SolverOptions(),
    x0: ACState = HOT_SOAK,
    keep_solver_logs: bool = False,
) -> SimTrace:
    """Drive the surrogate plant with one controller over the cycle.

    The controller sees the nominal model; the plant runs perturbed
    parameters.  PMV is logged for the vent air actually delivered during
    each sample.
    """
    sim_plant = Plant(plant)
    ctrl = make_controller(kind, cfg, plant.ac, occ, solver)
    trace = SimTrace(kind=kind.value, ts=cfg.ts)
    n_steps = int(np.floor(cycle.duration / cfg.ts + 1e-9))
    x = x0
    for k in range(n_steps):
        t = k * cfg.ts
        ex = cycle.sample(cycle.t[0] + t)
        preview = preview_window(cycle, k, cfg, bounds)
        try:
            start = time.perf_counter()
            u, sol = ctrl.step(x, preview)
            elapsed = time.perf_counter() - start
            p_comp, p_bl = sim_plant.powers(x, u, ex)
            t_ain = sim_plant.vent_temp(x, u)
            y = float(
                comfort.pmv_modified(
                    x.t_cab - KELVIN, t_ain - KELVIN, x.t_int - KELVIN, u.m_bl, ex.w_rad, occ
                )
            )
            lb, ub = comfort.comfort_bounds(t, bounds)
            eps = None
            if kind is ControllerKind.CECO_IOCH:
                eps = float(sol.z_opt[2 * cfg.horizon])
            trace.records.append(
                TraceRecord(
                    t=t, state=x, control=u, p_comp=p_comp, p_bl=p_bl, y_pmv=y,
                    lb=float(lb), ub=float(ub),
                    solver_iters=0 if sol is None else sol.iterations,
                    solve_time=elapsed, eps=eps,
                )
            )
            if keep_solver_logs and sol is not None:
                trace.solver_logs.append((k, sol.log))
            x = sim_plant.step(x, u, ex)
        except Exception as exc:
            raise SimulationError(f"{kind.value} failed at t={t:g} s: {exc}", trace) from exc
    return trace


def total_energy(trace: SimTrace) -> float:
    return float(trace.ts * np.sum(trace.column("p_comp") + trace.column("p_bl")))


def comfort_index(trace: SimTrace) -> float:
    return float(trace.ts * np.sum(trace.column("y_pmv") ** 2))


def otc_violation(trace: SimTrace) -> float:
    y = trace.column("y_pmv")
    outside = (y > trace.column("ub")) | (y < trace.column("lb"))
    return float(100.0 * np.count_nonzero(outside) / len(y))


@dataclass
class MetricsReport:
    e_tot: float
    i_pmv: float
    otc_violation_pct: float
    mean_solve_time: Optional[float]

    def to_dict(self) -> dict:
        return asdict(self)


def metrics(trace: SimTrace, record_timing: bool = True) -> MetricsReport:
    solve = trace.column("solve_time")
    return MetricsReport(
        e_tot=total_energy(trace),
        i_pmv=comfort_index(trace),
        otc_violation_pct=otc_violation(trace),
        mean_solve_time=float(np.mean(solve)) if record_timing else None,
    )


@dataclass
class ComparisonRow:
    kind: ControllerKind
    report: Optional[MetricsReport]
    trace: Optional[SimTrace]
    savings_pct: Optional[float] = None
    error: Optional[str] = None


def compare_controllers(
    cycle: DriveCycle,
    plant: PlantParams = PlantParams(),
    cfg: MpcConfig = MpcConfig(),
    occ: OccupantParams = OccupantParams(),
    bounds: ComfortBoundsSpec = ComfortBoundsSpec(),
    solver: SolverOptions = SolverOptions(),
    kinds=tuple(ControllerKind),
    record_timing: bool = True,
) -> list[ComparisonRow]:
    """Run every controller on the same scenario; savings are relative to the baseline."""
    rows = []
    for kind in kinds:
        try:
            trace = run_closed_loop(kind, cycle, plant, cfg, occ, bounds, solver)
            rows.append(ComparisonRow(kind, metrics(trace, record_timing), trace))
        except SimulationError as exc:
            rows.append(ComparisonRow(kind, None, exc.trace, error=str(exc)))
    base = next((r for r in rows if r.kind is ControllerKind.BASELINE and r.report), None)
    if base is not None and base.report.e_tot > 0:
        for r in rows:
            if r.report is not None:
                r.savings_pct = 100.0 * (base.report.e_tot - r.report.e_tot) / base.report.e_tot
    return rows


def format_table(rows: list[ComparisonRow]) -> str:
    head = f"{'controller':<11} {'E_tot [kJ]':>11} {'saving [%]':>11} {'I_PMV':>10} {'OTC viol [%]':>13} {'solve [ms]':>11}"
    lines = [head, "-" * len(head)]
    for r in rows:
        if r.report is None:
            lines.append(f"{r.kind.value:<11} FAILED: {r.error}")
            continue
        m = r.report
        saving = "" if r.savings_pct is None else f"{r.savings_pct:.2f}"
        solve = "" if m.mean_solve_time is None else f"{1000 * m.mean_solve_time:.1f}"
        lines.append(
            f"{r.kind.value:<11} {m.e_tot / 1000:>11.2f} {saving:>11} {m.i_pmv:>10.2f} "
            f"{m.otc_violation_pct:>13.2f} {solve:>11}"
        )
    return "\n".join(lines)


def rows_to_json(rows: list[ComparisonRow]) -> str:
    out = {}
    for r in rows:
        entry = {"error": r.error} if r.report is None else r.report.to_dict()
        entry["savings_pct"] = r.savings_pct
        out[r.kind.value] = entry
    return json.dumps(out, indent=2, sort_keys=True)
