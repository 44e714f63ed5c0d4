"""Static SVG panels for a trace CSV written by :meth:`SimTrace.write_csv`."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .comfort import KELVIN
from .sim import TRACE_COLUMNS

PANELS = ("pmv", "cabin_temp", "controls", "power")


class TraceParseError(ValueError):
    pass


def read_trace(path) -> dict[str, np.ndarray]:
    """Numeric columns of a trace CSV; ``solve_ms`` may be blank."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise TraceParseError(f"{path}: empty trace")
        missing = [c for c in TRACE_COLUMNS if c not in header]
        if missing:
            raise TraceParseError(f"{path}:1: missing column(s) {', '.join(missing)}")
        idx = {c: header.index(c) for c in TRACE_COLUMNS}
        cols = {c: [] for c in TRACE_COLUMNS}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise TraceParseError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            for c, i in idx.items():
                cell = row[i].strip()
                if c == "solve_ms" and cell == "":
                    cols[c].append(np.nan)
                    continue
                try:
                    cols[c].append(float(cell))
                except ValueError:
                    raise TraceParseError(f"{path}:{lineno}: bad value {cell!r} in column {c}") from None
    if not cols["t_s"]:
        raise TraceParseError(f"{path}: empty trace")
    return {c: np.asarray(v) for c, v in cols.items()}


def plot_trace(path, out_dir, stem: str | None = None) -> list[Path]:
    """Write the four SVG panels into ``out_dir`` and return their paths."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    data = read_trace(path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = stem or Path(path).stem
    t = data["t_s"]
    written = []

    with matplotlib.rc_context({"svg.hashsalt": "ceco", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(7, 3.5))
        ax.plot(t, data["y_pmv"], label="PMV")
        ax.plot(t, data["y_ub"], "k--", lw=1, label="upper bound")
        ax.plot(t, data["y_lb"], "k--", lw=1, label="lower bound")
        ax.set_ylabel("PMV")
        written.append(_save(fig, ax, t, out_dir / f"{stem}_pmv.svg"))

        fig, ax = plt.subplots(figsize=(7, 3.5))
        ax.plot(t, data["t_cab_k"] - KELVIN, label="cabin")
        ax.plot(t, data["t_evap_k"] - KELVIN, label="evaporator")
        ax.set_ylabel("temperature [degC]")
        written.append(_save(fig, ax, t, out_dir / f"{stem}_cabin_temp.svg"))

        fig, ax = plt.subplots(figsize=(7, 3.5))
        ax.plot(t, data["m_bl_kgps"], label="blower flow [kg/s]")
        ax.set_ylabel("blower flow [kg/s]")
        ax2 = ax.twinx()
        ax2.plot(t, data["t_evap_sp_k"] - KELVIN, color="C1", label="evaporator set-point")
        ax2.set_ylabel("set-point [degC]")
        written.append(_save(fig, ax, t, out_dir / f"{stem}_controls.svg", extra=ax2))

        fig, ax = plt.subplots(figsize=(7, 3.5))
        ax.plot(t, data["p_comp_w"], label="compressor")
        ax.plot(t, data["p_bl_w"], label="blower")
        ax.set_ylabel("power [W]")
        written.append(_save(fig, ax, t, out_dir / f"{stem}_power.svg"))
    return written


def _save(fig, ax, t, path: Path, extra=None) -> Path:
    import matplotlib.pyplot as plt

    ax.set_xlabel("time [s]")
    if len(t) > 1:
        ax.set_xlim(t[0], t[-1])
    handles, labels = ax.get_legend_handles_labels()
    if extra is not None:
        h2, l2 = extra.get_legend_handles_labels()
        handles, labels = handles + h2, labels + l2
    ax.legend(handles, labels, loc="best", fontsize="small")
    fig.tight_layout()
    # no date stamp so repeated runs produce identical files
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
