"""Full 600 s trip for the PI baseline and the three MPC variants."""

from pathlib import Path

from ceco.plotting import plot_trace
from ceco.sim import compare_controllers, format_table, synthetic_sc03

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

cycle = synthetic_sc03()
rows = compare_controllers(cycle, record_timing=True)
print(format_table(rows))

# Cabin temperature every minute, to see the pull-down and the late drift
for r in rows:
    t_cab = r.trace.column("t_cab")[::12] - 273.15
    print(f"{r.kind.value:10s}", " ".join(f"{v:4.1f}" for v in t_cab))

for r in rows:
    csv_path = out / f"trace_{r.kind.value}.csv"
    r.trace.write_csv(csv_path)
    plot_trace(csv_path, out)
print("figures written to", out)
