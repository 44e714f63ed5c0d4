import numpy as np
import pytest
from hypothesis import settings

from ceco.cabin import ACState
from ceco.comfort import ComfortBoundsSpec
from ceco.mpc import MpcConfig, PreviewWindow
from ceco.sim import preview_window, synthetic_sc03

settings.register_profile("ceco", deadline=None, max_examples=60)
settings.load_profile("ceco")


def make_preview(v=10.0, w=600.0, t_amb=308.15, lb=-0.5, ub=2.0, horizon=6):
    n = horizon + 1
    return PreviewWindow(
        v_veh=np.full(n, float(v)),
        w_rad=np.full(n, float(w)),
        t_amb=np.full(n, float(t_amb)),
        lb=np.full(n, float(lb)),
        ub=np.full(n, float(ub)),
    )


def random_scenario(rng):
    """A plausible mid-cycle state and the matching preview from the bundled cycle."""
    cycle = synthetic_sc03()
    cfg = MpcConfig()
    k = int(rng.integers(0, 110))
    x0 = ACState(
        t_cab=float(rng.uniform(298.0, 313.0)),
        t_evap=float(rng.uniform(276.0, 290.0)),
        t_int=float(rng.uniform(300.0, 315.0)),
        t_shell=float(rng.uniform(305.0, 318.0)),
    )
    return x0, preview_window(cycle, k, cfg, ComfortBoundsSpec())


@pytest.fixture(scope="session")
def cycle():
    return synthetic_sc03()


class CompareRows(list):
    """Rows of the default four-controller comparison plus the cycle used."""

    cycle = None


@pytest.fixture(scope="session")
def compare_rows(cycle):
    from ceco.sim import compare_controllers

    rows = CompareRows(compare_controllers(cycle, record_timing=False))
    rows.cycle = cycle
    return rows
