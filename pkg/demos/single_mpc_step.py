"""One receding-horizon step from a hot-soaked cabin for each MPC variant."""

import numpy as np

from ceco.comfort import ComfortBoundsSpec
from ceco.mpc import ControllerKind, MpcConfig, MpcController, mpc_step
from ceco.sim import HOT_SOAK, preview_window, synthetic_sc03

cycle = synthetic_sc03()
cfg = MpcConfig()
k = 40  # 200 s into the trip, the car is moving and the upper bound has relaxed
state = HOT_SOAK._replace(t_cab=301.15, t_evap=281.15)
preview = preview_window(cycle, k, cfg, ComfortBoundsSpec())
print("preview speed [m/s]", np.round(preview.v_veh, 1))
print("preview ub         ", np.round(preview.ub, 2))

for kind in (ControllerKind.CECO_E, ControllerKind.CECO_C, ControllerKind.CECO_IOCH):
    ctrl = MpcController(kind, cfg)
    u, sol = mpc_step(ctrl, state, preview)
    line = f"{kind.value:10s} m_bl {u.m_bl:.3f} kg/s  T_evap_sp {u.t_evap_sp - 273.15:5.2f} degC"
    line += f"  iters {sol.iterations:3d}  status {sol.status}"
    if kind is ControllerKind.CECO_IOCH:
        # slack tightens the upper PMV bound when the compressor is efficient
        line += f"  eps {np.round(sol.z_opt[2 * cfg.horizon:], 3)}"
    print(line)
