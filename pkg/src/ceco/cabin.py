"""Control-oriented A/C thermal model and the surrogate plant.

The nominal model advances the cabin air and evaporator wall temperatures in
discrete time (sample time ``ACParams.sample_time``) and gives the vent
discharge temperature as a static map.  Compressor and blower power are
estimated from the same quantities.  :class:`Plant` wraps the nominal
equations with one-time parameter perturbations plus first-order laws for the
interior and shell temperatures, and serves as the "true" vehicle in closed
loop simulations.

All temperatures are in Kelvin.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import NamedTuple

import numpy as np

T_MIN = 230.0
T_MAX = 360.0
M_BL_MIN = 0.05
M_BL_MAX = 0.17
T_SP_MIN = 276.15
T_SP_MAX = 283.15


class ModelDivergenceError(RuntimeError):
    """A temperature became non-finite or left the physical envelope."""


@dataclass(frozen=True)
class ACParams:
    gamma1: float = 0.02
    gamma2: float = 0.01
    gamma3: float = 0.25  # per kg/s
    gamma4: float = 1.0
    gamma5: float = -0.3
    gamma6: float = 1.0
    gamma7: float = 30.0  # K per kg/s
    tau1: float = 0.0
    tau2: float = 0.0
    tau3: float = 0.0
    sample_time: float = 5.0
    blower_power_coeff: float = 6.0e4  # W per (kg/s)^3
    cop_base: float = 2.5
    eta_speed_knots: tuple[tuple[float, float], ...] = ((0.0, 1.0), (30.0, 1.3))
    air_cp: float = 1005.0

    def validate(self) -> list[str]:
        errors = []
        for name in ("sample_time", "blower_power_coeff", "cop_base", "air_cp"):
            if not getattr(self, name) > 0:
                errors.append(f"{name} must be > 0")
        if not self.gamma1 + self.gamma2 + self.gamma3 * M_BL_MAX < 1:
            errors.append("gamma1 + gamma2 + 0.17*gamma3 must be < 1 (cabin contraction)")
        if not abs(self.gamma4 + self.gamma5) < 1:
            errors.append("|gamma4 + gamma5| must be < 1 (evaporator stability)")
        knots = self.eta_speed_knots
        if not knots:
            errors.append("eta_speed_knots must be nonempty")
        else:
            speeds = [k[0] for k in knots]
            mults = [k[1] for k in knots]
            if any(b < a for a, b in zip(speeds, speeds[1:])):
                errors.append("eta_speed_knots speeds must be nondecreasing")
            if any(b < a for a, b in zip(mults, mults[1:])):
                errors.append("eta_speed_knots multipliers must be nondecreasing")
            if any(m < 1 for m in mults):
                errors.append("eta_speed_knots multipliers must be >= 1")
            if mults[0] != 1.0:
                errors.append("eta_speed_knots first multiplier must be 1")
        return errors


class ACState(NamedTuple):
    t_cab: float
    t_evap: float
    t_int: float
    t_shell: float


class ControlInput(NamedTuple):
    m_bl: float
    t_evap_sp: float


class ExogenousSample(NamedTuple):
    v_veh: float
    w_rad: float
    t_amb: float


def _finite(value, what: str):
    if not np.all(np.isfinite(value)):
        raise ModelDivergenceError(f"{what} is not finite: {value!r}")
    return value


def step_cabin_temp(state: ACState, u: ControlInput, t_ain, p: ACParams):
    t_cab = state.t_cab
    nxt = (
        t_cab
        + p.gamma1 * (state.t_int - t_cab)
        + p.gamma2 * (state.t_shell - t_cab)
        + p.gamma3 * (t_ain - t_cab) * u.m_bl
        + p.tau1
    )
    return _finite(nxt, "cabin temperature")


def step_evap_temp(t_evap, t_evap_sp, p: ACParams):
    nxt = p.gamma4 * t_evap + p.gamma5 * (t_evap - t_evap_sp) + p.tau2
    return _finite(nxt, "evaporator temperature")


def vent_air_temp(t_evap, m_bl, p: ACParams):
    return p.gamma6 * t_evap + p.gamma7 * m_bl + p.tau3


def blower_power(m_bl, p: ACParams):
    return p.blower_power_coeff * m_bl**3


def efficiency_multiplier(v_veh, p: ACParams):
    speeds, mults = zip(*p.eta_speed_knots)
    # np.interp clamps to the end knots
    return np.interp(v_veh, speeds, mults)[()]


def compressor_power(state: ACState, u: ControlInput, ex: ExogenousSample, p: ACParams):
    t_ain = vent_air_temp(state.t_evap, u.m_bl, p)
    load = u.m_bl * p.air_cp * np.maximum(state.t_cab - t_ain, 0.0)
    return (load / (p.cop_base * efficiency_multiplier(ex.v_veh, p)))[()]


@dataclass(frozen=True)
class PlantParams:
    """Surrogate vehicle: perturbed nominal model plus interior/shell laws."""

    ac: ACParams = field(default_factory=ACParams)
    int_gain_cab: float = 0.025  # 1/step
    int_gain_rad: float = 1.5e-4  # K m2/W per step
    shell_gain_amb: float = 0.002  # 1/step
    shell_gain_speed: float = 0.002  # K s/m per step
    perturbation_seed: int = 7
    perturbation_fraction: float = 0.05

    def validate(self) -> list[str]:
        errors = list(self.ac.validate())
        for name in ("int_gain_cab", "int_gain_rad", "shell_gain_amb", "shell_gain_speed"):
            if not getattr(self, name) >= 0:
                errors.append(f"{name} must be >= 0")
        if not 0 <= self.perturbation_fraction <= 0.2:
            errors.append("perturbation_fraction must lie in [0, 0.2]")
        return errors


PERTURBED = ("gamma1", "gamma2", "gamma3", "gamma5", "gamma7")


def perturbed_params(p: PlantParams) -> ACParams:
    """Nominal parameters with seeded multiplicative noise on the gains.

    ``gamma4`` and ``gamma6`` are left alone: they multiply absolute
    temperatures, so a few percent would shift equilibria by tens of Kelvin.
    """
    if p.perturbation_fraction == 0:
        return p.ac
    rng = np.random.default_rng(p.perturbation_seed)
    factors = 1.0 + p.perturbation_fraction * rng.uniform(-1.0, 1.0, size=len(PERTURBED))
    changes = {name: getattr(p.ac, name) * f for name, f in zip(PERTURBED, factors)}
    return replace(p.ac, **changes)


class Plant:
    """Closed-loop stand-in for the vehicle A/C system."""

    def __init__(self, params: PlantParams):
        self.params = params
        self.true_ac = perturbed_params(params)

    def step(self, state: ACState, u: ControlInput, ex: ExogenousSample) -> ACState:
        return plant_step(state, u, ex, self.params, self.true_ac)

    def powers(self, state: ACState, u: ControlInput, ex: ExogenousSample) -> tuple[float, float]:
        """Compressor and blower power (W) drawn over the step starting at ``state``."""
        return (
            float(compressor_power(state, u, ex, self.true_ac)),
            float(blower_power(u.m_bl, self.true_ac)),
        )

    def vent_temp(self, state: ACState, u: ControlInput) -> float:
        return float(vent_air_temp(state.t_evap, u.m_bl, self.true_ac))


def plant_step(
    state: ACState,
    u: ControlInput,
    ex: ExogenousSample,
    p: PlantParams,
    true_ac: ACParams | None = None,
) -> ACState:
    ac = perturbed_params(p) if true_ac is None else true_ac
    t_ain = vent_air_temp(state.t_evap, u.m_bl, ac)
    t_cab = step_cabin_temp(state, u, t_ain, ac)
    t_evap = step_evap_temp(state.t_evap, u.t_evap_sp, ac)
    t_int = state.t_int + p.int_gain_cab * (state.t_cab - state.t_int) + p.int_gain_rad * ex.w_rad

    gap = state.t_shell - ex.t_amb
    move = p.shell_gain_amb * (-gap) - p.shell_gain_speed * ex.v_veh * np.sign(gap)
    # never cross ambient within a step
    if gap > 0:
        move = max(move, -gap)
    elif gap < 0:
        move = min(move, -gap)
    t_shell = state.t_shell + move

    nxt = ACState(float(t_cab), float(t_evap), float(t_int), float(t_shell))
    for name, value in zip(ACState._fields, nxt):
        if not (np.isfinite(value) and T_MIN <= value <= T_MAX):
            raise ModelDivergenceError(f"{name} left [{T_MIN}, {T_MAX}] K: {value!r}")
    return nxt


def param_field_names(cls) -> list[str]:
    return [f.name for f in fields(cls)]
