"""Predicted mean vote (PMV) comfort model for a vehicle cabin.

The original indoor PMV index is evaluated in closed form (clothing surface
temperature included, no fixed-point iteration).  The automotive variant adds
solar load to the metabolic side of the heat balance, blends cabin and vent
air into the effective air temperature and ties air velocity to the blower.

Temperatures are in degrees Celsius here; the cabin model works in Kelvin and
converts at the call site.  Every function accepts numpy arrays as well as
scalars so the MPC rollout can evaluate many candidate trajectories at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KELVIN = 273.15

SENSATION_LABELS = {
    3: "Hot",
    2: "Warm",
    1: "Slightly warm",
    0: "Neutral",
    -1: "Slightly cool",
    -2: "Cool",
    -3: "Cold",
}


@dataclass(frozen=True)
class OccupantParams:
    """Seated occupant and the cabin-specific PMV modifiers.

    ``solar_exposure`` converts incident irradiance (as carried by the drive
    cycle) into the effective radiation power that enters the occupant heat
    balance.  With ``solar_exposure = 1`` the ``w_rad`` argument of
    :func:`pmv_modified` is taken as already effective.
    """

    metabolic_rate: float = 58.15  # W/m2, 1 met
    mech_power: float = 0.0  # W/m2
    clothing_insulation: float = 0.155 * 0.5  # m2K/W, 0.5 clo
    vapor_pressure: float = 1700.0  # Pa
    alpha1: float = 0.8
    alpha2: float = 0.2
    vent_velocity_gain: float = 5.0  # (m/s) per (kg/s)
    solar_exposure: float = 0.015

    def validate(self) -> list[str]:
        errors = []
        if not self.metabolic_rate > 0:
            errors.append("metabolic_rate must be > 0")
        if not self.mech_power >= 0:
            errors.append("mech_power must be >= 0")
        if not self.clothing_insulation >= 0:
            errors.append("clothing_insulation must be >= 0")
        if not self.vapor_pressure > 0:
            errors.append("vapor_pressure must be > 0")
        if not (self.alpha1 >= 0 and self.alpha2 >= 0):
            errors.append("alpha1 and alpha2 must be >= 0")
        if abs(self.alpha1 + self.alpha2 - 1.0) > 1e-9:
            errors.append("alpha1 + alpha2 must equal 1")
        if not self.vent_velocity_gain > 0:
            errors.append("vent_velocity_gain must be > 0")
        if not self.solar_exposure >= 0:
            errors.append("solar_exposure must be >= 0")
        return errors


@dataclass(frozen=True)
class ComfortEnv:
    t_a: float  # degC
    t_mr: float  # degC
    v_air: float  # m/s
    w_rad: float = 0.0  # W/m2, effective


@dataclass(frozen=True)
class ComfortBoundsSpec:
    lb_const: float = -0.5
    ub_final: float = 0.5
    ub_initial: float = 3.0
    ub_decay_tau: float = 120.0  # s

    def validate(self) -> list[str]:
        errors = []
        if not self.lb_const < self.ub_final:
            errors.append("lb_const must be < ub_final")
        if not self.ub_final <= self.ub_initial:
            errors.append("ub_final must be <= ub_initial")
        if not self.ub_decay_tau > 0:
            errors.append("ub_decay_tau must be > 0")
        return errors


def clothing_area_factor(i_cl):
    i_cl = np.asarray(i_cl, dtype=float)
    out = np.where(i_cl <= 0.078, 1.00 + 1.29 * i_cl, 1.05 + 0.645 * i_cl)
    return out[()]


def convective_coeff(t_cl, t_a, v_air):
    """Larger of the natural and forced convection coefficients, W/(m2 K)."""
    natural = 2.38 * np.abs(np.asarray(t_cl, dtype=float) - t_a) ** 0.25
    forced = 12.1 * np.sqrt(v_air)
    return np.where(natural > forced, natural, forced)[()]


def _sweat_term(occ: OccupantParams):
    # 0.42 (M - W - 58.15), unclamped as it appears in the T_cl closed form
    return 0.42 * (occ.metabolic_rate - occ.mech_power - 58.15)


def cloth_surface_temp(occ: OccupantParams, t_a):
    """Clothing surface temperature in degC from the closed-form balance.

    The two vapour-pressure brackets use kPa, matching the magnitudes of
    their constants (5.73 and 5.87).
    """
    m = occ.metabolic_rate
    mw = m - occ.mech_power
    pa_kpa = occ.vapor_pressure / 1000.0
    bracket = (
        mw
        - 3.05 * (5.73 - 0.007 * mw - pa_kpa)
        - _sweat_term(occ)
        - 0.0173 * m * (5.87 - pa_kpa)
        - 0.0014 * m * (34.0 - np.asarray(t_a, dtype=float))
    )
    return (35.7 - 0.0275 * mw - occ.clothing_insulation * bracket)[()]


def dry_heat_loss(t_cl, env: ComfortEnv, f_cl, h_c):
    """Radiative plus convective loss from the clothed body, W/m2."""
    t_cl = np.asarray(t_cl, dtype=float)
    radiative = 3.96e-8 * f_cl * ((t_cl + 273.0) ** 4 - (np.asarray(env.t_mr) + 273.0) ** 4)
    return (radiative + f_cl * h_c * (t_cl - env.t_a))[()]


def evaporative_heat(occ: OccupantParams):
    """Skin diffusion plus sweating loss; sweating is never a heat gain."""
    mw = occ.metabolic_rate - occ.mech_power
    diffusion = 3.05e-3 * (5733.0 - 6.99 * mw - occ.vapor_pressure)
    return diffusion + max(_sweat_term(occ), 0.0)


def respiratory_convective(occ: OccupantParams, t_a):
    return (0.0014 * occ.metabolic_rate * (34.0 - np.asarray(t_a, dtype=float)))[()]


def respiratory_evaporative(occ: OccupantParams):
    return 1.7e-5 * occ.metabolic_rate * (5867.0 - occ.vapor_pressure)


def _sensitivity(occ: OccupantParams) -> float:
    return 0.303 * np.exp(-0.036 * occ.metabolic_rate) + 0.028


def _heat_losses(occ: OccupantParams, t_a, t_mr, v_air):
    t_cl = cloth_surface_temp(occ, t_a)
    f_cl = clothing_area_factor(occ.clothing_insulation)
    h_c = convective_coeff(t_cl, t_a, v_air)
    env = ComfortEnv(t_a=t_a, t_mr=t_mr, v_air=v_air)
    return (
        dry_heat_loss(t_cl, env, f_cl, h_c)
        + evaporative_heat(occ)
        + respiratory_convective(occ, t_a)
        + respiratory_evaporative(occ)
    )


def pmv_raw(occ: OccupantParams, env: ComfortEnv):
    """Indoor PMV without the reporting clamp."""
    mw = occ.metabolic_rate - occ.mech_power
    return _sensitivity(occ) * (mw - _heat_losses(occ, env.t_a, env.t_mr, env.v_air))


def pmv_original(occ: OccupantParams, env: ComfortEnv):
    """Indoor PMV, clamped to [-4, 4]."""
    return np.clip(pmv_raw(occ, env), -4.0, 4.0)[()]


def blended_air_temp(t_cab, t_ain, occ: OccupantParams):
    return occ.alpha1 * t_cab + occ.alpha2 * t_ain


def vent_air_velocity(m_bl, occ: OccupantParams):
    return occ.vent_velocity_gain * m_bl


def pmv_modified(t_cab, t_ain, t_int, m_bl, w_rad, occ: OccupantParams):
    """Cabin PMV with solar load and vent-air effects.

    Temperatures in degC, ``m_bl`` in kg/s and ``w_rad`` the incident
    irradiance in W/m2 (scaled by ``occ.solar_exposure``).  Mechanical work
    is taken as zero.  No clamp is applied so the value stays smooth for the
    optimizer.
    """
    t_a = blended_air_temp(t_cab, t_ain, occ)
    v_air = vent_air_velocity(m_bl, occ)
    seated = occ if occ.mech_power == 0.0 else _without_work(occ)
    gain = seated.metabolic_rate + occ.solar_exposure * np.asarray(w_rad, dtype=float)
    return (_sensitivity(seated) * (gain - _heat_losses(seated, t_a, t_int, v_air)))[()]


def _without_work(occ: OccupantParams) -> OccupantParams:
    from dataclasses import replace

    return replace(occ, mech_power=0.0)


def sensation_level(y: float) -> str:
    level = int(np.clip(np.floor(y + 0.5), -3, 3))
    return SENSATION_LABELS[level]


def comfort_bounds(t, spec: ComfortBoundsSpec):
    """Lower and upper PMV bounds at time ``t`` seconds into the trip."""
    t = np.asarray(t, dtype=float)
    ub = spec.ub_final + (spec.ub_initial - spec.ub_final) * np.exp(-t / spec.ub_decay_tau)
    lb = np.full_like(ub, spec.lb_const)
    return lb[()], ub[()]
