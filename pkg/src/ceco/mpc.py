"""Receding-horizon CECO controllers and the PI baseline.

Every controller returns one :class:`~ceco.cabin.ControlInput` per sample.
The MPC variants build a single-shooting program over the blower flow and
evaporator set-point sequences (plus the bound-tightening slack for
CECO-IOCH) and solve it with :mod:`ceco.nlp`.

Decision vector layout, horizon ``N``::

    [m_bl(0..N-1), t_evap_sp(0..N-1)]                 general / weighted
    [m_bl(0..N-1), t_evap_sp(0..N-1), eps(0..N-1)]    IOCH

Stage ``N`` has no control of its own and reuses the last one.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import cabin, comfort
from .cabin import ACParams, ACState, ControlInput
from .comfort import KELVIN, OccupantParams
from .nlp import NlpProblem, NlpSolution, NumericalFailure, SolverOptions, solve


class ControllerKind(enum.Enum):
    BASELINE = "baseline"
    CECO_E = "ceco-e"
    CECO_C = "ceco-c"
    CECO_IOCH = "ceco-ioch"


@dataclass(frozen=True)
class MpcConfig:
    horizon: int = 6
    ts: float = 5.0
    comfort_weight: float = 1e5  # W per PMV^2, used by CECO-C
    ioch_beta: float = 50.0  # W
    ioch_xi: float = 0.1
    ioch_eps_ub: float = 1.0
    ioch_reg: float = 1e-6
    pmv_soft_weight: float = 1e6  # W per PMV^2 of violation
    t_evap_lb: float = 274.15
    t_evap_ub: float = 293.15
    m_bl_min: float = cabin.M_BL_MIN
    m_bl_max: float = cabin.M_BL_MAX
    t_sp_min: float = cabin.T_SP_MIN
    t_sp_max: float = cabin.T_SP_MAX
    pi_kp: float = 0.05  # (kg/s)/K
    pi_ki: float = 0.002  # (kg/s)/(K s)
    pi_kb: float = 1.0
    pi_setpoint: float = 299.15
    baseline_t_sp: float = cabin.T_SP_MIN

    def validate(self) -> list[str]:
        errors = []
        if not self.horizon >= 1:
            errors.append("horizon must be >= 1")
        if not self.ts > 0:
            errors.append("ts must be > 0")
        if not self.comfort_weight >= 0:
            errors.append("comfort_weight must be >= 0")
        if not self.ioch_beta >= 0:
            errors.append("ioch_beta must be >= 0")
        if not self.ioch_xi > 0:
            errors.append("ioch_xi must be > 0")
        if not self.ioch_eps_ub >= 0:
            errors.append("ioch_eps_ub must be >= 0")
        if not self.ioch_reg >= 0:
            errors.append("ioch_reg must be >= 0")
        if not self.pmv_soft_weight > 0:
            errors.append("pmv_soft_weight must be > 0")
        if not self.t_evap_lb < self.t_evap_ub:
            errors.append("t_evap_lb must be < t_evap_ub")
        if not self.m_bl_min < self.m_bl_max:
            errors.append("m_bl_min must be < m_bl_max")
        if not self.t_sp_min < self.t_sp_max:
            errors.append("t_sp_min must be < t_sp_max")
        for name in ("pi_kp", "pi_ki", "pi_kb"):
            if not getattr(self, name) > 0:
                errors.append(f"{name} must be > 0")
        return errors


class PreviewWindow(NamedTuple):
    """Perfect preview for steps ``0..N`` (length ``N + 1`` arrays)."""

    v_veh: np.ndarray
    w_rad: np.ndarray
    t_amb: np.ndarray
    lb: np.ndarray
    ub: np.ndarray


class HorizonModel:
    """Batched single-shooting rollout of the nominal A/C model.

    ``T_int`` and ``T_shell`` are held at their measured values.  With
    ``use_speed_preview=False`` the efficiency multiplier is frozen at its
    current value over the horizon, i.e. only the weather preview is used.
    """

    def __init__(
        self,
        x0: ACState,
        preview: PreviewWindow,
        ac: ACParams,
        occ: OccupantParams,
        cfg: MpcConfig,
        *,
        comfort_weight: float = 0.0,
        ioch: bool = False,
        use_speed_preview: bool = True,
    ):
        self.x0 = x0
        self.preview = preview
        self.ac = ac
        self.occ = occ
        self.cfg = cfg
        self.comfort_weight = comfort_weight
        self.ioch = ioch
        n = cfg.horizon
        if len(preview.v_veh) != n + 1:
            raise ValueError(f"preview length {len(preview.v_veh)} != horizon + 1 = {n + 1}")
        eta = np.asarray(cabin.efficiency_multiplier(np.asarray(preview.v_veh, dtype=float), ac))
        self.eta = eta if use_speed_preview else np.full(n + 1, eta[0])
        self._cache_key = None
        self._cache = None

    @property
    def n_vars(self) -> int:
        return (3 if self.ioch else 2) * self.cfg.horizon

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        n, c = self.cfg.horizon, self.cfg
        lo = [np.full(n, c.m_bl_min), np.full(n, c.t_sp_min)]
        hi = [np.full(n, c.m_bl_max), np.full(n, c.t_sp_max)]
        if self.ioch:
            lo.append(np.zeros(n))
            hi.append(np.full(n, c.ioch_eps_ub))
        return np.concatenate(lo), np.concatenate(hi)

    def rollout(self, Z: np.ndarray):
        """Stage quantities for each candidate row of ``Z``.

        Returns a dict of arrays shaped ``(m, N + 1)``: ``t_cab``, ``t_evap``,
        ``t_ain``, ``p_comp``, ``p_bl``, ``pmv``, ``ub`` (tightened when
        IOCH), plus ``eps`` for IOCH.
        """
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        key = Z.tobytes()
        if key == self._cache_key:
            return self._cache
        n = self.cfg.horizon
        m = len(Z)
        ac, occ, pv = self.ac, self.occ, self.preview
        m_bl = Z[:, :n]
        t_sp = Z[:, n : 2 * n]
        eps = Z[:, 2 * n : 3 * n] if self.ioch else None

        shape = (m, n + 1)
        out = {k: np.empty(shape) for k in ("t_cab", "t_evap", "t_ain", "p_comp", "p_bl", "pmv", "ub")}
        if eps is not None:
            out["eps"] = np.empty(shape)
        t_cab = np.full(m, float(self.x0.t_cab))
        t_evap = np.full(m, float(self.x0.t_evap))
        t_int = float(self.x0.t_int)
        t_shell = float(self.x0.t_shell)
        held = ACState(t_cab, t_evap, t_int, t_shell)

        for i in range(n + 1):
            j = min(i, n - 1)
            u = ControlInput(m_bl[:, j], t_sp[:, j])
            t_ain = cabin.vent_air_temp(t_evap, u.m_bl, ac)
            load = u.m_bl * ac.air_cp * np.maximum(t_cab - t_ain, 0.0)
            out["t_cab"][:, i] = t_cab
            out["t_evap"][:, i] = t_evap
            out["t_ain"][:, i] = t_ain
            out["p_comp"][:, i] = load / (ac.cop_base * self.eta[i])
            out["p_bl"][:, i] = cabin.blower_power(u.m_bl, ac)
            out["pmv"][:, i] = comfort.pmv_modified(
                t_cab - KELVIN, t_ain - KELVIN, t_int - KELVIN, u.m_bl, pv.w_rad[i], occ
            )
            if eps is not None:
                out["eps"][:, i] = eps[:, j]
                out["ub"][:, i] = pv.ub[i] - eps[:, j]
            else:
                out["ub"][:, i] = pv.ub[i]
            if i < n:
                held = held._replace(t_cab=t_cab, t_evap=t_evap)
                t_cab = cabin.step_cabin_temp(held, u, t_ain, ac)
                t_evap = cabin.step_evap_temp(t_evap, u.t_evap_sp, ac)

        self._cache_key, self._cache = key, out
        return out

    def objective(self, Z):
        r = self.rollout(Z)
        cost = np.sum(r["p_comp"] + r["p_bl"], axis=1)
        if self.comfort_weight > 0:
            cost = cost + self.comfort_weight * np.sum(r["pmv"] ** 2, axis=1)
        if self.ioch:
            c = self.cfg
            cost = cost + c.ioch_beta * np.sum((self.eta - 1.0) / (r["eps"] + c.ioch_xi), axis=1)
            n = c.horizon
            cost = cost + c.ioch_reg * np.sum(np.atleast_2d(Z)[:, 2 * n :] ** 2, axis=1)
        return cost

    def pmv_residuals(self, Z):
        """``pmv - ub`` and ``lb - pmv`` per stage; positive means violated."""
        r = self.rollout(Z)
        return np.hstack([r["pmv"] - r["ub"], self.preview.lb - r["pmv"]])

    def evap_residuals(self, Z):
        r = self.rollout(Z)
        return np.hstack([r["t_evap"] - self.cfg.t_evap_ub, self.cfg.t_evap_lb - r["t_evap"]])

    def problem(self, soft_pmv: bool = True) -> NlpProblem:
        lo, hi = self.bounds()
        if soft_pmv:
            return NlpProblem(
                n=self.n_vars,
                objective=self.objective,
                lower=lo,
                upper=hi,
                constraints=self.evap_residuals,
                soft_constraints=self.pmv_residuals,
                soft_weight=self.cfg.pmv_soft_weight,
                batched=True,
            )
        return NlpProblem(
            n=self.n_vars,
            objective=self.objective,
            lower=lo,
            upper=hi,
            constraints=lambda Z: np.hstack([self.evap_residuals(Z), self.pmv_residuals(Z)]),
            batched=True,
        )


def build_general_ocp(x0, preview, cfg, ac=ACParams(), occ=OccupantParams(), **kw) -> NlpProblem:
    """Minimum compressor + blower power with (softened) comfort bounds."""
    return HorizonModel(x0, preview, ac, occ, cfg, **kw).problem()


def build_weighted_ocp(x0, preview, cfg, ac=ACParams(), occ=OccupantParams(), **kw) -> NlpProblem:
    """General problem plus ``cfg.comfort_weight * pmv^2`` per stage."""
    model = HorizonModel(x0, preview, ac, occ, cfg, comfort_weight=cfg.comfort_weight, **kw)
    return model.problem()


def build_ioch_ocp(x0, preview, cfg, ac=ACParams(), occ=OccupantParams(), **kw) -> NlpProblem:
    """General problem with a slack that tightens the upper PMV bound when efficient."""
    return HorizonModel(x0, preview, ac, occ, cfg, ioch=True, **kw).problem()


class MpcStepError(RuntimeError):
    pass


@dataclass
class MpcController:
    """One CECO controller with warm-start memory across steps."""

    kind: ControllerKind
    cfg: MpcConfig = MpcConfig()
    ac: ACParams = ACParams()
    occ: OccupantParams = OccupantParams()
    solver: SolverOptions = SolverOptions()
    warm: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind is ControllerKind.BASELINE:
            raise ValueError("use PIController for the baseline")

    def model(self, x0: ACState, preview: PreviewWindow) -> HorizonModel:
        if self.kind is ControllerKind.CECO_IOCH:
            return HorizonModel(x0, preview, self.ac, self.occ, self.cfg, ioch=True)
        weight = self.cfg.comfort_weight if self.kind is ControllerKind.CECO_C else 0.0
        return HorizonModel(
            x0, preview, self.ac, self.occ, self.cfg, comfort_weight=weight, use_speed_preview=False
        )

    def initial_guess(self, model: HorizonModel) -> np.ndarray:
        n = self.cfg.horizon
        if self.warm is not None and len(self.warm) == model.n_vars:
            blocks = self.warm.reshape(-1, n)
            # shift one step, duplicate the last entry
            return np.hstack([blocks[:, 1:], blocks[:, -1:]]).ravel()
        lo, hi = model.bounds()
        z0 = 0.5 * (lo + hi)
        if model.ioch:
            z0[2 * n :] = 0.0
        return z0

    def step(self, x0: ACState, preview: PreviewWindow) -> tuple[ControlInput, NlpSolution]:
        return mpc_step(self, x0, preview)


def mpc_step(
    ctrl: MpcController, x0: ACState, preview: PreviewWindow, warm_start: bool = True
) -> tuple[ControlInput, NlpSolution]:
    """Solve the controller's horizon problem and return the first move."""
    model = ctrl.model(x0, preview)
    problem = model.problem()
    if not warm_start:
        ctrl.warm = None
    z0 = ctrl.initial_guess(model)
    try:
        sol = solve(problem, z0, ctrl.solver)
    except NumericalFailure as exc:
        raise MpcStepError(f"{ctrl.kind.value}: solver failed at state {tuple(x0)}: {exc}") from exc
    ctrl.warm = sol.z_opt.copy()
    n = ctrl.cfg.horizon
    return ControlInput(float(sol.z_opt[0]), float(sol.z_opt[n])), sol


class PIState(NamedTuple):
    integral: float = 0.0  # actuator units, kg/s


def pi_baseline_step(pi_state: PIState, t_cab_meas: float, cfg: MpcConfig) -> tuple[ControlInput, PIState]:
    """Blower PI on cabin temperature with back-calculation anti-windup.

    The evaporator set-point stays at ``cfg.baseline_t_sp``.
    """
    e = t_cab_meas - cfg.pi_setpoint
    raw = cfg.pi_kp * e + pi_state.integral
    m_bl = min(max(raw, cfg.m_bl_min), cfg.m_bl_max)
    integral = pi_state.integral + cfg.pi_ki * cfg.ts * e + (m_bl - raw) / cfg.pi_kb
    return ControlInput(m_bl, cfg.baseline_t_sp), PIState(integral)


@dataclass
class PIController:
    cfg: MpcConfig = MpcConfig()
    state: PIState = PIState()

    def step(self, x0: ACState, preview: PreviewWindow = None):
        u, self.state = pi_baseline_step(self.state, x0.t_cab, self.cfg)
        return u, None


def make_controller(kind: ControllerKind, cfg: MpcConfig, ac: ACParams, occ: OccupantParams, solver: SolverOptions):
    if kind is ControllerKind.BASELINE:
        return PIController(cfg)
    return MpcController(kind, cfg, ac, occ, solver)

