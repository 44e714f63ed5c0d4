"""Small dense NLP solver: box bounds plus smooth inequalities.

Minimizes ``f(z)`` subject to ``lower <= z <= upper`` and ``g(z) <= 0``.
Inequalities are folded into a quadratic penalty ``f + mu/2 * sum(max(g, 0)^2)``
whose weight grows until the violation drops below ``feas_tol``.  Each
penalty level is minimized by a projected BFGS iteration with an
epsilon-active set (Bertsekas, 1982) and an Armijo search along the
projection arc.

The iteration runs in box-normalized coordinates ``x = (z - lower) / width``
so that variables with very different units (kg/s next to Kelvin) are
treated evenly.  Gradients are central finite differences unless the problem
supplies one.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

CONVERGED = "converged"
MAX_ITER = "max_iter"
INFEASIBLE_SOFTENED = "infeasible_softened"


class NumericalFailure(ArithmeticError):
    """Objective or constraint evaluated to a non-finite value."""

    def __init__(self, message: str, z: np.ndarray):
        super().__init__(message)
        self.z = np.array(z, dtype=float)


@dataclass
class NlpProblem:
    """Smooth program over a finite box.

    ``soft_constraints`` are residuals ``s(z)`` charged at a fixed quadratic
    rate, ``soft_weight * sum(max(s, 0)^2)``, and are never tightened by the
    penalty schedule.  ``constraints`` are the hard inequalities.

    With ``batched=True`` the callables take a 2-D array of candidate points
    (one per row) and return one value, or one row, per point; finite
    differences then cost a single call.
    """

    n: int
    objective: Callable
    lower: np.ndarray
    upper: np.ndarray
    constraints: Optional[Callable] = None
    soft_constraints: Optional[Callable] = None
    soft_weight: float = 0.0
    gradient: Optional[Callable] = None
    batched: bool = False

    def __post_init__(self):
        self.lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (self.n,)).copy()
        self.upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (self.n,)).copy()
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise ValueError("box bounds must be finite")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")

    def _rows(self, fn, Z):
        if self.batched:
            return np.asarray(fn(Z), dtype=float).reshape(len(Z), -1)
        out = np.array([np.atleast_1d(fn(z)) for z in Z], dtype=float)
        return out.reshape(len(Z), -1)

    def eval_f(self, Z: np.ndarray) -> np.ndarray:
        """Objective at each row of ``Z``."""
        Z = np.atleast_2d(Z)
        out = self._rows(self.objective, Z)[:, 0]
        bad = ~np.isfinite(out)
        if bad.any():
            raise NumericalFailure("non-finite objective", Z[np.argmax(bad)])
        return out

    def eval_g(self, Z: np.ndarray) -> np.ndarray:
        return self._eval_vec(self.constraints, Z, "constraint")

    def eval_soft(self, Z: np.ndarray) -> np.ndarray:
        return self._eval_vec(self.soft_constraints, Z, "soft constraint")

    def _eval_vec(self, fn, Z, what):
        Z = np.atleast_2d(Z)
        if fn is None:
            return np.zeros((len(Z), 0))
        out = self._rows(fn, Z)
        bad = ~np.all(np.isfinite(out), axis=1)
        if bad.any():
            raise NumericalFailure(f"non-finite {what}", Z[np.argmax(bad)])
        return out

    def softened_objective(self, Z: np.ndarray) -> np.ndarray:
        """Objective plus the fixed-rate soft-constraint charge."""
        f = self.eval_f(Z)
        if self.soft_constraints is None:
            return f
        return f + self.soft_weight * np.sum(np.maximum(self.eval_soft(Z), 0.0) ** 2, axis=1)


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-4
    feas_tol: float = 1e-6
    max_iter: int = 200
    penalty_initial: float = 10.0
    penalty_growth: float = 10.0
    fd_step: float = 1e-6

    def validate(self) -> list[str]:
        errors = []
        for name in ("tol", "feas_tol", "max_iter", "penalty_initial", "penalty_growth", "fd_step"):
            if not getattr(self, name) > 0:
                errors.append(f"{name} must be > 0")
        if not self.penalty_growth > 1:
            errors.append("penalty_growth must be > 1")
        return errors


@dataclass
class IterationRecord:
    iter: int
    f: float
    penalized: float
    violation: float
    step: float
    grad_norm: float
    penalty: float


@dataclass
class NlpSolution:
    """Solver result.

    ``stationarity_residual`` is the infinity norm of the projected gradient
    of the penalized objective (box-normalized coordinates), divided by
    ``max(1, |penalized objective|)``.  ``max_iter`` status also covers a
    line search that can make no further progress.
    """

    z_opt: np.ndarray
    objective_value: float
    max_constraint_violation: float
    stationarity_residual: float
    iterations: int
    status: str
    log: list[IterationRecord] = field(default_factory=list, repr=False)

    def write_log(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iter", "f", "violation", "step_length", "grad_norm"])
            for r in self.log:
                w.writerow([r.iter, repr(r.f), repr(r.violation), repr(r.step), repr(r.grad_norm)])


def fd_steps(z: np.ndarray, fd_step: float) -> np.ndarray:
    return fd_step * np.maximum(1.0, np.abs(z))


def _fd_jacobian(values: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Central-difference Jacobian from stacked evaluations ``[z, z+h e_i, z-h e_i]``."""
    n = len(h)
    return (values[1 : n + 1] - values[n + 1 :]) / (2.0 * h[:, None])


def _stencil(z: np.ndarray, h: np.ndarray) -> np.ndarray:
    n = len(z)
    Z = np.empty((2 * n + 1, n))
    Z[0] = z
    Z[1 : n + 1] = z + np.diag(h)
    Z[n + 1 :] = z - np.diag(h)
    return Z


def fd_gradient(problem: NlpProblem, z: np.ndarray, fd_step: float):
    """Plain central-difference gradient of the softened objective.

    Returns ``(value, gradient)``.  Points are stepped off the box when ``z``
    sits on a bound, so callables must be defined slightly outside it.
    """
    h = fd_steps(z, fd_step)
    vals = problem.softened_objective(_stencil(z, h))
    return vals[0], _fd_jacobian(vals[:, None], h)[:, 0]


@dataclass
class _Eval:
    value: float
    grad: np.ndarray  # of the penalized objective
    grad_f: np.ndarray  # of the smooth objective alone
    # (weight, residuals, Jacobian n x m) per penalty block; charge is weight/2 * |max(r, 0)|^2
    blocks: list


def _evaluate(problem: NlpProblem, z: np.ndarray, opts: SolverOptions, penalty: float) -> _Eval:
    """Penalized objective, its gradient and the penalty residual Jacobians.

    Only smooth pieces are differenced; the ``max(., 0)^2`` charges are
    chained analytically through their residual Jacobians, so an iterate
    sitting on a constraint kink still gets a consistent gradient.
    """
    use_hard = problem.constraints is not None and penalty > 0
    use_soft = problem.soft_constraints is not None and problem.soft_weight > 0
    h = fd_steps(z, opts.fd_step)
    Z = _stencil(z, h)

    if problem.gradient is None:
        f = problem.eval_f(Z)
        value = f[0]
        grad_f = _fd_jacobian(f[:, None], h)[:, 0]
    else:
        value = problem.eval_f(z[None, :])[0]
        grad_f = np.asarray(problem.gradient(z), dtype=float).copy()
    grad = grad_f.copy()

    blocks = []
    if use_soft:
        blocks.append((2.0 * problem.soft_weight, problem.eval_soft(Z)))
    if use_hard:
        blocks.append((penalty, problem.eval_g(Z)))
    out = []
    for weight, R in blocks:
        r = R[0]
        J = _fd_jacobian(R, h)
        rp = np.maximum(r, 0.0)
        value += 0.5 * weight * np.sum(rp**2)
        grad += weight * J @ rp
        out.append((weight, r, J))
    return _Eval(value, grad, grad_f, out)


def _value_and_grad(problem: NlpProblem, z: np.ndarray, opts: SolverOptions, penalty: float):
    ev = _evaluate(problem, z, opts, penalty)
    return ev.value, ev.grad


def _penalized(problem: NlpProblem, Z: np.ndarray, penalty: float) -> np.ndarray:
    F = problem.softened_objective(Z)
    if problem.constraints is None or penalty == 0.0:
        return F
    viol = np.maximum(problem.eval_g(Z), 0.0)
    return F + 0.5 * penalty * np.sum(viol**2, axis=1)


def check_gradient(problem: NlpProblem, z, opts: SolverOptions = SolverOptions()) -> float:
    """Largest relative disagreement between the solver gradient and a finer FD gradient.

    Components are compared relative to ``max(|a_i|, |b_i|, 1e-3 * scale)``
    where ``scale`` is the larger gradient infinity norm; this keeps
    near-zero components from dominating through roundoff.
    """
    z = np.asarray(z, dtype=float)
    _, used = _value_and_grad(problem, z, opts, 0.0)
    _, fine = fd_gradient(problem, z, opts.fd_step / 10.0)
    scale = max(np.max(np.abs(used)), np.max(np.abs(fine)))
    if scale < 1e-12:
        return 0.0
    denom = np.maximum(np.maximum(np.abs(used), np.abs(fine)), 1e-3 * scale)
    return float(np.max(np.abs(used - fine) / denom))


def solve(problem: NlpProblem, z0, opts: SolverOptions = SolverOptions()) -> NlpSolution:
    """Minimize ``problem`` from ``z0`` (projected into the box first)."""
    lo, hi = problem.lower, problem.upper
    width = hi - lo
    fixed = width == 0
    width = np.where(fixed, 1.0, width)

    def to_z(x):
        return np.where(fixed, lo, lo + x * width)

    def evaluate(x, penalty):
        ev = _evaluate(problem, to_z(x), opts, penalty)
        ev.grad *= width
        ev.grad_f *= width
        ev.grad[fixed] = 0.0
        ev.grad_f[fixed] = 0.0
        for _, _, J in ev.blocks:
            J *= width[:, None]
            J[fixed] = 0.0
        return ev

    def violation(x):
        g = problem.eval_g(to_z(x)[None, :])[0]
        return float(np.max(g, initial=0.0))

    def measure(x):
        z = to_z(x)[None, :]
        return float(problem.softened_objective(z)[0]), violation(x)

    x = np.clip((np.asarray(z0, dtype=float) - lo) / width, 0.0, 1.0)
    x[fixed] = 0.0
    x_start = x.copy()

    log: list[IterationRecord] = []
    penalty = opts.penalty_initial if problem.constraints is not None else 0.0
    n_iter = 0
    status = MAX_ITER
    residual = np.inf

    while True:
        x, residual, n_iter, inner_ok = _projected_quasi_newton(
            evaluate, x, penalty, opts, n_iter, log, measure, ~fixed
        )
        viol = violation(x)
        if viol <= opts.feas_tol:
            status = CONVERGED if inner_ok else MAX_ITER
            break
        if n_iter >= opts.max_iter:
            status = MAX_ITER
            break
        if penalty * opts.penalty_growth > opts.penalty_initial * 1e12:
            status = INFEASIBLE_SOFTENED
            break
        penalty *= opts.penalty_growth

    # never hand back something worse than the starting point
    F_end = _penalized(problem, to_z(x)[None, :], penalty)[0]
    F_start = _penalized(problem, to_z(x_start)[None, :], penalty)[0]
    if F_start < F_end:
        x = x_start
        status = MAX_ITER if status == CONVERGED else status

    z = np.clip(to_z(x), lo, hi)
    return NlpSolution(
        z_opt=z,
        objective_value=float(problem.softened_objective(z[None, :])[0]),
        max_constraint_violation=violation(x),
        stationarity_residual=float(residual),
        iterations=n_iter,
        status=status,
        log=log,
    )


def _projected_gradient(x: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Gradient with components blocked by an active bound zeroed."""
    pg = g.copy()
    at_lo = x <= 0.0
    at_hi = x >= 1.0
    pg[at_lo] = np.minimum(g[at_lo], 0.0)
    pg[at_hi] = np.maximum(g[at_hi], 0.0)
    return pg


def _bfgs_update(B: np.ndarray, s: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Powell-damped BFGS update of a Hessian approximation (stays positive definite)."""
    Bs = B @ s
    sBs = s @ Bs
    if sBs <= 0:
        return B
    sy = s @ y
    if sy < 0.2 * sBs:
        theta = 0.8 * sBs / (sBs - sy)
        y = theta * y + (1.0 - theta) * Bs
        sy = s @ y
    return B - np.outer(Bs, Bs) / sBs + np.outer(y, y) / sy


def _newton_direction(B, ev: _Eval, free, d_fixed):
    """Minimize the piecewise-quadratic step model over the free variables.

    Model: ``grad_f.d + d'Bd/2 + sum weight/2 * |max(r + J'd, 0)|^2``.  The
    active rows are re-identified from the linearized residuals until they
    settle (semismooth Newton), so residuals hovering at zero do not make
    successive steps overshoot the kink alternately.
    """
    fixed_part = [(w, r + J[~free].T @ d_fixed[~free], J[free]) for w, r, J in ev.blocks]
    Bff = B[np.ix_(free, free)]
    rhs0 = -(ev.grad_f[free] + B[np.ix_(free, ~free)] @ d_fixed[~free])
    acts = [r > 0 for _, r, _ in fixed_part]
    d = None
    for _ in range(20):
        H = Bff.copy()
        rhs = rhs0.copy()
        for (w, r, J), act in zip(fixed_part, acts):
            if act.any():
                Ja = J[:, act]
                H += w * Ja @ Ja.T
                rhs -= w * Ja @ r[act]
        try:
            d = np.linalg.solve(H, rhs)
        except np.linalg.LinAlgError:
            return None
        new = [r + J.T @ d > 0 for _, r, J in fixed_part]
        if all(np.array_equal(a, b) for a, b in zip(acts, new)):
            break
        acts = new
    return d


def _projected_quasi_newton(evaluate, x, penalty, opts, n_iter, log, measure, movable):
    """Minimize one penalty level over the unit box.

    The step model is a damped BFGS approximation of the smooth objective
    plus the exact piecewise-quadratic penalty of the linearized residuals.
    Returns ``(x, residual, n_iter, converged)``; ``converged`` is False when
    the iteration budget runs out or the line search stalls.
    """
    ev = evaluate(x, penalty)
    n = len(x)
    B = None
    residual = np.inf
    armijo = 1e-4

    while True:
        g = ev.grad
        pg = _projected_gradient(x, g)
        residual = np.max(np.abs(pg), initial=0.0) / max(1.0, abs(ev.value))
        if residual <= opts.tol:
            return x, residual, n_iter, True
        if n_iter >= opts.max_iter:
            return x, residual, n_iter, False

        if B is None:
            B = np.eye(n) * max(np.max(np.abs(ev.grad_f), initial=0.0), 1e-8)
        # epsilon-active set: near a bound and pushed into it
        eps = min(1e-3, float(np.max(np.abs(pg))))
        active = (((x <= eps) & (g > 0)) | ((x >= 1.0 - eps) & (g < 0))) | ~movable
        free = ~active
        diag = np.diag(B).copy()
        for w, r, J in ev.blocks:
            diag += w * np.sum(J[:, r > 0] ** 2, axis=1)
        # epsilon-active variables go onto the bound they are pushed into
        d = np.zeros(n)
        d[active] = np.where(g[active] > 0, 0.0, 1.0) - x[active]
        d[~movable] = 0.0
        if free.any():
            d_free = _newton_direction(B, ev, free, d)
            if d_free is None:
                d_free = -g[free] / np.maximum(diag[free], 1e-12)
            d[free] = d_free
        if g @ d >= 0:
            d = -g / np.maximum(diag, 1e-12)
            d[~movable] = 0.0

        alpha = 1.0
        accepted = False
        for _ in range(40):
            x_new = np.clip(x + alpha * d, 0.0, 1.0)
            step = x_new - x
            if not step.any():
                break
            ev_new = evaluate(x_new, penalty)
            if ev_new.value <= ev.value + armijo * (g @ step):
                accepted = True
                break
            alpha *= 0.5
        n_iter += 1
        if not accepted:
            return x, residual, n_iter, False

        s = x_new - x
        B = _bfgs_update(B, s, ev_new.grad_f - ev.grad_f)
        x, ev = x_new, ev_new
        f_plain, viol = measure(x)
        log.append(
            IterationRecord(
                iter=n_iter,
                f=f_plain,
                penalized=float(ev.value),
                violation=viol,
                step=float(np.max(np.abs(s))),
                grad_norm=float(np.max(np.abs(_projected_gradient(x, ev.grad)), initial=0.0)),
                penalty=penalty,
            )
        )
