"""Computable diagnostics: penalty and merit values, projected stationarity
residuals, auxiliary functions with closed-form gradients, Lyapunov values,
and an empirical estimator of the constraint regularity constant.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .core import ProblemInstance, as_vector, eval_constraint_jacobian, eval_constraints, eval_objective
from .geometry import FeasibleSet, normal_cone_distance, project, prox_preconditioned


@dataclass(frozen=True)
class MetricsRecord:
    """Per-iteration diagnostics; ``g_val`` is always assembled from
    ``f_val`` and ``feas`` through the exact penalty formula."""

    k: int
    f_val: float
    feas: float
    g_val: float
    L_val: float
    H_val: float
    lambda_norm: float
    kkt_residual: float
    tracker_err: float
    lyapunov: float | None = None

    def to_json_line(self) -> str:
        return json.dumps(asdict(self))

    @staticmethod
    def from_json_line(line: str) -> "MetricsRecord":
        return MetricsRecord(**json.loads(line))


def _quad(rho: float, feas: float) -> float:
    # written so rho = 0 yields exactly 0 even when feas**2 overflows
    return 0.5 * rho * feas * feas if rho != 0.0 else 0.0


def penalty_g(prob: ProblemInstance, x, beta: float, rho: float) -> float:
    """Exact penalty value ``f + beta*||c|| + (rho/2)*||c||^2``."""
    f = eval_objective(prob, x)
    feas = float(np.linalg.norm(eval_constraints(prob, x)))
    return f + beta * feas + _quad(rho, feas)


def merit_L(prob: ProblemInstance, x, lam, rho: float) -> float:
    """Augmented Lagrangian value ``f + <lam, c> + (rho/2)*||c||^2``."""
    c = eval_constraints(prob, x)
    lam = as_vector(lam, prob.dim_constraint, "lam")
    return eval_objective(prob, x) + float(lam @ c) + _quad(rho, float(np.linalg.norm(c)))


def merit_H(prob: ProblemInstance, x, lam, rho: float, beta: float) -> float:
    """Modified merit: the augmented Lagrangian minus ``||c||*||lam||^2/(2*beta)``,
    strongly concave in the multiplier wherever the constraint is violated."""
    c = eval_constraints(prob, x)
    lam = as_vector(lam, prob.dim_constraint, "lam")
    L = eval_objective(prob, x) + float(lam @ c) + _quad(rho, float(np.linalg.norm(c)))
    return L - float(np.linalg.norm(c)) * float(lam @ lam) / (2.0 * beta)


def kkt_residual(prob: ProblemInstance, x, lam, eta_probe: float = 1e-3) -> float:
    """Projected-subgradient stationarity residual with the fixed selections.

    Returns ``||x - P(x - eta*(d + J lam))|| / eta``. Zero exactly when the
    fixed selection pair certifies stationarity; at smooth points it tends to
    the norm of the gradient of the Lagrangian as ``eta_probe`` shrinks.
    """
    if eta_probe <= 0:
        raise ValueError("eta_probe must be positive")
    x = as_vector(x, prob.dim_primal)
    lam = as_vector(lam, prob.dim_constraint, "lam")
    d = as_vector(prob.objective_subgradient(x), prob.dim_primal, "subgradient")
    J = eval_constraint_jacobian(prob, x)
    step = project(prob.feasible_set, x - eta_probe * (d + J @ lam))
    return float(np.linalg.norm(x - step)) / eta_probe


def u_momentum(fset: FeasibleSet, x, y, alpha: float) -> float:
    """Auxiliary value ``min_w <w - x, y> + (alpha/2)*||w - x||^2`` over the set.

    Nonpositive whenever ``x`` is feasible; zero only when the momentum has no
    feasible descent direction left.
    """
    x = as_vector(x, fset.dim)
    y = as_vector(y, fset.dim, "y")
    w = project(fset, x - y / alpha)
    d = w - x
    return float(d @ y) + 0.5 * alpha * float(d @ d)


def u_adam(fset: FeasibleSet, x, y, v, alpha: float, eps: float):
    """Weighted auxiliary value and its closed-form gradients.

    Returns ``(value, grad_x, grad_y, grad_v)`` for
    ``u(x,y,v) = min_z <z - x, y> + (1/(2*alpha)) <sqrt(v+eps)*(z-x), z-x>``.
    """
    x = as_vector(x, fset.dim)
    y = as_vector(y, fset.dim, "y")
    v = as_vector(v, fset.dim, "v")
    if np.any(v < 0):
        raise ValueError("second-moment entries must be nonnegative")
    if eps <= 0:
        raise ValueError("eps must be positive")
    root = np.sqrt(v + eps)
    z = prox_preconditioned(fset, x, y, root / alpha)
    d = z - x
    value = float(d @ y) + float(root @ (d * d)) / (2.0 * alpha)
    grad_x = -y + root * (x - z) / alpha
    grad_y = d
    grad_v = (d * d) / (4.0 * alpha * root)
    return value, grad_x, grad_y, grad_v


def lyapunov_momentum(
    h: Callable[[np.ndarray], float], fset: FeasibleSet, x, y, tau: float, alpha: float
) -> float:
    """Descent certificate ``h(x) - u_momentum(x, y)/tau`` for momentum runs."""
    return float(h(np.asarray(x, dtype=np.float64))) - u_momentum(fset, x, y, alpha) / tau


def lyapunov_adam(
    h: Callable[[np.ndarray], float],
    fset: FeasibleSet,
    x,
    y,
    v,
    tau1: float,
    alpha: float,
    eps: float,
) -> float:
    """Descent certificate ``h(x) - u_adam(x, y, v)/tau1`` for ADAM runs."""
    value, _, _, _ = u_adam(fset, x, y, v, alpha, eps)
    return float(h(np.asarray(x, dtype=np.float64))) - value / tau1


def exact_penalty_margin(prob: ProblemInstance, beta: float) -> float | None:
    """Margin ``beta - M_f / nu`` when both constants are known, else None.

    A positive margin certifies that stationary points of the penalty are
    feasible, so the dual-ball radius ``beta`` is large enough for the
    instance.
    """
    if prob.lipschitz_bound_f is None or prob.regularity_constant is None:
        return None
    return beta - prob.lipschitz_bound_f / prob.regularity_constant


def estimate_regularity(prob: ProblemInstance, sample_points) -> float:
    """Smallest observed ratio ``dist(-J c(x), N(x)) / ||c(x)||`` over the
    sample, an upper bound on the best constant certifiable from these points.

    Feasible points carry no information and are skipped; raises if every
    sample is feasible.
    """
    ratios = []
    for x in sample_points:
        c = eval_constraints(prob, x)
        nrm = float(np.linalg.norm(c))
        if nrm <= 1e-12:
            continue
        J = eval_constraint_jacobian(prob, x)
        ratios.append(normal_cone_distance(prob.feasible_set, x, J @ c) / nrm)
    if not ratios:
        raise ValueError("all sample points are feasible; ratio undefined")
    return float(min(ratios))


def assemble_record(
    prob: ProblemInstance,
    k: int,
    x: np.ndarray,
    lam: np.ndarray,
    w: np.ndarray,
    beta: float,
    rho: float,
    kkt_probe: float | None,
    lyapunov: float | None,
) -> MetricsRecord:
    """Build one metrics record; ``g_val`` uses the same floats as ``f_val``
    and ``feas`` so the penalty identity holds bitwise on re-parse."""
    f_val = eval_objective(prob, x)
    c = eval_constraints(prob, x)
    feas = float(np.linalg.norm(c))
    g_val = f_val + beta * feas + _quad(rho, feas)
    L_val = f_val + float(lam @ c) + _quad(rho, feas)
    H_val = L_val - feas * float(lam @ lam) / (2.0 * beta)
    kkt = kkt_residual(prob, x, lam, kkt_probe) if kkt_probe is not None else float("nan")
    return MetricsRecord(
        k=int(k),
        f_val=f_val,
        feas=feas,
        g_val=g_val,
        L_val=L_val,
        H_val=H_val,
        lambda_norm=float(np.linalg.norm(lam)),
        kkt_residual=kkt,
        tracker_err=float(np.linalg.norm(w - c)),
        lyapunov=lyapunov,
    )
