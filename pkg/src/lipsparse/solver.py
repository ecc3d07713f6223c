"""Accelerated proximal gradient for ``smooth loss + penalty``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Dataset
from .losses import LossSpec, lipschitz_constant
from .prox import RegSpec, apply_prox, penalty_value

__all__ = ["SolverConfig", "FitResult", "SolverError", "fista_solve", "objective_value", "next_q"]


class SolverError(FloatingPointError):
    """The objective became non-finite during the iterations."""


@dataclass(frozen=True)
class SolverConfig:
    max_iter: int = 20000
    rel_tol: float = 1e-8
    step_safety: float = 1.0
    record_trace: bool = False

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be > 0")
        if not self.step_safety >= 1:
            raise ValueError("step_safety must be >= 1")


@dataclass
class FitResult:
    beta: np.ndarray
    objective: float
    n_iter: int
    converged: bool
    trace: np.ndarray | None = None

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.beta))


def next_q(q: float) -> float:
    return (1.0 + math.sqrt(1.0 + 4.0 * q * q)) / 2.0


def objective_value(data: Dataset, loss: LossSpec, reg: RegSpec, beta) -> float:
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape != (data.p,):
        raise ValueError(f"beta has shape {beta.shape}, expected ({data.p},)")
    u = data.X.values @ beta
    return loss.value_u(u, data.y) + loss.ridge_value(beta) + penalty_value(reg, beta)


def _check_consistent(data: Dataset, loss: LossSpec, reg: RegSpec) -> None:
    if loss.is_classification:
        data.check_binary()
    if reg.weights is not None and reg.weights.size != data.p:
        raise ValueError(f"{reg.weights.size} slope weights for {data.p} features")
    if reg.groups is not None and reg.groups.p != data.p:
        raise ValueError(f"group partition covers {reg.groups.p} features, data has {data.p}")


def fista_solve(
    data: Dataset,
    loss: LossSpec,
    reg: RegSpec,
    cfg: SolverConfig = SolverConfig(),
    warm=None,
) -> FitResult:
    """Minimise ``loss(beta) + reg(beta)`` with FISTA and a fixed ``1/D`` step.

    ``D = cfg.step_safety * C`` where ``C`` is the gradient Lipschitz constant.
    Stops once ``|F_t - F_{t-1}| <= rel_tol * (1 + |F_t|)`` for the objective
    ``F`` evaluated at the proximal iterates.
    """
    _check_consistent(data, loss, reg)
    A, y = data.X.values, data.y
    step = 1.0 / (cfg.step_safety * lipschitz_constant(loss, data.X))
    ridge = loss.l2_ridge

    def full_objective(b, u):
        return loss.value_u(u, y) + (ridge * float(b @ b) if ridge else 0.0) + penalty_value(reg, b)

    prox_prev = np.zeros(data.p) if warm is None else np.array(warm, dtype=np.float64)
    if prox_prev.shape != (data.p,):
        raise ValueError(f"warm start has shape {prox_prev.shape}, expected ({data.p},)")
    u_prev = A @ prox_prev
    f_prev = full_objective(prox_prev, u_prev)
    if not math.isfinite(f_prev):
        raise SolverError("objective is not finite at the starting point")

    point, u_point = prox_prev, u_prev
    q = 1.0
    trace = [] if cfg.record_trace else None
    converged = False
    it = 0
    while it < cfg.max_iter:
        it += 1
        grad = A.T @ loss.deriv_u(u_point, y)
        if ridge:
            grad += 2 * ridge * point
        prox_new = apply_prox(reg, point - step * grad, step)
        u_new = A @ prox_new
        f_new = full_objective(prox_new, u_new)
        if not math.isfinite(f_new):
            raise SolverError(
                f"objective became non-finite at iteration {it}; step {step:.3g} may be too large"
            )
        if trace is not None:
            trace.append(f_new)
        q_new = next_q(q)
        mom = (q - 1.0) / q_new
        point = prox_new + mom * (prox_new - prox_prev)
        u_point = u_new + mom * (u_new - u_prev)
        q = q_new
        done = abs(f_new - f_prev) <= cfg.rel_tol * (1.0 + abs(f_new))
        prox_prev, u_prev, f_prev = prox_new, u_new, f_new
        if done:
            converged = True
            break

    return FitResult(
        beta=prox_prev,
        objective=f_prev,
        n_iter=it,
        converged=converged,
        trace=None if trace is None else np.asarray(trace),
    )
