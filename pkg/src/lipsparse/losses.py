"""Smooth (or Nesterov-smoothed) empirical losses.

Every loss here is written as ``(1/n) sum_i f(u_i; y_i)`` with ``u = X beta``.
The solver works directly on the linear predictor ``u``, so each kind
exposes its value and derivative in ``u``; the coefficient-space gradient
is ``X^T`` applied to that derivative.

Hinge and quantile losses use the smoothing

    max_{|w| <= 1}  (1/2) (a z + w z) - (tau/2) w^2,

with ``a = 1, z = 1 - y u`` for the hinge and ``a = 2 theta - 1, z = y - u``
for the quantile loss. The maximiser is ``w = clip(z / (2 tau), -1, 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import expit

from .core import Dataset, DenseMatrix, as_matrix, spectral_norm_sq

__all__ = [
    "LossKind",
    "LossSpec",
    "LossEval",
    "smoothed_hinge_eval",
    "logistic_eval",
    "smoothed_quantile_eval",
    "least_squares_eval",
    "evaluate",
    "lipschitz_constant",
    "hinge_value",
    "pinball_value",
    "smoothed_hinge_pointwise",
    "loss_lipschitz",
]


class LossKind(str, Enum):
    SMOOTHED_HINGE = "smoothed_hinge"
    LOGISTIC = "logistic"
    SMOOTHED_QUANTILE = "smoothed_quantile"
    LEAST_SQUARES = "least_squares"


DEFAULT_TAU = 0.2


@dataclass(frozen=True)
class LossSpec:
    kind: LossKind
    tau: float = DEFAULT_TAU
    theta: float = 0.5
    l2_ridge: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", LossKind(self.kind))
        if self.kind in (LossKind.SMOOTHED_HINGE, LossKind.SMOOTHED_QUANTILE) and not self.tau > 0:
            raise ValueError(f"smoothing parameter tau must be > 0, got {self.tau}")
        if not 0.0 < self.theta < 1.0:
            raise ValueError(f"quantile level theta must lie in (0, 1), got {self.theta}")
        if not self.l2_ridge >= 0:
            raise ValueError(f"l2_ridge must be >= 0, got {self.l2_ridge}")

    @property
    def is_classification(self) -> bool:
        return self.kind in (LossKind.SMOOTHED_HINGE, LossKind.LOGISTIC)

    def with_ridge(self, l2_ridge: float) -> "LossSpec":
        return LossSpec(self.kind, self.tau, self.theta, l2_ridge)

    # -- evaluation on the linear predictor u = X beta ---------------------

    def value_u(self, u: np.ndarray, y: np.ndarray) -> float:
        if self.kind is LossKind.SMOOTHED_HINGE:
            return float(np.mean(_smoothed_abs_part(1.0 - y * u, 1.0, self.tau)))
        if self.kind is LossKind.SMOOTHED_QUANTILE:
            return float(np.mean(_smoothed_abs_part(y - u, 2 * self.theta - 1, self.tau)))
        if self.kind is LossKind.LOGISTIC:
            return float(np.mean(np.logaddexp(0.0, -y * u)))
        r = y - u
        return float(r @ r / r.size)

    def deriv_u(self, u: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Gradient of the loss value with respect to ``u`` (includes the 1/n)."""
        n = u.size
        if self.kind is LossKind.SMOOTHED_HINGE:
            w = np.clip((1.0 - y * u) / (2 * self.tau), -1.0, 1.0)
            return -0.5 * (1.0 + w) * y / n
        if self.kind is LossKind.SMOOTHED_QUANTILE:
            w = np.clip((y - u) / (2 * self.tau), -1.0, 1.0)
            return -0.5 * (2 * self.theta - 1 + w) / n
        if self.kind is LossKind.LOGISTIC:
            return -y * expit(-y * u) / n
        return -2.0 * (y - u) / n

    def ridge_value(self, beta: np.ndarray) -> float:
        return self.l2_ridge * float(beta @ beta) if self.l2_ridge else 0.0


@dataclass(frozen=True)
class LossEval:
    value: float
    gradient: np.ndarray


def _smoothed_abs_part(z: np.ndarray, a: float, tau: float) -> np.ndarray:
    w = np.clip(z / (2 * tau), -1.0, 1.0)
    return 0.5 * (a * z + w * z) - 0.5 * tau * w * w


def smoothed_hinge_pointwise(z, tau: float) -> np.ndarray:
    """Closed form of the per-sample smoothed hinge as a function of ``z = 1 - y u``."""
    z = np.asarray(z, dtype=np.float64)
    return np.where(
        z >= 2 * tau,
        z - tau / 2,
        np.where(z <= -2 * tau, -tau / 2, z / 2 + z * z / (8 * tau)),
    )


def evaluate(spec: LossSpec, data: Dataset, beta) -> LossEval:
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape != (data.p,):
        raise ValueError(f"beta has shape {beta.shape}, expected ({data.p},)")
    u = data.X.values @ beta
    value = spec.value_u(u, data.y) + spec.ridge_value(beta)
    grad = data.X.values.T @ spec.deriv_u(u, data.y)
    if spec.l2_ridge:
        grad = grad + 2 * spec.l2_ridge * beta
    return LossEval(value, grad)


def smoothed_hinge_eval(data: Dataset, beta, tau: float = DEFAULT_TAU) -> LossEval:
    data.check_binary()
    return evaluate(LossSpec(LossKind.SMOOTHED_HINGE, tau=tau), data, beta)


def logistic_eval(data: Dataset, beta) -> LossEval:
    data.check_binary()
    return evaluate(LossSpec(LossKind.LOGISTIC), data, beta)


def smoothed_quantile_eval(data: Dataset, beta, tau: float = DEFAULT_TAU, theta: float = 0.5) -> LossEval:
    return evaluate(LossSpec(LossKind.SMOOTHED_QUANTILE, tau=tau, theta=theta), data, beta)


def least_squares_eval(data: Dataset, beta) -> LossEval:
    return evaluate(LossSpec(LossKind.LEAST_SQUARES), data, beta)


def hinge_value(data: Dataset, beta) -> float:
    """Exact (unsmoothed) empirical hinge loss."""
    u = data.X.values @ np.asarray(beta, dtype=np.float64)
    return float(np.mean(np.maximum(0.0, 1.0 - data.y * u)))


def pinball_value(data: Dataset, beta, theta: float) -> float:
    """Exact empirical quantile loss ``(1/n) sum rho_theta(y_i - <x_i, beta>)``."""
    r = data.y - data.X.values @ np.asarray(beta, dtype=np.float64)
    return float(np.mean(np.where(r <= 0, (theta - 1.0) * r, theta * r)))


def lipschitz_constant(spec: LossSpec, X: DenseMatrix | np.ndarray) -> float:
    """Lipschitz constant of the gradient of the smooth part.

    Smoothed hinge and quantile: ``mu_max / (4 tau)``. Logistic: ``mu_max / 4``
    (sigmoid curvature bound). Least squares: ``2 mu_max``. A ridge term adds
    ``2 l2_ridge``. Here ``mu_max`` is the top eigenvalue of ``X^T X / n``.
    """
    mu = spectral_norm_sq(as_matrix(X))
    if spec.kind in (LossKind.SMOOTHED_HINGE, LossKind.SMOOTHED_QUANTILE):
        c = mu / (4 * spec.tau)
    elif spec.kind is LossKind.LOGISTIC:
        c = mu / 4
    else:
        c = 2 * mu
    return c + 2 * spec.l2_ridge


def loss_lipschitz(spec: LossSpec) -> float:
    """Lipschitz constant ``L`` of ``f(., y)`` itself (hinge 1, logistic 1, quantile max(theta, 1-theta))."""
    if spec.kind is LossKind.SMOOTHED_QUANTILE:
        return max(spec.theta, 1 - spec.theta)
    if spec.kind is LossKind.LEAST_SQUARES:
        raise ValueError("least squares is not Lipschitz")
    return 1.0
