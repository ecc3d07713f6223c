"""Test-set metrics and the empirical reference minimiser."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, DenseMatrix
from .losses import LossSpec
from .prox import RegKind, RegSpec
from .solver import SolverConfig, fista_solve

__all__ = [
    "OracleBeta",
    "ZeroEstimateError",
    "estimate_beta_star",
    "l2_estimation_error",
    "misclassification",
    "prediction_error",
    "pinball_loss",
]

ORACLE_SOLVER = SolverConfig(max_iter=50000, rel_tol=1e-13)


class ZeroEstimateError(ValueError):
    """The normalised estimation error is undefined for a zero vector."""


@dataclass(frozen=True)
class OracleBeta:
    beta_star: np.ndarray
    support: np.ndarray
    objective: float = float("nan")
    n_iter: int = 0

    @classmethod
    def known(cls, beta_star) -> "OracleBeta":
        beta_star = np.asarray(beta_star, dtype=np.float64)
        return cls(beta_star, np.flatnonzero(beta_star))


def estimate_beta_star(
    test: Dataset,
    support,
    loss: LossSpec,
    ridge_eps: float = 1e-6,
    cfg: SolverConfig = ORACLE_SOLVER,
) -> OracleBeta:
    """Fit the loss on the support columns only, with a tiny ridge term.

    The result is embedded back into a length-``p`` vector.
    """
    support = np.asarray(support, dtype=np.intp)
    if support.size == 0 or support.size > test.p:
        raise ValueError("support must be a non-empty subset of the columns")
    sub = Dataset(test.X.columns(support), test.y)
    fit = fista_solve(sub, loss.with_ridge(ridge_eps), RegSpec(RegKind.NONE), cfg)
    beta = np.zeros(test.p)
    beta[support] = fit.beta
    return OracleBeta(beta, support, fit.objective, fit.n_iter)


def _ref(oracle) -> np.ndarray:
    return oracle.beta_star if isinstance(oracle, OracleBeta) else np.asarray(oracle, dtype=np.float64)


def l2_estimation_error(beta_hat, oracle) -> float:
    """``|| b / ||b|| - b* / ||b*|| ||_2``; raises for a zero estimate."""
    beta_hat = np.asarray(beta_hat, dtype=np.float64)
    ref = _ref(oracle)
    nh, nr = np.linalg.norm(beta_hat), np.linalg.norm(ref)
    if nh == 0.0:
        raise ZeroEstimateError("estimation error is undefined for a zero estimate")
    if nr == 0.0:
        raise ZeroEstimateError("estimation error is undefined for a zero reference vector")
    return float(np.linalg.norm(beta_hat / nh - ref / nr))


def misclassification(beta_hat, test: Dataset) -> float:
    """Fraction of samples with ``sign(<x, b>) != y``, using ``sign(0) = +1``."""
    if test.n == 0:
        raise ValueError("empty test set")
    u = test.X.values @ np.asarray(beta_hat, dtype=np.float64)
    pred = np.where(u >= 0, 1.0, -1.0)
    return float(np.mean(pred != test.y))


def prediction_error(beta_hat, oracle, X_test) -> float:
    """``(1/n) || X (b - b*) ||_2``."""
    A = X_test.values if isinstance(X_test, DenseMatrix) else np.asarray(X_test, dtype=np.float64)
    diff = np.asarray(beta_hat, dtype=np.float64) - _ref(oracle)
    if diff.shape != (A.shape[1],):
        raise ValueError(f"coefficient length {diff.size} does not match {A.shape[1]} columns")
    return float(np.linalg.norm(A @ diff) / A.shape[0])


def pinball_loss(beta_hat, test: Dataset, theta: float) -> float:
    if not 0 < theta < 1:
        raise ValueError(f"theta must lie in (0, 1); got {theta}")
    r = test.y - test.X.values @ np.asarray(beta_hat, dtype=np.float64)
    return float(np.mean(np.where(r <= 0, (theta - 1.0) * r, theta * r)))
