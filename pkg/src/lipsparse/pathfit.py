"""Regularization paths on geometric grids and validation-set model selection."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .core import Dataset, spectral_norm_sq
from .losses import LossSpec
from .prox import RegKind, RegSpec
from .solver import FitResult, SolverConfig, SolverError, fista_solve

__all__ = [
    "Eta0Rule",
    "PathSpec",
    "PathResult",
    "eta0",
    "eta_grid",
    "fit_path",
    "select_by_validation",
    "validation_scores",
]

log = logging.getLogger(__name__)


class Eta0Rule(str, Enum):
    L1_COLSUM = "l1_colsum"
    ROW_NORM_SQ = "row_norm_sq"
    GROUP_LINF_RULE = "group_linf_rule"
    LASSO_XTY = "lasso_xty"
    RIDGE_SPECTRAL = "ridge_spectral"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class PathSpec:
    """Grid ``eta_i = eta_0 * ratio**i`` for ``i = 0..n_points-1``.

    ``ratio`` defaults to the value putting the last point at
    ``min_ratio * eta_0``; ``min_ratio`` just below 1e-4 keeps
    ``eta_M / eta_0 < 1e-4`` strictly.
    """

    n_points: int = 50
    eta0_rule: Eta0Rule = Eta0Rule.L1_COLSUM
    min_ratio: float = 0.99e-4
    explicit_eta0: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "eta0_rule", Eta0Rule(self.eta0_rule))
        if self.n_points < 2:
            raise ValueError("a path needs at least 2 points")
        if not 0 < self.min_ratio < 1:
            raise ValueError("min_ratio must lie in (0, 1)")
        if self.eta0_rule is Eta0Rule.EXPLICIT and not (self.explicit_eta0 and self.explicit_eta0 > 0):
            raise ValueError("explicit eta0 rule needs a positive explicit_eta0")

    @property
    def ratio(self) -> float:
        return self.min_ratio ** (1.0 / (self.n_points - 1))


@dataclass
class PathResult:
    etas: np.ndarray
    fits: list[FitResult]
    selected_index: int | None = None
    diagnostic: str | None = None
    scores: np.ndarray | None = field(default=None, repr=False)

    @property
    def selected(self) -> FitResult:
        if self.selected_index is None:
            raise ValueError("no grid point has been selected yet")
        return self.fits[self.selected_index]


def eta0(rule, data: Dataset, explicit: float | None = None) -> float:
    rule = Eta0Rule(rule)
    A = data.X.values
    if rule is Eta0Rule.L1_COLSUM:
        return float(np.abs(A).sum(axis=0).max())
    if rule is Eta0Rule.ROW_NORM_SQ:
        return float(np.einsum("ij,ij->i", A, A).max())
    if rule is Eta0Rule.GROUP_LINF_RULE:
        if data.groups is None:
            raise ValueError("the group_linf_rule needs a dataset with groups")
        colsum = np.abs(A).sum(axis=0)
        return float(np.bincount(data.groups.ids, weights=colsum).max())
    if rule is Eta0Rule.LASSO_XTY:
        return float(np.abs(A.T @ data.y).max())
    if rule is Eta0Rule.RIDGE_SPECTRAL:
        # top eigenvalue of X^T X (not normalised by n)
        return spectral_norm_sq(data.X) * data.n
    if explicit is None or not explicit > 0:
        raise ValueError("explicit eta0 must be a positive number")
    return float(explicit)


def eta_grid(eta_start: float, path: PathSpec) -> np.ndarray:
    return eta_start * path.ratio ** np.arange(path.n_points)


def _reg_at(template: RegSpec | None, loss: LossSpec, eta: float) -> tuple[LossSpec, RegSpec]:
    # a None template means ridge: the grid value becomes the l2 coefficient
    if template is None:
        return loss.with_ridge(eta), RegSpec(RegKind.NONE)
    return loss, template.with_lam(eta)


def fit_path(
    data: Dataset,
    loss: LossSpec,
    reg_template: RegSpec | None,
    path: PathSpec = PathSpec(),
    cfg: SolverConfig = SolverConfig(),
) -> PathResult:
    """Solve along the grid, warm-starting every point at the previous solution.

    ``reg_template`` fixes the penalty kind (and Slope weights or groups); its
    level is replaced by each grid value. Pass ``None`` for a ridge path, where
    the grid value is the l2 coefficient added to the loss. A template of kind
    ``none`` collapses the path to a single unpenalised fit.
    """
    if reg_template is not None and reg_template.kind is RegKind.NONE:
        fit = fista_solve(data, loss, reg_template, cfg)
        return PathResult(np.array([0.0]), [fit])

    etas = eta_grid(eta0(path.eta0_rule, data, path.explicit_eta0), path)
    fits: list[FitResult] = []
    warm = None
    diagnostic = None
    for i, eta in enumerate(etas):
        loss_i, reg_i = _reg_at(reg_template, loss, float(eta))
        try:
            fit = fista_solve(data, loss_i, reg_i, cfg, warm=warm)
        except SolverError as exc:
            diagnostic = f"path truncated at grid point {i} (eta={eta:.6g}): {exc}"
            log.warning(diagnostic)
            etas = etas[:i]
            break
        fits.append(fit)
        warm = fit.beta
    return PathResult(etas, fits, diagnostic=diagnostic)


def validation_scores(path: PathResult, val_data: Dataset, metric: str, beta_star=None, theta: float = 0.5) -> np.ndarray:
    from . import metrics

    if metric == "misclassification":
        return np.array([metrics.misclassification(f.beta, val_data) for f in path.fits])
    if metric == "prediction_error":
        if beta_star is None:
            raise ValueError("prediction_error selection needs the reference beta_star")
        return np.array([metrics.prediction_error(f.beta, beta_star, val_data.X) for f in path.fits])
    if metric == "pinball":
        return np.array([metrics.pinball_loss(f.beta, val_data, theta) for f in path.fits])
    raise ValueError(f"unknown metric {metric!r}")


def select_by_validation(
    path: PathResult, val_data: Dataset, metric: str, beta_star=None, theta: float = 0.5
) -> int:
    """Index of the grid point with the lowest validation score.

    Ties go to the earliest (largest eta, hence sparsest) grid point.
    """
    if not path.fits:
        raise ValueError("cannot select from an empty path")
    if val_data.p != path.fits[0].beta.size:
        raise ValueError("validation data has a different number of features")
    scores = validation_scores(path, val_data, metric, beta_star, theta)
    idx = int(np.argmin(scores))
    path.selected_index = idx
    path.scores = scores
    return idx
