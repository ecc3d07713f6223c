"""Sparse estimation with Lipschitz losses: smoothed losses, proximal operators,
an accelerated proximal gradient solver, regularization paths and simulation tooling."""

from .core import Dataset, DenseMatrix, GroupPartition, load_csv, save_csv, spectral_norm_sq, standardize_columns
from .losses import LossKind, LossSpec, evaluate, lipschitz_constant
from .pathfit import Eta0Rule, PathSpec, fit_path, select_by_validation
from .prox import RegKind, RegSpec, apply_prox, prox_group_l2, prox_group_linf, prox_l1, prox_slope
from .solver import FitResult, SolverConfig, fista_solve

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "DenseMatrix",
    "GroupPartition",
    "load_csv",
    "save_csv",
    "spectral_norm_sq",
    "standardize_columns",
    "LossKind",
    "LossSpec",
    "evaluate",
    "lipschitz_constant",
    "Eta0Rule",
    "PathSpec",
    "fit_path",
    "select_by_validation",
    "RegKind",
    "RegSpec",
    "apply_prox",
    "prox_group_l2",
    "prox_group_linf",
    "prox_l1",
    "prox_slope",
    "FitResult",
    "SolverConfig",
    "fista_solve",
]
