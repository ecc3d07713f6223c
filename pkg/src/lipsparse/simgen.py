"""Seeded synthetic problems: sparse and group-sparse classification, heteroscedastic regression.

Random streams
--------------
Every problem is drawn from ``SeedSequence([seed, p, n])``. Its three spawned
children feed, in order, the training, validation and test sets, each
through a Philox counter-based bit generator. Changing ``n_val`` or
``n_test`` therefore never changes the training set.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .core import Dataset, DenseMatrix, GroupPartition, save_csv, standardize_columns

__all__ = [
    "Example",
    "ExperimentConfig",
    "GeneratedProblem",
    "generate",
    "gen_sparse_classification",
    "gen_group_classification",
    "gen_heteroscedastic_regression",
    "sample_mvn",
    "cholesky_factor",
    "equicorrelated_cov",
    "block_equicorrelated_cov",
    "toeplitz_cov",
    "export_problem",
    "rng_streams",
]

SCHEMA_VERSION = 1


class Example(str, Enum):
    SPARSE_CLASSIFICATION = "sparse_classification"
    GROUP_CLASSIFICATION = "group_classification"
    HETEROSCEDASTIC_REGRESSION = "heteroscedastic_regression"


@dataclass(frozen=True)
class ExperimentConfig:
    example: Example = Example.SPARSE_CLASSIFICATION
    n: int = 100
    p: int = 500
    k_star: int = 10
    s_star: int = 10
    g_star: int = 20
    delta: float = 0.5
    rho: float = 0.1
    snr: float = 1.0
    seed: int = 0
    n_val: int = 10000
    n_test: int = 10000
    standardize: bool = True
    snr_per_sample: bool = False

    def __post_init__(self):
        object.__setattr__(self, "example", Example(self.example))
        if self.n < 2 or self.p < 1 or self.n_val < 1 or self.n_test < 1:
            raise ValueError("sample sizes must be >= 2 (train) / >= 1 (validation, test) and p >= 1")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError(f"rho must lie in [0, 1); got {self.rho}")
        if self.example is Example.GROUP_CLASSIFICATION:
            if self.g_star < 1 or self.p % self.g_star:
                raise ValueError(f"p={self.p} is not divisible by the group size g*={self.g_star}")
            if not 1 <= self.s_star * self.g_star <= self.p:
                raise ValueError("need 1 <= s* g* <= p")
        elif not 1 <= self.k_star <= self.p:
            raise ValueError(f"k* must lie in [1, p]; got {self.k_star}")
        if self.example is Example.HETEROSCEDASTIC_REGRESSION and not self.snr > 0:
            raise ValueError(f"snr must be > 0; got {self.snr}")
        if self.example is not Example.HETEROSCEDASTIC_REGRESSION and self.delta < 0:
            raise ValueError("delta must be >= 0")

    def with_(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["example"] = self.example.value
        return d


@dataclass
class GeneratedProblem:
    """Training, validation and test sets plus the ground truth.

    ``beta_true`` is the regression coefficient vector for regression
    problems and the positive-class mean for classification problems.
    """

    config: ExperimentConfig
    train: Dataset
    validation: Dataset
    test: Dataset
    beta_true: np.ndarray
    support: np.ndarray
    groups: GroupPartition | None = None
    sigma: float = 0.0


def rng_streams(cfg: ExperimentConfig) -> list[np.random.Generator]:
    children = np.random.SeedSequence([cfg.seed, cfg.p, cfg.n]).spawn(3)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


def cholesky_factor(cov) -> np.ndarray:
    try:
        return np.linalg.cholesky(np.asarray(cov, dtype=np.float64))
    except np.linalg.LinAlgError as exc:
        raise ValueError("covariance matrix is not positive definite") from exc


def sample_mvn(mean, chol, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """``mean + chol @ z`` with ``z`` standard normal; ``size`` draws stacked as rows."""
    mean = np.asarray(mean, dtype=np.float64)
    chol = np.asarray(chol, dtype=np.float64)
    if size is None:
        return mean + chol @ rng.standard_normal(mean.size)
    return mean + rng.standard_normal((size, mean.size)) @ chol.T


def equicorrelated_cov(p: int, k: int, rho: float) -> np.ndarray:
    cov = np.eye(p)
    cov[:k, :k] = rho
    np.fill_diagonal(cov, 1.0)
    return cov


def block_equicorrelated_cov(p: int, g: int, rho: float) -> np.ndarray:
    block = np.full((g, g), rho)
    np.fill_diagonal(block, 1.0)
    return np.kron(np.eye(p // g), block)


def toeplitz_cov(p: int, rho: float) -> np.ndarray:
    idx = np.arange(p)
    return rho ** np.abs(idx[:, None] - idx[None, :]).astype(np.float64)


def _class_labels(m: int) -> np.ndarray:
    n_pos = (m + 1) // 2
    return np.concatenate([np.ones(n_pos), -np.ones(m - n_pos)])


def _finish_classification(X: np.ndarray, mean_plus: np.ndarray, standardize: bool) -> tuple[DenseMatrix, np.ndarray]:
    y = _class_labels(X.shape[0])
    X += y[:, None] * mean_plus[None, :]
    return (standardize_columns(X) if standardize else DenseMatrix(X)), y


def _draw_sparse(rng: np.random.Generator, m: int, cfg: ExperimentConfig):
    k, rho = cfg.k_star, cfg.rho
    X = rng.standard_normal((m, cfg.p))
    z0 = rng.standard_normal(m)
    # equicorrelated block: sqrt(rho) z0 + sqrt(1 - rho) z_j
    X[:, :k] *= math.sqrt(1.0 - rho)
    X[:, :k] += math.sqrt(rho) * z0[:, None]
    mean_plus = np.zeros(cfg.p)
    mean_plus[:k] = cfg.delta
    return _finish_classification(X, mean_plus, cfg.standardize)


def _draw_group(rng: np.random.Generator, m: int, cfg: ExperimentConfig):
    G, g, rho = cfg.p // cfg.g_star, cfg.g_star, cfg.rho
    X = rng.standard_normal((m, cfg.p))
    Z0 = rng.standard_normal((m, G))
    X *= math.sqrt(1.0 - rho)
    X += math.sqrt(rho) * np.repeat(Z0, g, axis=1)
    mean_plus = np.zeros(cfg.p)
    mean_plus[: cfg.s_star * g] = cfg.delta
    return _finish_classification(X, mean_plus, cfg.standardize)


def _draw_ar1(rng: np.random.Generator, m: int, cfg: ExperimentConfig) -> DenseMatrix:
    rho = cfg.rho
    Z = rng.standard_normal((m, cfg.p))
    if rho > 0:
        c = math.sqrt(1.0 - rho * rho)
        Z[:, 0] /= c
        Z = lfilter([c], [1.0, -rho], Z, axis=1)
    return standardize_columns(Z) if cfg.standardize else DenseMatrix(Z)


def _heteroscedastic_noise(rng: np.random.Generator, m: int, sigma: float) -> np.ndarray:
    eps = np.zeros(m)
    idx = rng.choice(m, m // 2, replace=False)
    eps[idx] = sigma * rng.standard_normal(idx.size)
    return eps


def gen_sparse_classification(cfg: ExperimentConfig) -> GeneratedProblem:
    cfg = cfg.with_(example=Example.SPARSE_CLASSIFICATION)
    sets = [Dataset(*_draw_sparse(r, m, cfg)) for r, m in zip(rng_streams(cfg), (cfg.n, cfg.n_val, cfg.n_test))]
    mean_plus = np.zeros(cfg.p)
    mean_plus[: cfg.k_star] = cfg.delta
    return GeneratedProblem(cfg, *sets, beta_true=mean_plus, support=np.arange(cfg.k_star))


def gen_group_classification(cfg: ExperimentConfig) -> GeneratedProblem:
    cfg = cfg.with_(example=Example.GROUP_CLASSIFICATION)
    groups = GroupPartition.contiguous(cfg.p, cfg.g_star)
    sets = [
        Dataset(*_draw_group(r, m, cfg), groups)
        for r, m in zip(rng_streams(cfg), (cfg.n, cfg.n_val, cfg.n_test))
    ]
    m_star = cfg.s_star * cfg.g_star
    mean_plus = np.zeros(cfg.p)
    mean_plus[:m_star] = cfg.delta
    return GeneratedProblem(cfg, *sets, beta_true=mean_plus, support=np.arange(m_star), groups=groups)


def gen_heteroscedastic_regression(cfg: ExperimentConfig) -> GeneratedProblem:
    """``y = X b* + eps`` with Gaussian noise on half of the samples only.

    ``sigma^2 = ||X_train b*||^2 / snr`` is computed on the (standardised)
    training design and reused for the validation and test sets. With
    ``snr_per_sample`` the ratio is per observation instead,
    ``sigma^2 = ||X_train b*||^2 / (n snr)``; this is not the default.
    """
    cfg = cfg.with_(example=Example.HETEROSCEDASTIC_REGRESSION)
    beta = np.zeros(cfg.p)
    beta[: cfg.k_star] = cfg.delta
    rngs = rng_streams(cfg)
    designs = [_draw_ar1(r, m, cfg) for r, m in zip(rngs, (cfg.n, cfg.n_val, cfg.n_test))]
    signal = designs[0].values @ beta
    scale = cfg.snr * (cfg.n if cfg.snr_per_sample else 1)
    sigma = 0.0 if math.isinf(cfg.snr) else math.sqrt(float(signal @ signal) / scale)
    sets = []
    for r, X in zip(rngs, designs):
        sets.append(Dataset(X, X.values @ beta + _heteroscedastic_noise(r, X.rows, sigma)))
    return GeneratedProblem(cfg, *sets, beta_true=beta, support=np.arange(cfg.k_star), sigma=sigma)


def generate(cfg: ExperimentConfig) -> GeneratedProblem:
    return {
        Example.SPARSE_CLASSIFICATION: gen_sparse_classification,
        Example.GROUP_CLASSIFICATION: gen_group_classification,
        Example.HETEROSCEDASTIC_REGRESSION: gen_heteroscedastic_regression,
    }[cfg.example](cfg)


def export_problem(problem: GeneratedProblem, directory) -> Path:
    """Write ``train.csv``, ``validation.csv``, ``test.csv`` and ``meta.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name in ("train", "validation", "test"):
        save_csv(getattr(problem, name), directory / f"{name}.csv")
    meta = {
        "schema_version": SCHEMA_VERSION,
        "config": problem.config.to_dict(),
        "support": problem.support.tolist(),
        "beta_true": problem.beta_true.tolist(),
        "sigma": problem.sigma,
        "groups": None if problem.groups is None else problem.groups.to_lists(),
    }
    (directory / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    return directory
