"""Dense design matrices, datasets and the linear algebra shared by the solvers."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "DenseMatrix",
    "GroupPartition",
    "Dataset",
    "PowerIterationWarning",
    "as_matrix",
    "matvec",
    "matvec_transpose",
    "standardize_columns",
    "spectral_norm_sq",
    "load_csv",
    "save_csv",
]


class PowerIterationWarning(RuntimeWarning):
    """Power iteration stopped at ``max_iter`` before reaching ``tol``."""


class DenseMatrix:
    """Row-major ``n x p`` matrix with a lazily cached column-norm vector.

    The wrapped array is made read-only so that cached quantities (column
    norms, spectral norm) stay valid for the lifetime of the object.
    """

    __slots__ = ("values", "_col_norms", "_spectral")

    def __init__(self, values):
        arr = np.array(values, dtype=np.float64, order="C", copy=True, ndmin=2)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-d array, got shape {arr.shape}")
        arr.setflags(write=False)
        self.values = arr
        self._col_norms = None
        self._spectral = {}

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def col_norms(self) -> np.ndarray:
        if self._col_norms is None:
            norms = np.sqrt(np.einsum("ij,ij->j", self.values, self.values))
            norms.setflags(write=False)
            self._col_norms = norms
        return self._col_norms

    def columns(self, idx) -> "DenseMatrix":
        return DenseMatrix(self.values[:, np.asarray(idx, dtype=np.intp)])

    def __repr__(self) -> str:
        return f"DenseMatrix(rows={self.rows}, cols={self.cols})"


def as_matrix(X) -> DenseMatrix:
    return X if isinstance(X, DenseMatrix) else DenseMatrix(X)


@dataclass(frozen=True)
class GroupPartition:
    """Disjoint index sets ``I_1, ..., I_G`` covering ``{0, ..., p-1}``."""

    members: tuple[np.ndarray, ...]
    ids: np.ndarray = field(repr=False)

    @classmethod
    def from_lists(cls, groups: Sequence[Sequence[int]], p: int | None = None) -> "GroupPartition":
        members = tuple(np.asarray(g, dtype=np.intp) for g in groups)
        if any(m.ndim != 1 or m.size == 0 for m in members):
            raise ValueError("every group must be a non-empty 1-d index list")
        flat = np.concatenate(members) if members else np.empty(0, dtype=np.intp)
        size = flat.size if p is None else p
        if flat.size != size or np.any(np.sort(flat) != np.arange(size)):
            raise ValueError(f"groups must be disjoint and cover exactly 0..{size - 1}")
        ids = np.empty(size, dtype=np.intp)
        for g, m in enumerate(members):
            ids[m] = g
        ids.setflags(write=False)
        return cls(members, ids)

    @classmethod
    def contiguous(cls, p: int, group_size: int) -> "GroupPartition":
        if group_size < 1 or p % group_size:
            raise ValueError(f"p={p} is not divisible by group size {group_size}")
        return cls.from_lists([range(s, s + group_size) for s in range(0, p, group_size)], p)

    @property
    def n_groups(self) -> int:
        return len(self.members)

    @property
    def p(self) -> int:
        return self.ids.size

    @property
    def sizes(self) -> np.ndarray:
        return np.array([m.size for m in self.members])

    def equal_contiguous(self) -> int | None:
        """Common group size if groups are ``[0..g), [g..2g), ...``, else None."""
        g = self.members[0].size
        if self.p % g:
            return None
        expected = np.repeat(np.arange(self.n_groups), g)
        if expected.size == self.p and np.array_equal(self.ids, expected):
            return g
        return None

    def to_lists(self) -> list[list[int]]:
        return [m.tolist() for m in self.members]


@dataclass(frozen=True)
class Dataset:
    X: DenseMatrix
    y: np.ndarray
    groups: GroupPartition | None = None

    def __post_init__(self):
        object.__setattr__(self, "X", as_matrix(self.X))
        y = np.array(self.y, dtype=np.float64).ravel()
        y.setflags(write=False)
        object.__setattr__(self, "y", y)
        if y.size != self.X.rows:
            raise ValueError(f"y has length {y.size} but X has {self.X.rows} rows")
        if self.groups is not None and self.groups.p != self.X.cols:
            raise ValueError(f"group partition covers {self.groups.p} features, X has {self.X.cols}")

    @property
    def n(self) -> int:
        return self.X.rows

    @property
    def p(self) -> int:
        return self.X.cols

    def is_binary(self) -> bool:
        return bool(np.all(np.abs(self.y) == 1.0))

    def check_binary(self) -> None:
        if not self.is_binary():
            raise ValueError("classification labels must be in {-1, +1}")


def _values(X) -> np.ndarray:
    return X.values if isinstance(X, DenseMatrix) else np.asarray(X, dtype=np.float64)


def matvec(X, v) -> np.ndarray:
    A = _values(X)
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (A.shape[1],):
        raise ValueError(f"vector of shape {v.shape} does not match {A.shape[1]} columns")
    return A @ v


def matvec_transpose(X, u) -> np.ndarray:
    A = _values(X)
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (A.shape[0],):
        raise ValueError(f"vector of shape {u.shape} does not match {A.shape[0]} rows")
    return A.T @ u


def standardize_columns(X) -> DenseMatrix:
    """Return a copy of ``X`` whose columns have unit Euclidean norm."""
    X = as_matrix(X)
    norms = X.col_norms
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValueError(f"column {zero[0]} is identically zero and cannot be standardized")
    return DenseMatrix(X.values / norms)


def _power_iteration(A: np.ndarray, v: np.ndarray, tol: float, max_iter: int) -> tuple[float, bool]:
    n = A.shape[0]
    v = v / np.linalg.norm(v)
    mu = 0.0
    for _ in range(max_iter):
        w = A.T @ (A @ v) / n
        mu_new = float(v @ w)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0, True
        v = w / norm
        if abs(mu_new - mu) <= tol * abs(mu_new):
            return mu_new, True
        mu = mu_new
    return mu, False


def spectral_norm_sq(X, tol: float = 1e-9, max_iter: int = 2000) -> float:
    """Largest eigenvalue of ``X^T X / n`` by power iteration.

    The iteration starts from the normalised all-ones vector. A second pass
    from a fixed pseudo-random vector (Philox, key 0) guards against a start
    that is orthogonal to the leading eigenvector; the larger Rayleigh quotient
    is returned. Results are cached on :class:`DenseMatrix` inputs.
    """
    mat = as_matrix(X)
    key = (tol, max_iter)
    if key in mat._spectral:
        return mat._spectral[key]
    A = mat.values
    if A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError("spectral norm needs n >= 1 and p >= 1")
    p = A.shape[1]
    rng = np.random.Generator(np.random.Philox(0))
    mu1, ok1 = _power_iteration(A, np.ones(p), tol, max_iter)
    mu2, ok2 = _power_iteration(A, rng.standard_normal(p), tol, max_iter)
    if not (ok1 and ok2):
        warnings.warn(
            f"power iteration did not reach tol={tol} in {max_iter} iterations",
            PowerIterationWarning,
            stacklevel=2,
        )
    mu = max(mu1, mu2)
    mat._spectral[key] = mu
    return mu


def load_csv(path, groups: GroupPartition | None = None) -> Dataset:
    """Read a headerless CSV whose last column is the response."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset file not found: {path}")
    data = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    if data.shape[1] < 2:
        raise ValueError(f"{path}: need at least one feature column and one response column")
    return Dataset(DenseMatrix(data[:, :-1]), data[:, -1], groups)


def save_csv(data: Dataset, path) -> None:
    table = np.column_stack([data.X.values, data.y])
    np.savetxt(path, table, delimiter=",", fmt="%.17g")
