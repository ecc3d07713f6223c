"""Proximal operators ``argmin_b 1/2 ||b - eta||^2 + t * Omega(b)``.

Covers L1, sorted-L1 (Slope), group L1-L2 and group L1-Linf penalties and the
Euclidean projection onto an L1 ball.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numba
import numpy as np

from .core import GroupPartition

__all__ = [
    "RegKind",
    "RegSpec",
    "prox_l1",
    "prox_slope",
    "prox_group_l2",
    "project_l1_ball",
    "prox_group_linf",
    "apply_prox",
    "penalty_value",
    "slope_norm",
]


class RegKind(str, Enum):
    L1 = "l1"
    SLOPE = "slope"
    GROUP_L1L2 = "group_l1l2"
    GROUP_L1LINF = "group_l1linf"
    NONE = "none"


@dataclass(frozen=True)
class RegSpec:
    """Penalty description.

    ``lam`` scales every kind. For Slope the penalty is
    ``lam * sum_j weights[j] * |beta|_(j)``, so a path over ``lam`` rescales a
    fixed weight sequence.
    """

    kind: RegKind
    lam: float = 0.0
    weights: np.ndarray | None = None
    groups: GroupPartition | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", RegKind(self.kind))
        if not self.lam >= 0:
            raise ValueError(f"regularization level must be >= 0, got {self.lam}")
        if self.kind is RegKind.SLOPE:
            if self.weights is None:
                raise ValueError("slope penalty needs a weight vector")
            w = np.array(self.weights, dtype=np.float64)
            _check_slope_weights(w)
            w.setflags(write=False)
            object.__setattr__(self, "weights", w)
        if self.kind in (RegKind.GROUP_L1L2, RegKind.GROUP_L1LINF) and self.groups is None:
            raise ValueError(f"{self.kind.value} penalty needs a group partition")

    def with_lam(self, lam: float) -> "RegSpec":
        return RegSpec(self.kind, lam, self.weights, self.groups)


def _check_slope_weights(w: np.ndarray) -> None:
    if w.ndim != 1 or w.size == 0:
        raise ValueError("slope weights must be a non-empty 1-d vector")
    if np.any(w <= 0):
        raise ValueError("slope weights must be strictly positive")
    bad = np.flatnonzero(np.diff(w) > 0)
    if bad.size:
        raise ValueError(f"slope weights must be nonincreasing; increase at index {bad[0] + 1}")


def prox_l1(eta, t: float) -> np.ndarray:
    if t < 0:
        raise ValueError(f"threshold must be >= 0, got {t}")
    eta = np.asarray(eta, dtype=np.float64)
    return np.sign(eta) * np.maximum(np.abs(eta) - t, 0.0)


@numba.njit(cache=True)
def _pava_nonincreasing_clamped(v):
    # Blocks kept on a stack as (start, sum, count); merge while the newest
    # block's mean is not strictly below the previous one.
    n = v.size
    start = np.empty(n, dtype=np.int64)
    total = np.empty(n, dtype=np.float64)
    count = np.empty(n, dtype=np.int64)
    top = -1
    for i in range(n):
        top += 1
        start[top] = i
        total[top] = v[i]
        count[top] = 1
        while top > 0 and total[top] * count[top - 1] >= total[top - 1] * count[top]:
            total[top - 1] += total[top]
            count[top - 1] += count[top]
            top -= 1
    out = np.empty(n, dtype=np.float64)
    for b in range(top + 1):
        m = total[b] / count[b]
        if m < 0.0:
            m = 0.0
        for j in range(start[b], start[b] + count[b]):
            out[j] = m
    return out


def prox_slope(eta, weights, mu: float = 1.0) -> np.ndarray:
    """Prox of ``mu * sum_j weights[j] |b|_(j)``.

    Sorts ``|eta|`` decreasingly (stable, so ties keep index order), runs
    pool-adjacent-violators on ``|eta|_sorted - mu * weights`` under a
    nonincreasing constraint, clamps at zero, then restores order and signs.
    """
    eta = np.asarray(eta, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != eta.shape:
        raise ValueError(f"weights shape {weights.shape} does not match eta shape {eta.shape}")
    _check_slope_weights(weights)
    if mu < 0:
        raise ValueError(f"mu must be >= 0, got {mu}")
    if mu == 0:
        return eta.copy()
    mag = np.abs(eta)
    order = np.argsort(-mag, kind="stable")
    u = _pava_nonincreasing_clamped(mag[order] - mu * weights)
    out = np.empty_like(eta)
    out[order] = u
    return np.sign(eta) * out


def prox_group_l2(eta, groups: GroupPartition, t: float) -> np.ndarray:
    """Block soft-thresholding ``(1 - t / ||eta_g||)_+ eta_g`` for every group."""
    if t < 0:
        raise ValueError(f"threshold must be >= 0, got {t}")
    eta = np.asarray(eta, dtype=np.float64)
    norms = np.sqrt(np.bincount(groups.ids, weights=eta * eta, minlength=groups.n_groups))
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norms > t, 1.0 - t / norms, 0.0)
    return scale[groups.ids] * eta


def _project_l1_rows(A: np.ndarray, radius: float) -> np.ndarray:
    """Project each row of ``A`` onto the L1 ball of the given radius."""
    absA = np.abs(A)
    inside = absA.sum(axis=1) <= radius
    out = A.copy()
    todo = ~inside
    if not np.any(todo):
        return out
    if radius == 0:
        out[todo] = 0.0
        return out
    S = absA[todo]
    srt = -np.sort(-S, axis=1)
    css = np.cumsum(srt, axis=1)
    k = np.arange(1, S.shape[1] + 1)
    cond = srt - (css - radius) / k > 0
    rho = S.shape[1] - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = (css[np.arange(S.shape[0]), rho] - radius) / (rho + 1)
    out[todo] = np.sign(A[todo]) * np.maximum(S - theta[:, None], 0.0)
    return out


def project_l1_ball(eta, radius: float) -> np.ndarray:
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    eta = np.asarray(eta, dtype=np.float64)
    return _project_l1_rows(eta[None, :], radius)[0]


def prox_group_linf(eta, groups: GroupPartition, t: float) -> np.ndarray:
    """Prox of ``t * sum_g ||b_g||_inf`` through the Moreau identity.

    ``prox(eta_g) = eta_g - P_{||.||_1 <= t}(eta_g)`` for every group.
    """
    if t < 0:
        raise ValueError(f"threshold must be >= 0, got {t}")
    eta = np.asarray(eta, dtype=np.float64)
    g = groups.equal_contiguous()
    if g is not None:
        blocks = eta.reshape(-1, g)
        return (blocks - _project_l1_rows(blocks, t)).ravel()
    out = np.empty_like(eta)
    for m in groups.members:
        out[m] = eta[m] - project_l1_ball(eta[m], t)
    return out


def apply_prox(spec: RegSpec, eta, step: float) -> np.ndarray:
    """Proximal map of ``step * Omega`` where ``Omega`` is described by ``spec``."""
    if not step > 0:
        raise ValueError(f"step must be > 0, got {step}")
    t = step * spec.lam
    if spec.kind is RegKind.NONE:
        return np.array(eta, dtype=np.float64)
    if spec.kind is RegKind.L1:
        return prox_l1(eta, t)
    if spec.kind is RegKind.SLOPE:
        return prox_slope(eta, spec.weights, t)
    if spec.kind is RegKind.GROUP_L1L2:
        return prox_group_l2(eta, spec.groups, t)
    return prox_group_linf(eta, spec.groups, t)


def slope_norm(beta, weights) -> float:
    mag = -np.sort(-np.abs(np.asarray(beta, dtype=np.float64)))
    return float(mag @ np.asarray(weights, dtype=np.float64))


def penalty_value(spec: RegSpec, beta) -> float:
    beta = np.asarray(beta, dtype=np.float64)
    if spec.kind is RegKind.NONE:
        return 0.0
    if spec.kind is RegKind.L1:
        return spec.lam * float(np.abs(beta).sum())
    if spec.kind is RegKind.SLOPE:
        return spec.lam * slope_norm(beta, spec.weights)
    ids, G = spec.groups.ids, spec.groups.n_groups
    if spec.kind is RegKind.GROUP_L1L2:
        return spec.lam * float(np.sqrt(np.bincount(ids, weights=beta * beta, minlength=G)).sum())
    gmax = np.zeros(G)
    np.maximum.at(gmax, ids, np.abs(beta))
    return spec.lam * float(gmax.sum())
