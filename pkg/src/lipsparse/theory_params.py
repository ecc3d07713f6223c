"""Closed-form regularization levels, Slope weights and predicted error rates."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "TheoryInputs",
    "slope_weights",
    "lipschitz_eta",
    "lipschitz_loss_level",
    "least_squares_eta",
    "least_squares_level",
    "predicted_rate",
]


@dataclass(frozen=True)
class TheoryInputs:
    n: int
    p: int
    k_star: int = 1
    G: int = 1
    s_star: int = 1
    m_star: int = 1
    gamma: float = 1.0
    alpha: float = 2.0
    delta: float = 0.1
    L: float = 1.0
    M: float = 1.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be positive")
        if not 1 <= self.k_star <= self.p:
            raise ValueError(f"k_star must lie in [1, p]; got {self.k_star}")
        if not 1 <= self.s_star <= self.G:
            raise ValueError(f"s_star must lie in [1, G]; got s_star={self.s_star}, G={self.G}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1); got {self.delta}")
        if self.alpha < 2:
            raise ValueError(f"alpha must be >= 2; got {self.alpha}")
        if self.gamma < 1:
            raise ValueError(f"gamma must be >= 1; got {self.gamma}")
        if self.L < 0 or self.M < 0 or self.sigma < 0 or self.m_star < 1:
            raise ValueError("L, M, sigma must be >= 0 and m_star >= 1")


def slope_weights(r: int, p_len: int) -> np.ndarray:
    """``sqrt(log(2 r e / j))`` for ``j = 1..p_len``."""
    if r < 1 or p_len < 1:
        raise ValueError("r and p_len must be >= 1")
    j = np.arange(1, p_len + 1, dtype=np.float64)
    return np.sqrt(np.log(2.0 * r * math.e / j))


def _lambda_at(r: int, j: int) -> float:
    return math.sqrt(math.log(2.0 * r * math.e / j))


def lipschitz_eta(inp: TheoryInputs) -> float:
    return 12.0 * inp.alpha * inp.L * inp.M * math.sqrt(math.log(2.0 / inp.delta) / inp.n)


def lipschitz_loss_level(kind: str, inp: TheoryInputs):
    """Regularization level for a Lipschitz loss.

    ``kind='l1'`` gives a scalar, ``'slope'`` the full vector ``eta * lambda_j``,
    ``'group'`` the group level.
    """
    eta = lipschitz_eta(inp)
    if kind == "l1":
        return eta * _lambda_at(inp.p, inp.k_star)
    if kind == "slope":
        return eta * slope_weights(inp.p, inp.p)
    if kind == "group":
        extra = inp.alpha * inp.L * inp.M * math.sqrt(inp.gamma * inp.m_star / (inp.s_star * inp.n))
        return eta * _lambda_at(inp.G, inp.s_star) + extra
    raise ValueError(f"unknown kind {kind!r}; expected 'l1', 'slope' or 'group'")


def least_squares_eta(inp: TheoryInputs) -> float:
    return 24.0 * inp.alpha * inp.sigma * math.sqrt(math.log(2.0 / inp.delta) / inp.n)


def least_squares_level(kind: str, inp: TheoryInputs) -> float:
    eta = least_squares_eta(inp)
    if kind == "lasso":
        return eta * _lambda_at(inp.p, inp.k_star)
    if kind == "group_lasso":
        extra = inp.alpha * inp.sigma * math.sqrt(inp.gamma * inp.m_star / (inp.s_star * inp.n))
        return eta * _lambda_at(inp.G, inp.s_star) + extra
    raise ValueError(f"unknown kind {kind!r}; expected 'lasso' or 'group_lasso'")


def predicted_rate(kind: str, n: int, p: int = 1, k_star: int = 1, G: int = 1, s_star: int = 1, m_star: int = 0) -> float:
    """Error rate without constants.

    ``'sparse'``: ``sqrt(k* log(p/k*) / n)``; ``'group'``:
    ``sqrt((s* log(G/s*) + m*) / n)``. At ``k* = p`` the log term is 0.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if kind == "sparse":
        if not 1 <= k_star <= p:
            raise ValueError("need 1 <= k_star <= p")
        return math.sqrt(k_star * math.log(p / k_star) / n)
    if kind == "group":
        if not 1 <= s_star <= G:
            raise ValueError("need 1 <= s_star <= G")
        return math.sqrt((s_star * math.log(G / s_star) + m_star) / n)
    raise ValueError(f"unknown kind {kind!r}; expected 'sparse' or 'group'")
