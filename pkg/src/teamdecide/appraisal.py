"""Accuracy appraisals, influence centrality and DeGroot updating."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import STOCHASTIC_TOL, DomainError, NumericError

UNIT = "unit"
UPPER = "upper"  # accuracy known to lie in [0.5, 1]


@dataclass(frozen=True)
class BetaAppraisal:
    """Beta posterior over a responder's accuracy.

    Agents use a Beta scaled onto [0.5, 1] so that a (1, 1) prior is uniform
    over that interval with mean 0.75.
    """

    a: float = 1.0
    b: float = 1.0
    support: str = UNIT

    @property
    def mean(self) -> float:
        m = self.a / (self.a + self.b)
        if self.support == UPPER:
            return 0.5 + 0.5 * m
        return m

    def observe(self, correct: bool) -> "BetaAppraisal":
        return observe(self, correct)


def init_human_appraisal() -> BetaAppraisal:
    return BetaAppraisal(1.0, 1.0, UNIT)


def init_agent_appraisal() -> BetaAppraisal:
    return BetaAppraisal(1.0, 1.0, UPPER)


def observe(appraisal: BetaAppraisal, correct: bool) -> BetaAppraisal:
    if correct:
        return BetaAppraisal(appraisal.a + 1.0, appraisal.b, appraisal.support)
    return BetaAppraisal(appraisal.a, appraisal.b + 1.0, appraisal.support)


def check_stochastic(W) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {W.shape}")
    if np.isnan(W).any() or (W < 0).any():
        raise DomainError("matrix has negative or NaN entries")
    if np.abs(W.sum(axis=1) - 1.0).max() > STOCHASTIC_TOL:
        raise DomainError("matrix is not row stochastic")
    return W


class Centrality(NamedTuple):
    delta: np.ndarray
    iterations: int
    damped: bool


def _power_iterate(W, tol, max_iter):
    n = W.shape[0]
    x = np.full(n, 1.0 / n)
    for it in range(1, max_iter + 1):
        nxt = x @ W
        nxt /= nxt.sum()
        if np.abs(nxt - x).sum() <= tol:
            return nxt, it
        x = nxt
    return None, max_iter


def power_centrality(W, tol=1e-12, max_iter=10_000) -> Centrality:
    """Left eigenvector of a row-stochastic ``W`` at eigenvalue one.

    Power iteration starts from the uniform vector. If it fails to settle
    (reducible or periodic ``W``) the iteration is rerun on
    ``0.99 W + 0.01 U`` and the result is flagged as damped.
    """
    W = check_stochastic(W)
    delta, it = _power_iterate(W, tol, max_iter)
    if delta is not None:
        return Centrality(delta, it, False)
    n = W.shape[0]
    damped = 0.99 * W + 0.01 / n
    delta, it2 = _power_iterate(damped, tol, max_iter)
    if delta is None:
        raise NumericError("centrality power iteration did not converge, even with damping")
    return Centrality(delta, it + it2, True)


def centrality(W, tol=1e-12, max_iter=10_000) -> np.ndarray:
    return power_centrality(W, tol, max_iter).delta


@dataclass(frozen=True)
class InfluenceState:
    W: np.ndarray
    delta: np.ndarray

    @classmethod
    def from_matrix(cls, W) -> "InfluenceState":
        W = check_stochastic(W).copy()
        d = centrality(W)
        W.setflags(write=False)
        d.setflags(write=False)
        return cls(W, d)

    @classmethod
    def uniform(cls, n=4) -> "InfluenceState":
        return cls.from_matrix(np.full((n, n), 1.0 / n))


def aggregate_agent_appraisal(delta, pi) -> np.ndarray:
    """Centrality-weighted average of each member's rating of each agent."""
    delta = np.asarray(delta, dtype=float)
    pi = np.asarray(pi, dtype=float)
    if pi.ndim != 2 or delta.shape != (pi.shape[0],):
        raise DomainError(f"delta {delta.shape} does not match ratings {pi.shape}")
    if (pi < 0).any() or (pi > 1).any():
        raise DomainError("ratings must lie in [0,1]")
    return delta @ pi


def degroot_step(W, X) -> np.ndarray:
    return np.asarray(W, dtype=float) @ np.asarray(X, dtype=float)


def degroot_converge(W, X0, tol=1e-10, max_iter=10_000) -> np.ndarray:
    W = check_stochastic(W)
    x = np.asarray(X0, dtype=float)
    for _ in range(max_iter):
        nxt = W @ x
        if np.abs(nxt - x).max() <= tol:
            return nxt
        x = nxt
    raise NumericError("DeGroot iteration did not reach consensus")
