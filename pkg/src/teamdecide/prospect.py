"""Prospect-theory valuation of two-outcome gambles and the PT decision models."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .core import DEFAULT_SCHEME, DomainError, RewardScheme, softmax

GAMMA_FLOOR = 0.01


@dataclass(frozen=True)
class PTParams:
    alpha: float = 1.0
    beta: float = 1.0
    lam: float = 1.0
    gamma_plus: float = 1.0
    gamma_minus: float = 1.0

    def __post_init__(self):
        if not (0 <= self.alpha <= 1 and 0 <= self.beta <= 1):
            raise DomainError("alpha and beta must lie in [0,1]")
        if not 0 <= self.lam <= 10:
            raise DomainError("lambda must lie in [0,10]")
        if not (0 < self.gamma_plus <= 1 and 0 < self.gamma_minus <= 1):
            raise DomainError("gamma+ and gamma- must lie in (0,1]")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PTParams":
        return cls(d["alpha"], d["beta"], d["lambda"], d["gamma_plus"], d["gamma_minus"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @property
    def as_tuple(self):
        return (self.alpha, self.beta, self.lam, self.gamma_plus, self.gamma_minus)


IDENTITY = PTParams()


@dataclass(frozen=True)
class Gamble:
    """Win ``gain`` with probability ``p``, otherwise take ``loss`` (<= 0)."""

    gain: float
    p: float
    loss: float

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise DomainError(f"gamble probability {self.p} outside [0,1]")
        if self.gain < 0 or self.loss > 0:
            raise DomainError("gamble needs gain >= 0 >= loss")


def weight(p, gamma):
    """Probability weighting exp(-(ln 1/p)^gamma)."""
    gamma = np.asarray(gamma, dtype=float)
    if (gamma <= 0).any():
        raise DomainError("gamma must be positive")
    p = np.asarray(p, dtype=float)
    if np.isnan(p).any() or (p < 0).any() or (p > 1).any():
        raise DomainError("probability outside [0,1]")
    # endpoints take their limits: w(0) = 0, w(1) = 1
    with np.errstate(divide="ignore"):
        out = np.exp(-np.power(-np.log(p), gamma))
    return float(out) if out.ndim == 0 else out


def pt_value_arrays(gain, p, loss_mag, alpha, beta, lam, gamma_plus, gamma_minus):
    """Vectorised gamble value; ``loss_mag`` is the positive size of the loss."""
    return (np.power(gain, alpha) * weight(p, gamma_plus)
            - lam * np.power(loss_mag, beta) * weight(1.0 - np.asarray(p, float), gamma_minus))


def pt_value(g: Gamble, params: PTParams) -> float:
    return float(pt_value_arrays(g.gain, g.p, abs(g.loss), params.alpha, params.beta,
                                 params.lam, params.gamma_plus, params.gamma_minus))


def dt1_gamble_magnitudes(scheme: RewardScheme = DEFAULT_SCHEME):
    """(gain, loss magnitude) for each of the eight DT1 actions."""
    gains = np.array([scheme.c1] * 4 + [scheme.c1 - scheme.c3] * 4, dtype=float)
    losses = np.array([scheme.c2] * 4 + [scheme.c2 + scheme.c3] * 4, dtype=float)
    return gains, losses


def pt_dt1_values(option_post, agent_probs, params: PTParams,
                  scheme: RewardScheme = DEFAULT_SCHEME) -> np.ndarray:
    gains, losses = dt1_gamble_magnitudes(scheme)
    p = np.concatenate([np.asarray(option_post, float), np.asarray(agent_probs, float)])
    return pt_value_arrays(gains, p, losses, params.alpha, params.beta, params.lam,
                           params.gamma_plus, params.gamma_minus)


def pt_dt1_distribution(option_post, agent_probs, params: PTParams,
                        scheme: RewardScheme = DEFAULT_SCHEME) -> np.ndarray:
    return softmax(pt_dt1_values(option_post, agent_probs, params, scheme))


def grid_gamma(step=0.1):
    g = np.round(np.arange(0.0, 1.0 + step / 2, step), 10)
    return np.where(g == 0.0, GAMMA_FLOOR, g)


def grid_alpha(step=0.1):
    return np.round(np.arange(0.0, 1.0 + step / 2, step), 10)


def grid_lambda(step=1.0):
    return np.round(np.arange(0.0, 10.0 + step / 2, step), 10)
