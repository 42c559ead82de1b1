"""Stochastic passenger and driver behaviour."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .market import DriverAttributes, PassengerRequest


@dataclass(frozen=True)
class TruncatedNormalSpec:
    min: float
    mean: float
    max: float
    sd: float

    def __post_init__(self):
        if not (self.min <= self.mean <= self.max) or not self.sd > 0:
            raise ValueError(f"invalid truncated normal {self}")


# Passenger patience in seconds, driver attributes in their own units.
MATCHING_PATIENCE = TruncatedNormalSpec(30.0, 60.0, 90.0, 6.0)
PICKUP_PATIENCE = TruncatedNormalSpec(300.0, 450.0, 600.0, 60.0)
GAMMA = {
    "g1": TruncatedNormalSpec(1.5, 1.8, 2.1, 0.1),
    "g2": TruncatedNormalSpec(1.2, 1.5, 1.8, 0.1),
    "g3": TruncatedNormalSpec(-1.9, -1.6, -1.3, 0.1),
    "g4": TruncatedNormalSpec(0.5, 4.0, 8.0, 1.0),
    "g5": TruncatedNormalSpec(0.8, 2.0, 4.2, 0.4),
    "g6": TruncatedNormalSpec(0.05, 0.2, 0.35, 0.05),
}


def compliance(attrs: DriverAttributes, r: float, charge_time: float, passenger: bool = False) -> float:
    """Probability a driver obeys a charging dispatch with discount ``r``.

    ``charge_time`` is the total charging trip duration in seconds. The log
    is clamped into [0, 1]; a non-positive log argument means 0.
    """
    if passenger:
        return 1.0
    arg = attrs.g1 + attrs.g2 * r + attrs.g3 * charge_time / 3600.0
    if arg <= 1.0:
        return 0.0
    return min(1.0, math.log(arg))


def compliance_array(g1, g2, g3, r, charge_time):
    """Vectorized :func:`compliance` over broadcastable arrays."""
    arg = g1 + g2 * np.asarray(r) + g3 * np.asarray(charge_time) / 3600.0
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(np.where(arg > 1.0, arg, 1.0))
    return np.minimum(out, 1.0)


def fatigue_probability(attrs: DriverAttributes, t_total: float) -> float:
    x = t_total - attrs.g4
    return 0.5 + x / (2.0 * math.sqrt(attrs.g5 + x * x))


def depletion_probability(attrs: DriverAttributes, soc: float, avg_incentive: float) -> float:
    return (1.0 - avg_incentive) / math.exp(attrs.g6 * soc)


def exit_probability(attrs: DriverAttributes, t_total: float, soc: float, avg_incentive: float) -> float:
    pf = fatigue_probability(attrs, t_total)
    pd = depletion_probability(attrs, soc, avg_incentive)
    return pf + pd - pf * pd


def type1_cancel_deadline(p: PassengerRequest) -> float:
    return p.request_time + p.matching_patience


def type2_accepts(p: PassengerRequest, offered_pickup: float) -> bool:
    return offered_pickup <= p.pickup_patience


def sample_truncated_normal(rng: np.random.Generator, spec: TruncatedNormalSpec) -> float:
    """Rejection sampling from N(mean, sd) restricted to [min, max]."""
    if spec.min == spec.max:
        return spec.min
    while True:
        x = rng.normal(spec.mean, spec.sd)
        if spec.min <= x <= spec.max:
            return float(x)


def sample_shift_start(rng: np.random.Generator, weights) -> float:
    """Seconds after midnight: hour drawn by weight, uniform within the hour."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (24,) or (w < 0).any() or not w.sum() > 0:
        raise ValueError("shift-start distribution needs 24 non-negative weights, one positive")
    hour = int(rng.choice(24, p=w / w.sum()))
    return 3600.0 * (hour + rng.random())


def sample_driver_attributes(rng: np.random.Generator, gamma=GAMMA, shift_start: float = 0.0) -> DriverAttributes:
    vals = {k: sample_truncated_normal(rng, gamma[k]) for k in ("g1", "g2", "g3", "g4", "g5", "g6")}
    return DriverAttributes(shift_start=shift_start, **vals)


def entity_rng(seed: int, kind: int, entity_id: int) -> np.random.Generator:
    """Independent stream per (seed, entity kind, entity id)."""
    return np.random.default_rng(np.random.SeedSequence([seed, kind, entity_id]))
