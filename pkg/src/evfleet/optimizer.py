"""Two-step dispatch optimization and the benchmark policies.

Step one picks, for every vehicle/charger pair, the discount maximizing
expected charging benefit weighted by driver compliance. Step two solves a
maximum-weight bipartite matching over vehicles and passengers/chargers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .assignment import max_weight_matching
from .behavior import compliance, compliance_array
from .market import Charger, MarketSnapshot, PassengerRequest, PricingConfig, Vehicle, full_charging_price
from .network import Network
from .valuation import (CHARGE_TARGET, MIN_PICKUP, ChargingPlan, ZoneForecaster, ZoneVehicle,
                        charging_benefit, delta_mvoc, passenger_benefit, passenger_feasible, plan_charging,
                        predicted_mvoc_charging, predicted_mvoc_passenger)

PASSENGER = "passenger"
CHARGER = "charger"

Target = tuple[str, int]
Assignment = list[tuple[int, Target]]

GRID_POINTS = 101
GOLDEN_ITERS = 60
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class ConstraintViolation(AssertionError):
    pass


@dataclass
class PairEvaluation:
    vehicle_id: int
    target: Target
    feasible: bool
    benefit: float = 0.0           # pi at the chosen discount, $
    discount: float = 0.0          # r*
    compliance: float = 1.0        # C at r*
    plan: ChargingPlan | None = None
    pickup: float = 0.0            # t_p for passenger pairs
    delta_rho: float = 0.0

    @property
    def weight(self) -> float:
        return self.compliance * self.benefit if self.feasible else 0.0


@dataclass(frozen=True)
class IncentiveContext:
    """Everything the compliance-weighted charging benefit depends on."""

    g1: float
    g2: float
    g3: float
    duration: float      # delta k, s
    amount: float        # delta s, kWh
    base: float          # benefit at r = 0
    slope: float         # benefit lost per unit of discount

    @classmethod
    def build(cls, attrs, plan: ChargingPlan, delta_rho: float, pricing: PricingConfig, k: float):
        return cls(attrs.g1, attrs.g2, attrs.g3, plan.duration, plan.amount,
                   charging_benefit(plan, 0.0, delta_rho, pricing, k),
                   full_charging_price(pricing, k) * plan.amount)

    def objective(self, r):
        r = np.asarray(r, dtype=float)
        return compliance_array(self.g1, self.g2, self.g3, r, self.duration) * (self.base - self.slope * r)


def optimal_incentives(ctxs: Sequence[IncentiveContext]) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized optimal discounts; returns (r*, C(r*) * pi(r*)).

    Scans a uniform grid on [0, 1], then golden-section refines inside the
    bracket around the best grid point; the refined point only replaces the
    grid point if it is strictly better.
    """
    n = len(ctxs)
    if n == 0:
        return np.zeros(0), np.zeros(0)
    col = lambda name: np.array([getattr(c, name) for c in ctxs])[:, None]
    g1, g2, g3, dk, base, slope = (col(x) for x in ("g1", "g2", "g3", "duration", "base", "slope"))

    def g(r):
        return compliance_array(g1, g2, g3, r, dk) * (base - slope * r)

    grid = np.linspace(0.0, 1.0, GRID_POINTS)[None, :]
    vals = g(grid)
    best = np.argmax(vals, axis=1)
    step = 1.0 / (GRID_POINTS - 1)
    r_grid = best * step
    g_grid = vals[np.arange(n), best]

    lo = np.clip(r_grid - step, 0.0, 1.0)[:, None]
    hi = np.clip(r_grid + step, 0.0, 1.0)[:, None]
    c = hi - _INVPHI * (hi - lo)
    d = lo + _INVPHI * (hi - lo)
    fc, fd = g(c), g(d)
    for _ in range(GOLDEN_ITERS):
        left = fc >= fd  # maximum lies in [lo, d]
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        c = hi - _INVPHI * (hi - lo)
        d = lo + _INVPHI * (hi - lo)
        fc, fd = g(c), g(d)
    r_ref = np.clip((lo + hi)[:, 0] / 2.0, 0.0, 1.0)
    g_ref = g(r_ref[:, None])[:, 0]
    take = g_ref > g_grid
    return np.where(take, r_ref, r_grid), np.where(take, g_ref, g_grid)


def optimal_incentive(ctx: IncentiveContext) -> tuple[float, float]:
    r, v = optimal_incentives([ctx])
    return float(r[0]), float(v[0])


def feasibility(v: Vehicle, target, k: float, net: Network) -> bool:
    """SoC feasibility of dispatching ``v`` to a passenger or charger."""
    if isinstance(target, PassengerRequest):
        t_p = net.travel_time(v.location, target.origin)
        return passenger_feasible(v, t_p, target.trip_time)
    if isinstance(target, Charger):
        return v.soc >= v.energy(net.travel_time(v.location, target.location))
    raise TypeError(f"unknown target {target!r}")


# --- benefit matrix and assignment ----------------------------------------------

@dataclass
class BenefitMatrix:
    vehicles: list[int]
    targets: list[Target]
    weights: np.ndarray                       # NaN where infeasible
    evaluations: dict[tuple[int, Target], PairEvaluation] = field(default_factory=dict)

    def entry(self, vehicle_id: int, target: Target) -> float | None:
        w = self.weights[self.vehicles.index(vehicle_id), self.targets.index(target)]
        return None if math.isnan(w) else float(w)


def build_benefit_matrix(evaluations: Iterable[PairEvaluation]) -> BenefitMatrix:
    evs = {(e.vehicle_id, e.target): e for e in evaluations if e.feasible}
    vehicles = sorted({v for v, _ in evs})
    targets = sorted({t for _, t in evs})
    w = np.full((len(vehicles), len(targets)), np.nan)
    ri = {v: i for i, v in enumerate(vehicles)}
    ci = {t: j for j, t in enumerate(targets)}
    for (v, t), e in evs.items():
        w[ri[v], ci[t]] = e.weight
    return BenefitMatrix(vehicles, targets, w, evs)


def solve_assignment(m: BenefitMatrix) -> Assignment:
    """Maximum total weight matching; non-positive pairs are never chosen."""
    pairs = max_weight_matching(np.nan_to_num(m.weights, nan=-1.0))
    return sorted((m.vehicles[i], m.targets[j]) for i, j in pairs)


def assignment_weight(m: BenefitMatrix, a: Assignment) -> float:
    return math.fsum(m.entry(v, t) for v, t in a)


def validate_assignment(a: Assignment, m: BenefitMatrix) -> None:
    """Check binary one-to-one matching, feasibility and discount bounds."""
    vs = [v for v, _ in a]
    ts = [t for _, t in a]
    if len(set(vs)) != len(vs):
        raise ConstraintViolation("a vehicle is dispatched more than once")
    if len(set(ts)) != len(ts):
        raise ConstraintViolation("a passenger or charger receives more than one vehicle")
    for key in a:
        e = m.evaluations.get(key)
        if e is None or not e.feasible:
            raise ConstraintViolation(f"infeasible pair {key}")
        if not 0.0 <= e.discount <= 1.0 or not 0.0 <= e.compliance <= 1.0:
            raise ConstraintViolation(f"discount or compliance out of bounds for {key}")
        if e.target[0] == PASSENGER and (e.compliance != 1.0 or e.discount != 0.0):
            raise ConstraintViolation(f"passenger pair {key} must have compliance 1")


# --- proposed strategy ------------------------------------------------------------

def evaluate_pairs(snapshot: MarketSnapshot, net: Network, pricing: PricingConfig,
                   forecaster: ZoneForecaster) -> list[PairEvaluation]:
    """Expected benefits of every feasible vehicle/passenger and vehicle/charger pair."""
    k = snapshot.clock
    out: list[PairEvaluation] = []
    charging: list[tuple[PairEvaluation, IncentiveContext]] = []
    for v in sorted(snapshot.vehicles, key=lambda x: x.id):
        rho_now = forecaster.present(v)
        dist = net.distances_from(v.location)
        for p in snapshot.passengers:
            t_p = float(dist[net.index(p.origin)])
            if not passenger_feasible(v, t_p, p.trip_time):
                continue
            left = v.soc - v.energy(t_p + p.trip_time)
            gain = forecaster.gain(p.destination, k + t_p + p.trip_time,
                                   ZoneVehicle(v.id, p.destination, left, v.consumption_kw))
            d_rho = delta_mvoc(rho_now, predicted_mvoc_passenger(gain, v, t_p, p.trip_time))
            pi = passenger_benefit(v, t_p, p.trip_time, p.waiting_time(k), d_rho, pricing)
            out.append(PairEvaluation(v.id, (PASSENGER, p.id), True, pi, pickup=t_p, delta_rho=d_rho))
        for ch in snapshot.chargers:
            t_c = float(dist[net.index(ch.location)])
            arrival = v.soc - v.energy(t_c)
            if arrival < 0 or arrival > CHARGE_TARGET * v.soc_max:
                continue
            plan = plan_charging(v, ch, k, net)
            gain = forecaster.gain(ch.location, k + plan.duration,
                                   ZoneVehicle(v.id, ch.location, CHARGE_TARGET * v.soc_max, v.consumption_kw))
            d_rho = delta_mvoc(rho_now, predicted_mvoc_charging(gain, v))
            ev = PairEvaluation(v.id, (CHARGER, ch.id), True, plan=plan, delta_rho=d_rho)
            charging.append((ev, IncentiveContext.build(v.attrs, plan, d_rho, pricing, k)))
    if charging:
        rs, _ = optimal_incentives([c for _, c in charging])
        for (ev, ctx), r in zip(charging, rs):
            ev.discount = float(r)
            ev.benefit = charging_benefit(ev.plan, ev.discount, ev.delta_rho, pricing, k)
            ev.compliance = compliance_array(ctx.g1, ctx.g2, ctx.g3, ev.discount, ctx.duration).item()
            out.append(ev)
    return out


# --- benchmark strategy ------------------------------------------------------------

def benchmark_assignment(snapshot: MarketSnapshot, net: Network,
                         exclude: Iterable[int] = ()) -> Assignment:
    """Maximize the sum of reciprocal pickup times over feasible pairs."""
    skip = set(exclude)
    vehicles = sorted((v for v in snapshot.vehicles if v.id not in skip), key=lambda v: v.id)
    passengers = sorted(snapshot.passengers, key=lambda p: p.id)
    if not vehicles or not passengers:
        return []
    w = np.full((len(vehicles), len(passengers)), np.nan)
    for i, v in enumerate(vehicles):
        dist = net.distances_from(v.location)
        for j, p in enumerate(passengers):
            t_p = float(dist[net.index(p.origin)])
            if passenger_feasible(v, t_p, p.trip_time):
                w[i, j] = 1.0 / max(t_p, MIN_PICKUP)
    pairs = max_weight_matching(np.nan_to_num(w, nan=-1.0))
    return sorted((vehicles[i].id, (PASSENGER, passengers[j].id)) for i, j in pairs)


@dataclass(frozen=True)
class ChargingOrder:
    vehicle_id: int
    charger_id: int
    discount: float
    plan: ChargingPlan
    compliance: float


def reactive_charging_orders(snapshot: MarketSnapshot, net: Network, full_incentive: bool,
                             threshold: float = 0.1) -> list[ChargingOrder]:
    """Send vacant vehicles below ``threshold`` of capacity to the queue-inclusive closest pile."""
    r = 1.0 if full_incentive else 0.0
    k = snapshot.clock
    taken: set[int] = set()
    orders = []
    for v in sorted(snapshot.vehicles, key=lambda x: x.id):
        if not v.soc < threshold * v.soc_max:
            continue
        best = None
        for ch in sorted(snapshot.chargers, key=lambda c: c.id):
            if ch.id in taken:
                continue
            t_c = net.travel_time(v.location, ch.location)
            if v.soc < v.energy(t_c):
                continue
            plan = plan_charging(v, ch, k, net)
            key = (plan.travel + plan.queue, ch.id)
            if best is None or key < best[0]:
                best = (key, ch, plan)
        if best is None:
            continue
        _, ch, plan = best
        taken.add(ch.id)
        orders.append(ChargingOrder(v.id, ch.id, r, plan, compliance(v.attrs, r, plan.duration)))
    return orders
