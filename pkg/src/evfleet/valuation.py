"""Charging physics, expected matching benefits and marginal value of charge."""

from __future__ import annotations

import bisect
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .assignment import max_weight_matching
from .market import (DAY, Charger, MarketSnapshot, PricingConfig, Vehicle,
                     charging_price)
from .network import Network

CHARGE_TARGET = 0.9
MIN_PICKUP = 1.0  # seconds; floor for reciprocal pickup weights


class InfeasibleError(ValueError):
    """The vehicle's SoC cannot cover the requested trip."""


@dataclass(frozen=True)
class ChargingPlan:
    travel: float      # t_c, s
    queue: float       # t_q, s
    amount: float      # delta s, kWh
    duration: float    # delta k, s

    @property
    def charge_seconds(self) -> float:
        return self.duration - self.travel - self.queue


def recharge_amount(v: Vehicle, t_c: float) -> float:
    """kWh needed to reach 90 % of capacity after driving ``t_c`` seconds."""
    arrival_soc = v.soc - v.energy(t_c)
    if arrival_soc < 0:
        raise InfeasibleError(f"vehicle {v.id} cannot reach a charger {t_c:.0f} s away")
    return max(0.0, CHARGE_TARGET * v.soc_max - arrival_soc)


def queue_time(ch: Charger, k: float, t_c: float) -> float:
    return max(0.0, ch.available_at - (k + t_c))


def charging_duration(t_c: float, t_q: float, amount: float, speed_kw: float) -> ChargingPlan:
    return ChargingPlan(t_c, t_q, amount, t_c + t_q + amount / speed_kw * 3600.0)


def plan_charging(v: Vehicle, ch: Charger, k: float, net: Network) -> ChargingPlan:
    t_c = net.travel_time(v.location, ch.location)
    amount = recharge_amount(v, t_c)
    return charging_duration(t_c, queue_time(ch, k, t_c), amount, ch.speed_kw)


def passenger_feasible(v: Vehicle, t_p: float, t_o: float) -> bool:
    return v.soc >= v.energy(t_p + t_o)


def charger_feasible(v: Vehicle, t_c: float) -> bool:
    return v.soc >= v.energy(t_c)


def passenger_benefit(v: Vehicle, t_p: float, t_o: float, t_m: float, delta_rho: float,
                      pricing: PricingConfig) -> float:
    """Expected benefit of dispatching ``v`` to a passenger, in $."""
    if not passenger_feasible(v, t_p, t_o):
        raise InfeasibleError(f"vehicle {v.id}: SoC {v.soc:.2f} kWh too low for trip")
    return (pricing.trip_margin * t_o + pricing.vot_matching * t_m - pricing.vot_pickup * t_p
            + delta_rho * v.energy(t_p + t_o))


def charging_benefit(plan: ChargingPlan, r: float, delta_rho: float, pricing: PricingConfig,
                     k: float) -> float:
    """Expected benefit of a charging dispatch with discount ``r``, in $."""
    return (charging_price(pricing, r, k) * plan.amount - pricing.vot_charging * plan.duration
            + delta_rho * plan.amount)


# --- zones and local matching -------------------------------------------------

@dataclass(frozen=True)
class ZoneVehicle:
    id: int
    location: int
    soc: float
    consumption_kw: float = 6.0

    def energy(self, seconds: float) -> float:
        return self.consumption_kw * seconds / 3600.0


@dataclass(frozen=True)
class ZonePassenger:
    id: int
    origin: int
    trip_time: float


@dataclass(frozen=True)
class Zone:
    anchor: int | None
    center: int
    radius: float
    vehicles: tuple[ZoneVehicle, ...]
    passengers: tuple[ZonePassenger, ...]

    def without(self, vehicle_id: int) -> "Zone":
        return replace(self, vehicles=tuple(v for v in self.vehicles if v.id != vehicle_id))

    def with_vehicle(self, v: ZoneVehicle) -> "Zone":
        return replace(self, vehicles=tuple(sorted(self.vehicles + (v,), key=lambda z: z.id)))


def zone_vehicle(v: Vehicle) -> ZoneVehicle:
    return ZoneVehicle(v.id, v.location, v.soc, v.consumption_kw)


def build_zone(net: Network, center: int, radius: float, vehicles: Iterable[ZoneVehicle],
               passengers: Iterable[ZonePassenger], anchor: int | None = None) -> Zone:
    """Vehicles and passengers whose node is within ``radius`` of ``center``."""
    inside = net.nodes_within(center, radius)
    vs = tuple(sorted((v for v in vehicles if v.location in inside or v.id == anchor),
                      key=lambda z: z.id))
    ps = tuple(sorted((p for p in passengers if p.origin in inside), key=lambda z: z.id))
    return Zone(anchor, center, radius, vs, ps)


def local_matching(zone: Zone, net: Network, pickup_limit: float) -> list[tuple[int, int]]:
    """Pickup-time minimizing matching inside a zone; returns (vehicle id, passenger id).

    Maximizes the sum of reciprocal pickup times over pairs whose pickup time
    is within ``pickup_limit`` and whose trip the vehicle's SoC can cover.
    """
    if not zone.vehicles or not zone.passengers:
        return []
    w = [[_local_weight(v, p, net, pickup_limit) for p in zone.passengers] for v in zone.vehicles]
    return [(zone.vehicles[i].id, zone.passengers[j].id) for i, j in max_weight_matching(w)]


def _local_weight(v: ZoneVehicle, p: ZonePassenger, net: Network, pickup_limit: float) -> float:
    t_p = net.travel_time(v.location, p.origin)
    if t_p > pickup_limit or v.soc < v.energy(t_p + p.trip_time):
        return 0.0
    return 1.0 / max(t_p, MIN_PICKUP)


def local_market_profit(zone: Zone, net: Network, pricing: PricingConfig, pickup_limit: float) -> float:
    """Trip profit (f - w) * t_o summed over the zone's local matching."""
    if not zone.vehicles or not zone.passengers:
        return 0.0
    first = zone.passengers[0]
    if all(p.origin == first.origin and p.trip_time == first.trip_time for p in zone.passengers):
        # identical passengers: the matching serves min(eligible, passengers)
        eligible = sum(_local_weight(v, first, net, pickup_limit) > 0 for v in zone.vehicles)
        return min(eligible, len(zone.passengers)) * (pricing.trip_margin * first.trip_time)
    trips = {p.id: p.trip_time for p in zone.passengers}
    return math.fsum(pricing.trip_margin * trips[pid] for _, pid in local_matching(zone, net, pickup_limit))


def marginal_value_of_charge(zone: Zone, net: Network, pricing: PricingConfig,
                             pickup_limit: float) -> float:
    """Leave-one-out profit loss of the zone anchor per kWh of its SoC."""
    anchor = next((v for v in zone.vehicles if v.id == zone.anchor), None)
    if anchor is None:
        raise ValueError("zone anchor is not a zone member")
    if anchor.soc <= 0:
        return 0.0
    matched = local_matching(zone, net, pickup_limit)
    if all(vid != anchor.id for vid, _ in matched):
        return 0.0
    trips = {p.id: p.trip_time for p in zone.passengers}
    base = math.fsum(pricing.trip_margin * trips[pid] for _, pid in matched)
    loss = base - local_market_profit(zone.without(anchor.id), net, pricing, pickup_limit)
    return loss / anchor.soc


def profit_gain(zone: Zone, v: ZoneVehicle, net: Network, pricing: PricingConfig,
                pickup_limit: float) -> float:
    """Add-one-in profit gain of placing ``v`` in ``zone``."""
    base = local_market_profit(zone.without(v.id), net, pricing, pickup_limit)
    return local_market_profit(zone.without(v.id).with_vehicle(v), net, pricing, pickup_limit) - base


def predicted_mvoc_passenger(gain: float, v: Vehicle, t_p: float, t_o: float) -> float:
    remaining = v.soc - v.energy(t_p + t_o)
    if remaining <= 0:
        # arrives empty at the boundary of feasibility; no charge left to value
        return 0.0
    return gain / remaining


def predicted_mvoc_charging(gain: float, v: Vehicle) -> float:
    return gain / (CHARGE_TARGET * v.soc_max)


def delta_mvoc(present: float, predicted: float) -> float:
    return predicted - present


# --- demand forecasting ---------------------------------------------------------

@dataclass
class DemandModel:
    """Piecewise-constant arrival rates per (origin node, time bin).

    ``counts[node][bin]`` requests with total in-vehicle time
    ``trip_sums[node][bin]``, observed over ``days`` days.
    """

    bin_seconds: float = 900.0
    days: float = 1.0
    counts: dict[int, dict[int, int]] = field(default_factory=lambda: defaultdict(dict))
    trip_sums: dict[int, dict[int, float]] = field(default_factory=lambda: defaultdict(dict))

    @classmethod
    def fit(cls, requests: Iterable[tuple[int, float, float]], bin_seconds: float = 900.0,
            days: float = 1.0) -> "DemandModel":
        """``requests`` yields (origin node, request time, in-vehicle time)."""
        m = cls(bin_seconds=bin_seconds, days=days)
        for origin, t, trip in requests:
            b = m.bin(t)
            m.counts[origin][b] = m.counts[origin].get(b, 0) + 1
            m.trip_sums[origin][b] = m.trip_sums[origin].get(b, 0.0) + trip
        return m

    def bin(self, t: float) -> int:
        return int((t % DAY) // self.bin_seconds)

    def rate(self, nodes: Iterable[int], t: float) -> float:
        """Arrivals per second originating in ``nodes`` at time ``t``."""
        b = self.bin(t)
        n = sum(self.counts.get(node, {}).get(b, 0) for node in nodes)
        return n / (self.bin_seconds * self.days)

    def mean_trip_time(self, nodes: Iterable[int], t: float) -> float:
        b = self.bin(t)
        n = s = 0.0
        for node in nodes:
            n += self.counts.get(node, {}).get(b, 0)
            s += self.trip_sums.get(node, {}).get(b, 0.0)
        return s / n if n else 0.0

    def expected_waiting(self, nodes: Sequence[int], t: float, window: float) -> int:
        """Expected number of requests waiting at ``t``: rate x window, rounded half up."""
        return int(math.floor(self.rate(nodes, t) * window + 0.5))


def synthetic_passengers(center: int, count: int, trip_time: float) -> tuple[ZonePassenger, ...]:
    return tuple(ZonePassenger(-(i + 1), center, trip_time) for i in range(count))


def projected_supply(snapshot: MarketSnapshot, k_prime: float,
                     exclude: int | None = None) -> list[ZoneVehicle]:
    """Vehicles expected vacant at ``k_prime``.

    Vacant vehicles stay where they are; busy vehicles appear at the end of
    their committed itinerary once it completes strictly before ``k_prime``.
    """
    out = [zone_vehicle(v) for v in snapshot.vehicles if v.id != exclude]
    for it in snapshot.itineraries:
        if it.free_at < k_prime and it.vehicle_id != exclude:
            out.append(ZoneVehicle(it.vehicle_id, it.node, it.soc))
    return out


def predict_zone_state(snapshot: MarketSnapshot, center: int, k_prime: float, demand: DemandModel,
                       net: Network, radius: float, window: float,
                       exclude: int | None = None) -> Zone:
    if k_prime < snapshot.clock:
        raise ValueError("prediction time precedes the snapshot")
    inside = net.nodes_within(center, radius)
    n = demand.expected_waiting(sorted(inside), k_prime, window)
    pax = synthetic_passengers(center, n, demand.mean_trip_time(inside, k_prime))
    return build_zone(net, center, radius, projected_supply(snapshot, k_prime, exclude), pax)


class ZoneForecaster:
    """Per-interval cache of present and predicted marginal values of charge."""

    def __init__(self, snapshot: MarketSnapshot, net: Network, pricing: PricingConfig,
                 demand: DemandModel, radius: float, pickup_limit: float, window: float):
        self.snapshot = snapshot
        self.net = net
        self.pricing = pricing
        self.demand = demand
        self.radius = radius
        self.pickup_limit = pickup_limit
        self.window = window
        self._present: dict[int, float] = {}
        self._centers: dict[int, tuple[list[ZoneVehicle], list[float], list[ZoneVehicle]]] = {}
        self._zone_demand: dict[tuple[int, int], tuple[int, float]] = {}
        self._vacant = [zone_vehicle(v) for v in snapshot.vehicles]
        self._waiting = [ZonePassenger(p.id, p.origin, p.trip_time) for p in snapshot.passengers]

    def present(self, v: Vehicle) -> float:
        hit = self._present.get(v.id)
        if hit is None:
            zone = build_zone(self.net, v.location, self.radius, self._vacant, self._waiting, anchor=v.id)
            hit = marginal_value_of_charge(zone, self.net, self.pricing, self.pickup_limit)
            self._present[v.id] = hit
        return hit

    def _members(self, center: int):
        hit = self._centers.get(center)
        if hit is None:
            inside = self.net.nodes_within(center, self.radius)
            vacant = [z for z in self._vacant if z.location in inside]
            busy = sorted((it for it in self.snapshot.itineraries if it.node in inside),
                          key=lambda it: (it.free_at, it.vehicle_id))
            hit = (vacant, [it.free_at for it in busy],
                   [ZoneVehicle(it.vehicle_id, it.node, it.soc) for it in busy])
            self._centers[center] = hit
        return hit

    def _demand(self, center: int, k_prime: float) -> tuple[int, float]:
        key = (center, self.demand.bin(k_prime))
        hit = self._zone_demand.get(key)
        if hit is None:
            inside = sorted(self.net.nodes_within(center, self.radius))
            hit = (self.demand.expected_waiting(inside, k_prime, self.window),
                   self.demand.mean_trip_time(inside, k_prime))
            self._zone_demand[key] = hit
        return hit

    def gain(self, center: int, k_prime: float, added: ZoneVehicle) -> float:
        """Add-one-in gain of ``added`` arriving at ``center`` by ``k_prime``."""
        count, trip = self._demand(center, k_prime)
        if count == 0:
            return 0.0
        vacant, times, busy = self._members(center)
        supply = [z for z in vacant if z.id != added.id]
        supply += [z for z in busy[:bisect.bisect_left(times, k_prime)] if z.id != added.id]
        zone = Zone(None, center, self.radius, tuple(supply), synthetic_passengers(center, count, trip))
        return profit_gain(zone, added, self.net, self.pricing, self.pickup_limit)
