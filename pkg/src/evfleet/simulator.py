"""Deterministic discrete-event simulation of the e-hailing market.

Events are ordered by (time, kind rank, subject id). At equal timestamps
supply and demand arrive first, then the matching tick, then Type I
deadlines (so a passenger whose patience expires exactly at a tick is still
matched), then trip and charging completions, then exit decisions.
"""

from __future__ import annotations

import enum
import heapq
import logging
import math
from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from . import behavior
from .config import ScenarioConfig
from .demand import TripRequest, generate_demand, read_chargers, read_demand, read_od_weights
from .market import (Charger, Itinerary, MarketSnapshot, PassengerRequest, PassengerState, Status,
                     Vehicle, charging_price, full_charging_price, is_peak)
from .network import Network, generate_grid, load_network
from .optimizer import (CHARGER, PASSENGER, BenefitMatrix, PairEvaluation, benchmark_assignment,
                        build_benefit_matrix, evaluate_pairs, reactive_charging_orders, solve_assignment,
                        validate_assignment)
from .report import SERIES_BIN_S, RunReport, SeriesRow
from .valuation import CHARGE_TARGET, DemandModel, ZoneForecaster

log = logging.getLogger(__name__)

# entity kinds for random streams
_PASSENGER_STREAM, _DRIVER_STREAM, _STATION_STREAM = 1, 2, 3


class Kind(enum.IntEnum):
    DRIVER_ENTRY = 0
    PASSENGER_ARRIVAL = 1
    MATCHING_TICK = 2
    TYPE1_DEADLINE = 3
    PICKUP_COMPLETE = 4
    DROPOFF_COMPLETE = 5
    CHARGING_COMPLETE = 6  # frees its pile before a reserved successor takes it
    CHARGER_ARRIVAL = 7
    CHARGING_START = 8
    EXIT_DECISION = 9


class InvariantError(AssertionError):
    pass


@dataclass
class Session:
    vehicle_id: int
    charger_id: int
    matched_at: float
    discount: float
    amount: float
    travel: float
    arrival: float
    start: float
    end: float
    completed: bool = False


@dataclass
class Trip:
    vehicle_id: int
    passenger_id: int
    matched_at: float
    pickup: float
    trip_time: float


@dataclass
class Scenario:
    """Materialized inputs of a run."""

    config: ScenarioConfig
    network: Network
    requests: list[TripRequest]
    chargers: list[Charger]


def build_scenario(cfg: ScenarioConfig) -> Scenario:
    cfg.validate()
    if cfg.network.grid is not None:
        net = generate_grid(*cfg.network.grid)
    else:
        net = load_network(cfg.network.file)
    if cfg.network.precompute_all_pairs:
        net.precompute_all_pairs()
    if cfg.demand.file is not None:
        requests = read_demand(cfg.demand.file)
    else:
        od = read_od_weights(cfg.demand.od_file) if cfg.demand.od_file else None
        requests = generate_demand(net, cfg.demand.hourly_rates, cfg.horizon_s, cfg.demand.seed, od,
                                   start_s=cfg.start_s)
    for r in requests:
        net.index(r.origin), net.index(r.dest)
    return Scenario(cfg, net, requests, place_chargers(cfg, net))


def place_chargers(cfg: ScenarioConfig, net: Network) -> list[Charger]:
    setup = cfg.chargers
    if setup.file is not None:
        rows = read_chargers(setup.file)
        for _, node, _ in rows:
            net.index(node)
        return [Charger(cid, node, speed, station=node) for cid, node, speed in sorted(rows)]
    rng = behavior.entity_rng(cfg.seed, _STATION_STREAM, 0)
    nodes = rng.choice(np.asarray(net.node_ids), size=setup.stations,
                       replace=setup.stations > len(net))
    return [Charger(s * setup.piles_per_station + p, int(node), setup.speed_kw, station=s)
            for s, node in enumerate(nodes) for p in range(setup.piles_per_station)]


class Simulation:
    """One seeded run. ``audit`` checks state invariants after every event."""

    def __init__(self, scenario: Scenario, seed: int | None = None, audit: bool = False):
        self.cfg = cfg = scenario.config
        self.net = scenario.network
        self.seed = cfg.seed if seed is None else seed
        self.audit = audit
        self.pricing = cfg.pricing
        self.start = cfg.start_s
        self.horizon = cfg.start_s + cfg.horizon_s  # absolute end of the window
        self.clock = self.start
        self._heap: list = []
        self._seq = 0
        self.chargers = {c.id: replace(c, available_at=0.0) for c in scenario.chargers}
        self.pile_occupant: dict[int, int | None] = {c: None for c in self.chargers}
        self.vehicles: dict[int, Vehicle] = {}
        self.exited: list[Vehicle] = []
        self.exit_time: dict[int, float] = {}
        self._drivers: dict[int, tuple[float, int, float, behavior.DriverAttributes]] = {}
        self._rng: dict[tuple[int, int], np.random.Generator] = {}
        self.passengers: dict[int, PassengerRequest] = {}
        self.waiting: dict[int, PassengerRequest] = {}
        self.itineraries: dict[int, Itinerary] = {}
        self._active_trip: dict[int, Trip] = {}
        self._active_session: dict[int, Session] = {}
        self.offers: deque[tuple[float, float]] = deque()
        self.trips: list[Trip] = []
        self.sessions: list[Session] = []
        self.served_trips: list[Trip] = []
        self.cancellations: list[tuple[float, int]] = []  # (time, 1 or 2)
        self.dispatch_log: list[tuple[float, int, float, bool]] = []  # (k, vehicle, soc, complied)
        self.first_low_soc: float | None = None
        self.charge_end_socs: list[float] = []
        self.ticks = 0

        self.demand_model = DemandModel.fit(
            (r.origin, r.time, self.net.travel_time(r.origin, r.dest)) for r in scenario.requests)
        self._init_passengers(scenario.requests)
        self._init_drivers()
        self._push(self.start, Kind.MATCHING_TICK, 0)

    # -- setup --------------------------------------------------------------------

    def rng(self, kind: int, entity: int) -> np.random.Generator:
        key = (kind, entity)
        g = self._rng.get(key)
        if g is None:
            g = self._rng[key] = behavior.entity_rng(self.seed, kind, entity)
        return g

    def _init_passengers(self, requests: list[TripRequest]) -> None:
        beh = self.cfg.behavior
        # ids follow (time, origin, dest) order, independent of file row order
        requests = [r for r in sorted(requests) if self.start <= r.time <= self.horizon]
        for pid, r in enumerate(requests):
            g = self.rng(_PASSENGER_STREAM, pid)
            p = PassengerRequest(pid, r.origin, r.dest, r.time, self.net.travel_time(r.origin, r.dest),
                                 behavior.sample_truncated_normal(g, beh.matching_patience),
                                 behavior.sample_truncated_normal(g, beh.pickup_patience))
            self.passengers[pid] = p
            self._push(r.time, Kind.PASSENGER_ARRIVAL, pid)

    def _init_drivers(self) -> None:
        f = self.cfg.fleet
        nodes = self.net.node_ids
        lo, hi = f.initial_soc_fraction
        for d in range(f.total_drivers):
            g = self.rng(_DRIVER_STREAM, d)
            start = self.start if d < f.initial_fleet else behavior.sample_shift_start(g, f.shift_start_weights)
            node = nodes[int(g.integers(len(nodes)))]
            soc = f.soc_max * g.uniform(lo, hi)
            attrs = behavior.sample_driver_attributes(g, self.cfg.behavior.gamma, start)
            self._drivers[d] = (start, node, soc, attrs)
            if self.start <= start <= self.horizon:
                self._push(start, Kind.DRIVER_ENTRY, d)

    # -- event queue ----------------------------------------------------------------

    def _push(self, t: float, kind: Kind, subject: int, payload=None) -> None:
        heapq.heappush(self._heap, (t, int(kind), subject, self._seq, payload))
        self._seq += 1

    def run(self) -> RunReport:
        handlers = {
            Kind.DRIVER_ENTRY: self._on_entry,
            Kind.PASSENGER_ARRIVAL: self._on_arrival,
            Kind.MATCHING_TICK: self._on_tick,
            Kind.TYPE1_DEADLINE: self._on_deadline,
            Kind.PICKUP_COMPLETE: self._on_pickup,
            Kind.DROPOFF_COMPLETE: self._on_dropoff,
            Kind.CHARGER_ARRIVAL: self._on_charger_arrival,
            Kind.CHARGING_START: self._on_charging_start,
            Kind.CHARGING_COMPLETE: self._on_charging_complete,
            Kind.EXIT_DECISION: self._on_exit_decision,
        }
        while self._heap and self._heap[0][0] <= self.horizon:
            t, kind, subject, _, payload = heapq.heappop(self._heap)
            self.clock = t
            handlers[Kind(kind)](subject, payload)
            if self.audit:
                self._check()
        self.clock = self.horizon
        return self.report()

    # -- handlers -------------------------------------------------------------------

    def _on_entry(self, d: int, _) -> None:
        start, node, soc, attrs = self._drivers[d]
        f = self.cfg.fleet
        self.vehicles[d] = Vehicle(d, node, soc, f.soc_max, f.consumption_kw, attrs,
                                   entered_at=self.clock, initial_soc=soc)
        self._note_soc(self.vehicles[d])

    def _on_arrival(self, pid: int, _) -> None:
        p = self.passengers[pid]
        self.waiting[pid] = p
        self._push(behavior.type1_cancel_deadline(p), Kind.TYPE1_DEADLINE, pid)

    def _on_deadline(self, pid: int, _) -> None:
        p = self.passengers[pid]
        if p.state is PassengerState.WAITING:
            p.state = PassengerState.CANCELLED_I
            del self.waiting[pid]
            self.cancellations.append((self.clock, 1))

    def _on_tick(self, _, __) -> None:
        k = self.clock
        self.ticks += 1
        vacant = sorted((v for v in self.vehicles.values() if v.status is Status.VACANT), key=lambda v: v.id)
        snap = self.snapshot(vacant)
        if self.cfg.strategy == "proposed":
            matrix, assignment = self._plan_proposed(snap)
        else:
            matrix, assignment = self._plan_benchmark(snap)
        validate_assignment(assignment, matrix)
        matched = set()
        undecided = []
        for vid, target in assignment:
            ev = matrix.evaluations[(vid, target)]
            v = self.vehicles[vid]
            matched.add(vid)
            if target[0] == PASSENGER:
                self._dispatch_trip(v, self.passengers[target[1]], ev.pickup)
            elif not self._dispatch_charging(v, self.chargers[target[1]], ev):
                undecided.append(v)
        undecided += [v for v in vacant if v.id not in matched]
        for v in sorted(undecided, key=lambda v: v.id):
            self._push(k, Kind.EXIT_DECISION, v.id)
        nxt = k + self.cfg.matching_interval_s
        if nxt <= self.horizon:
            self._push(nxt, Kind.MATCHING_TICK, 0)

    def snapshot(self, vacant: list[Vehicle]) -> MarketSnapshot:
        return MarketSnapshot(
            clock=self.clock,
            vehicles=tuple(replace(v) for v in vacant),
            passengers=tuple(replace(p) for p in sorted(self.waiting.values(), key=lambda p: p.id)),
            chargers=tuple(replace(c) for c in sorted(self.chargers.values(), key=lambda c: c.id)),
            avg_incentive=self.avg_incentive(),
            itineraries=tuple(self.itineraries[i] for i in sorted(self.itineraries)))

    def _plan_proposed(self, snap: MarketSnapshot):
        beh = self.cfg.behavior
        forecaster = ZoneForecaster(snap, self.net, self.pricing, self.demand_model,
                                    self.cfg.zone_radius_s, beh.pickup_patience.mean,
                                    beh.matching_patience.mean)
        matrix = build_benefit_matrix(evaluate_pairs(snap, self.net, self.pricing, forecaster))
        return matrix, solve_assignment(matrix)

    def _plan_benchmark(self, snap: MarketSnapshot):
        full = self.cfg.strategy == "benchmark_free_charging"
        orders = reactive_charging_orders(snap, self.net, full, self.cfg.reactive_threshold)
        evs = [PairEvaluation(o.vehicle_id, (CHARGER, o.charger_id), True, discount=o.discount,
                              compliance=o.compliance, plan=o.plan) for o in orders]
        trips = benchmark_assignment(snap, self.net, exclude=[o.vehicle_id for o in orders])
        for vid, target in trips:
            v = self.vehicles[vid]
            t_p = self.net.travel_time(v.location, self.passengers[target[1]].origin)
            evs.append(PairEvaluation(vid, target, True, pickup=t_p))
        matrix = BenefitMatrix([], [], np.zeros((0, 0)), {(e.vehicle_id, e.target): e for e in evs})
        return matrix, sorted(matrix.evaluations)

    def _dispatch_trip(self, v: Vehicle, p: PassengerRequest, t_p: float) -> None:
        k = self.clock
        del self.waiting[p.id]
        if not behavior.type2_accepts(p, t_p):
            p.state = PassengerState.CANCELLED_II
            self.cancellations.append((k, 2))
            return
        p.state = PassengerState.MATCHED
        p.matched_at, p.pickup_time = k, t_p
        v.set_status(Status.PICKUP)
        trip = Trip(v.id, p.id, k, t_p, p.trip_time)
        self.trips.append(trip)
        self._active_trip[v.id] = trip
        self.itineraries[v.id] = Itinerary(v.id, k + t_p + p.trip_time, p.destination,
                                           max(0.0, v.soc - v.energy(t_p + p.trip_time)))
        self._push(k + t_p, Kind.PICKUP_COMPLETE, v.id)

    def _dispatch_charging(self, v: Vehicle, ch: Charger, ev: PairEvaluation) -> bool:
        """Offer a charging trip; returns whether the driver complied."""
        k = self.clock
        self.offers.append((k, ev.discount))
        complied = bool(self.rng(_DRIVER_STREAM, v.id).random() < ev.compliance)
        self.dispatch_log.append((k, v.id, v.soc, complied))
        if not complied:
            return False
        plan = ev.plan
        arrival = k + plan.travel
        start = max(ch.available_at, arrival)
        end = start + plan.amount / ch.speed_kw * 3600.0
        ch.available_at = end
        s = Session(v.id, ch.id, k, ev.discount, plan.amount, plan.travel, arrival, start, end)
        self.sessions.append(s)
        self._active_session[v.id] = s
        v.set_status(Status.TO_CHARGER)
        self.itineraries[v.id] = Itinerary(v.id, end, ch.location, CHARGE_TARGET * v.soc_max)
        self._push(arrival, Kind.CHARGER_ARRIVAL, v.id)
        return True

    def _on_pickup(self, vid: int, _) -> None:
        v = self.vehicles[vid]
        trip = self._active_trip[vid]
        p = self.passengers[trip.passenger_id]
        v.soc = max(0.0, v.soc - v.energy(trip.pickup))
        v.location = p.origin
        v.set_status(Status.OCCUPIED)
        p.state = PassengerState.RIDING
        self._note_soc(v)
        self._push(self.clock + trip.trip_time, Kind.DROPOFF_COMPLETE, vid)

    def _on_dropoff(self, vid: int, _) -> None:
        v = self.vehicles[vid]
        trip = self._active_trip.pop(vid)
        p = self.passengers[trip.passenger_id]
        v.soc = max(0.0, v.soc - v.energy(trip.trip_time))
        v.location = p.destination
        v.occupied_s += trip.trip_time
        v.set_status(Status.VACANT)
        p.state = PassengerState.SERVED
        self.served_trips.append(trip)
        del self.itineraries[vid]
        self._note_soc(v)

    def _on_charger_arrival(self, vid: int, _) -> None:
        v = self.vehicles[vid]
        s = self._active_session[vid]
        ch = self.chargers[s.charger_id]
        v.soc = max(0.0, v.soc - v.energy(s.travel))
        v.location = ch.location
        self._note_soc(v)
        if s.start <= self.clock:
            v.set_status(Status.CHARGING)
            self._occupy(ch.id, vid)
            self._push(s.end, Kind.CHARGING_COMPLETE, vid)
        else:
            v.set_status(Status.QUEUING)
            self._push(s.start, Kind.CHARGING_START, vid)

    def _on_charging_start(self, vid: int, _) -> None:
        s = self._active_session[vid]
        self.vehicles[vid].set_status(Status.CHARGING)
        self._occupy(s.charger_id, vid)
        self._push(s.end, Kind.CHARGING_COMPLETE, vid)

    def _occupy(self, pile: int, vid: int) -> None:
        if self.pile_occupant[pile] is not None:
            raise InvariantError(f"pile {pile} already hosts vehicle {self.pile_occupant[pile]}")
        self.pile_occupant[pile] = vid

    def _on_charging_complete(self, vid: int, _) -> None:
        v = self.vehicles[vid]
        s = self._active_session.pop(vid)
        v.soc = CHARGE_TARGET * v.soc_max
        self.charge_end_socs.append(v.soc)
        v.charging_fees += (1.0 - s.discount) * full_charging_price(self.pricing, s.matched_at) * s.amount
        s.completed = True
        self.pile_occupant[s.charger_id] = None
        del self.itineraries[vid]
        v.set_status(Status.VACANT)

    def _on_exit_decision(self, vid: int, _) -> None:
        v = self.vehicles.get(vid)
        if v is None or v.status is not Status.VACANT:
            return
        if self.clock - v.last_exit_decision < self.cfg.behavior.exit_decision_interval_s:
            return
        v.last_exit_decision = self.clock
        p = behavior.exit_probability(v.attrs, v.work_hours(self.clock), v.soc, self.avg_incentive())
        if self.rng(_DRIVER_STREAM, vid).random() < p:
            v.set_status(Status.EXITED)
            self.exit_time[vid] = self.clock
            self.exited.append(self.vehicles.pop(vid))

    # -- bookkeeping ------------------------------------------------------------------

    def avg_incentive(self) -> float:
        """Mean discount offered over the trailing window (0 without offers)."""
        lo = self.clock - self.cfg.behavior.incentive_window_s
        while self.offers and self.offers[0][0] < lo:
            self.offers.popleft()
        if not self.offers:
            return 0.0
        return math.fsum(r for _, r in self.offers) / len(self.offers)

    def _note_soc(self, v: Vehicle) -> None:
        if self.first_low_soc is None and v.soc < self.cfg.reactive_threshold * v.soc_max:
            self.first_low_soc = self.clock

    def _check(self) -> None:
        for v in self.vehicles.values():
            if not 0.0 <= v.soc <= v.soc_max:
                raise InvariantError(f"vehicle {v.id} SoC {v.soc} out of range at {self.clock}")
        busy = [p for p in self.pile_occupant.values() if p is not None]
        if len(busy) != len(set(busy)):
            raise InvariantError("a vehicle occupies two piles")
        for pid, occ in self.pile_occupant.items():
            if occ is not None and self.vehicles[occ].status is not Status.CHARGING:
                raise InvariantError(f"pile {pid} occupant {occ} is not charging")

    # -- report -----------------------------------------------------------------------

    def report(self) -> RunReport:
        cfg = self.cfg
        pr = self.pricing
        all_v = list(self.vehicles.values()) + self.exited
        rep = RunReport(strategy=cfg.strategy, seed=self.seed, horizon_s=cfg.horizon_s, start_s=self.start)
        rep.drivers_entered = len(all_v)
        rep.drivers_exited = len(self.exited)
        if all_v:
            n = len(all_v)
            rep.mean_driver_income = math.fsum(pr.wage * v.occupied_s - v.charging_fees for v in all_v) / n
            rep.mean_shift_length_h = math.fsum(
                (self.exit_time.get(v.id, self.horizon) - v.entered_at) / 3600.0 for v in all_v) / n
            rep.mean_initial_soc_kwh = math.fsum(v.initial_soc for v in all_v) / n
            rep.mean_final_soc_kwh = math.fsum(v.soc for v in all_v) / n

        arrived = list(self.passengers.values())
        states = [p.state for p in arrived]
        rep.total_requests = len(arrived)
        rep.served = states.count(PassengerState.SERVED)
        rep.served_pct = 100.0 * rep.served / rep.total_requests if arrived else 0.0
        rep.cancelled_type1 = states.count(PassengerState.CANCELLED_I)
        rep.cancelled_type2 = states.count(PassengerState.CANCELLED_II)
        rep.in_system = rep.total_requests - rep.served - rep.cancelled_type1 - rep.cancelled_type2
        if self.trips:
            rep.mean_matching_time_s = math.fsum(
                t.matched_at - self.passengers[t.passenger_id].request_time for t in self.trips) / len(self.trips)
            rep.mean_pickup_time_s = math.fsum(t.pickup for t in self.trips) / len(self.trips)

        rep.charging_dispatches = len(self.dispatch_log)
        rep.charging_refusals = sum(1 for *_, ok in self.dispatch_log if not ok)
        peak, off = [], []
        for s in self.sessions:
            if s.completed:
                (peak if is_peak(pr, s.matched_at) else off).append(
                    charging_price(pr, s.discount, s.matched_at) * s.amount)
        rep.chargings_peak, rep.chargings_offpeak = len(peak), len(off)
        rep.chargings = len(peak) + len(off)
        rep.charging_profit_peak = math.fsum(peak)
        rep.charging_profit_offpeak = math.fsum(off)
        rep.charging_profit = math.fsum(peak + off)
        rep.trip_profit = math.fsum(pr.trip_margin * t.trip_time for t in self.served_trips)
        rep.monetary_profit = rep.trip_profit + rep.charging_profit
        rep.series = self._series()
        return rep

    def _series(self) -> list[SeriesRow]:
        n = int(math.ceil((self.horizon - self.start) / SERIES_BIN_S))
        c1, c2 = [0] * n, [0] * n
        for t, kind in self.cancellations:
            b = min(int((t - self.start) // SERIES_BIN_S), n - 1)
            (c1 if kind == 1 else c2)[b] += 1
        rows = []
        for b in range(n):
            t = self.start + b * SERIES_BIN_S
            # queuing vehicles count as charging vehicles
            busy = sum(1 for s in self.sessions if s.arrival <= t < s.end)
            rows.append(SeriesRow(t, c1[b], c2[b], busy))
        return rows


def run(cfg: ScenarioConfig, seed: int | None = None, audit: bool = False) -> RunReport:
    """Simulate ``cfg`` (optionally overriding its seed) and return the report."""
    if seed is not None:
        cfg = cfg.replace(seed=seed)
    return Simulation(build_scenario(cfg), audit=audit).run()
