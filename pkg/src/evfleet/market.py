"""Market entities, pricing configuration and charging-price arithmetic.

Monetary rates are stored per second (fare, wage, values of time) or per
kWh (charging components). Time instances are float seconds after midnight
of the first simulated day; the tariff schedule wraps every 24 h.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

DAY = 86400.0


class MarketError(ValueError):
    pass


class Status(str, enum.Enum):
    VACANT = "vacant"
    PICKUP = "pickup"
    OCCUPIED = "occupied"
    TO_CHARGER = "to_charger"
    QUEUING = "queuing"
    CHARGING = "charging"
    EXITED = "exited"


# Driver decision graph. queuing -> charging is implied by the queue.
TRANSITIONS: dict[Status, frozenset[Status]] = {
    Status.VACANT: frozenset({Status.PICKUP, Status.TO_CHARGER, Status.VACANT, Status.EXITED}),
    Status.PICKUP: frozenset({Status.OCCUPIED}),
    Status.OCCUPIED: frozenset({Status.VACANT}),
    Status.TO_CHARGER: frozenset({Status.QUEUING, Status.CHARGING}),
    Status.QUEUING: frozenset({Status.CHARGING}),
    Status.CHARGING: frozenset({Status.VACANT, Status.EXITED}),
    Status.EXITED: frozenset(),
}


class PassengerState(str, enum.Enum):
    WAITING = "waiting"
    MATCHED = "matched"
    RIDING = "riding"
    SERVED = "served"
    CANCELLED_I = "cancelled_I"
    CANCELLED_II = "cancelled_II"


@dataclass(frozen=True)
class DriverAttributes:
    """Behavioural attributes: compliance (g1..g3) and exit (g4 [h], g5, g6)."""

    g1: float
    g2: float
    g3: float
    g4: float
    g5: float
    g6: float
    shift_start: float = 0.0


@dataclass
class Vehicle:
    id: int
    location: int
    soc: float
    soc_max: float = 54.0
    consumption_kw: float = 6.0
    attrs: DriverAttributes | None = None
    status: Status = Status.VACANT
    entered_at: float = 0.0
    last_exit_decision: float = -math.inf
    initial_soc: float = 0.0
    occupied_s: float = 0.0
    charging_fees: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.soc <= self.soc_max:
            raise MarketError(f"vehicle {self.id}: soc {self.soc} outside [0, {self.soc_max}]")

    def set_status(self, new: Status) -> None:
        if new not in TRANSITIONS[self.status]:
            raise MarketError(f"vehicle {self.id}: illegal transition {self.status.value} -> {new.value}")
        self.status = new

    def energy(self, seconds: float) -> float:
        """kWh consumed driving for ``seconds``."""
        return self.consumption_kw * seconds / 3600.0

    def work_hours(self, now: float) -> float:
        return max(0.0, now - self.entered_at) / 3600.0


@dataclass
class PassengerRequest:
    id: int
    origin: int
    destination: int
    request_time: float
    trip_time: float
    matching_patience: float
    pickup_patience: float
    state: PassengerState = PassengerState.WAITING
    matched_at: float | None = None
    pickup_time: float | None = None

    def waiting_time(self, now: float) -> float:
        return now - self.request_time


@dataclass
class Charger:
    """A single charging pile; ``available_at`` is the reservation-aware free time."""

    id: int
    location: int
    speed_kw: float = 120.0
    available_at: float = 0.0
    station: int = 0


@dataclass(frozen=True)
class TariffWindow:
    start: float
    end: float
    price: float


@dataclass(frozen=True)
class PricingConfig:
    fare: float = 42.0 / 3600
    wage: float = 30.0 / 3600
    e1: float = 0.10
    e2: float = 0.05
    tou: tuple[TariffWindow, ...] = (
        TariffWindow(0.0, 8 * 3600.0, 0.018),
        TariffWindow(8 * 3600.0, DAY, 0.255),
    )
    vot_matching: float = 0.010
    vot_pickup: float = 0.005
    vot_charging: float = 0.002

    def __post_init__(self):
        if not self.fare > self.wage:
            raise MarketError("fare rate must exceed wage rate")
        if not self.vot_matching > self.vot_pickup > self.vot_charging:
            raise MarketError("values of time must satisfy matching > pickup > charging")
        windows = sorted(self.tou, key=lambda w: w.start)
        t = 0.0
        for w in windows:
            if w.start != t or w.end <= w.start:
                raise MarketError("time-of-use schedule must tile [0, 24h) without gaps or overlaps")
            t = w.end
        if t != DAY:
            raise MarketError("time-of-use schedule must cover 24 hours")
        object.__setattr__(self, "tou", tuple(windows))

    @property
    def trip_margin(self) -> float:
        """(f - w) in $/s."""
        return self.fare - self.wage


def constant_tariff(price: float) -> tuple[TariffWindow, ...]:
    return (TariffWindow(0.0, DAY, price),)


def tou_tariff(pricing: PricingConfig, k: float) -> float:
    t = k % DAY
    for w in pricing.tou:
        if w.start <= t < w.end:
            return w.price
    raise AssertionError("unreachable: schedule covers the day")


def is_peak(pricing: PricingConfig, k: float) -> bool:
    """True when the tariff at ``k`` is the highest price of the schedule."""
    return tou_tariff(pricing, k) == max(w.price for w in pricing.tou) and len(
        {w.price for w in pricing.tou}) > 1


def full_charging_price(pricing: PricingConfig, k: float) -> float:
    """Undiscounted price per kWh a driver pays: e1 + e2 + e3(k)."""
    return pricing.e1 + pricing.e2 + tou_tariff(pricing, k)


def charging_price(pricing: PricingConfig, r: float, k: float) -> float:
    """TNC unit charging profit e1 - r * (e1 + e2 + e3(k)) in $/kWh."""
    if not 0.0 <= r <= 1.0:
        raise MarketError(f"discount {r} outside [0, 1]")
    return pricing.e1 - r * full_charging_price(pricing, k)


@dataclass(frozen=True)
class Itinerary:
    """Where and when a busy vehicle next becomes vacant."""

    vehicle_id: int
    free_at: float
    node: int
    soc: float


@dataclass(frozen=True)
class MarketSnapshot:
    clock: float
    vehicles: tuple[Vehicle, ...]
    passengers: tuple[PassengerRequest, ...]
    chargers: tuple[Charger, ...]
    avg_incentive: float = 0.0
    itineraries: tuple[Itinerary, ...] = field(default=())
