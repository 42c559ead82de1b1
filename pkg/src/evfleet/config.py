"""Scenario configuration: TOML schema, defaults and validation.

Schema (all keys optional unless noted; paths are relative to the file)::

    seed = 1
    strategy = "proposed"        # or benchmark_no_incentive, benchmark_free_charging
    horizon_s = 86400
    start_s = 0                  # time of day (s after midnight) the window opens
    matching_interval_s = 10
    zone_radius_s = 300
    reactive_threshold = 0.1

    [network]                    # required: file or grid
    file = "manhattan.net"
    grid = { rows = 10, cols = 10, edge_time_s = 60 }
    precompute_all_pairs = false

    [demand]                     # required: file or synthetic
    file = "demand.csv"
    synthetic = { hourly_rates = [...24 requests/hour...], seed = 7 }

    [chargers]
    file = "chargers.csv"        # charger_id,node,speed_kW; else random stations
    stations = 30
    piles_per_station = 6
    speed_kw = 120

    [fleet]
    total_drivers = 28000
    initial_fleet = 2000
    soc_max_kwh = 54
    consumption_kw = 6
    initial_soc_fraction = [0.2, 1.0]
    shift_start_weights = [...24 weights...]   # or shift_start_file = "shifts.txt"

    [pricing]
    fare_per_hour = 42
    wage_per_hour = 30
    e1 = 0.10
    e2 = 0.05
    tou = [ { start_h = 0, end_h = 8, price = 0.018 }, { start_h = 8, end_h = 24, price = 0.255 } ]
    vot_matching = 0.010
    vot_pickup = 0.005
    vot_charging = 0.002

    [behavior]
    matching_patience = { min = 30, mean = 60, max = 90, sd = 6 }
    pickup_patience = { min = 300, mean = 450, max = 600, sd = 60 }
    g1 = { min = 1.5, mean = 1.8, max = 2.1, sd = 0.1 }      # likewise g2 .. g6
    exit_decision_interval_s = 60
    incentive_window_s = 3600
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .behavior import GAMMA, MATCHING_PATIENCE, PICKUP_PATIENCE, TruncatedNormalSpec
from .market import DAY, MarketError, PricingConfig, TariffWindow

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

STRATEGIES = ("proposed", "benchmark_no_incentive", "benchmark_free_charging")


class ConfigError(ValueError):
    pass


@dataclass
class NetworkSource:
    file: Path | None = None
    grid: tuple[int, int, float] | None = None
    precompute_all_pairs: bool = False


@dataclass
class DemandSource:
    file: Path | None = None
    hourly_rates: tuple[float, ...] | None = None
    seed: int = 0
    od_file: Path | None = None


@dataclass
class ChargerSetup:
    file: Path | None = None
    stations: int = 30
    piles_per_station: int = 6
    speed_kw: float = 120.0


@dataclass
class FleetConfig:
    total_drivers: int = 28000
    initial_fleet: int = 2000
    soc_max: float = 54.0
    consumption_kw: float = 6.0
    initial_soc_fraction: tuple[float, float] = (0.2, 1.0)
    shift_start_weights: tuple[float, ...] = (1.0,) * 24


@dataclass
class BehaviorConfig:
    matching_patience: TruncatedNormalSpec = MATCHING_PATIENCE
    pickup_patience: TruncatedNormalSpec = PICKUP_PATIENCE
    gamma: dict[str, TruncatedNormalSpec] = field(default_factory=lambda: dict(GAMMA))
    exit_decision_interval_s: float = 60.0
    incentive_window_s: float = 3600.0


@dataclass
class ScenarioConfig:
    network: NetworkSource
    demand: DemandSource
    fleet: FleetConfig = field(default_factory=FleetConfig)
    chargers: ChargerSetup = field(default_factory=ChargerSetup)
    pricing: PricingConfig = field(default_factory=PricingConfig)
    behavior: BehaviorConfig = field(default_factory=BehaviorConfig)
    strategy: str = "proposed"
    matching_interval_s: float = 10.0
    zone_radius_s: float = 300.0
    horizon_s: float = DAY
    start_s: float = 0.0
    reactive_threshold: float = 0.1
    seed: int = 0

    def validate(self) -> "ScenarioConfig":
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}; choose from {', '.join(STRATEGIES)}")
        if not self.matching_interval_s > 0:
            raise ConfigError("matching_interval_s must be positive")
        if not self.horizon_s > 0:
            raise ConfigError("horizon_s must be positive")
        if not 0 <= self.start_s:
            raise ConfigError("start_s must be non-negative")
        if self.zone_radius_s < 0:
            raise ConfigError("zone_radius_s must be non-negative")
        if (self.network.file is None) == (self.network.grid is None):
            raise ConfigError("[network] needs exactly one of 'file' or 'grid'")
        if (self.demand.file is None) == (self.demand.hourly_rates is None):
            raise ConfigError("[demand] needs exactly one of 'file' or 'synthetic'")
        for p in (self.network.file, self.demand.file, self.demand.od_file, self.chargers.file):
            if p is not None and not Path(p).is_file():
                raise ConfigError(f"file not found: {p}")
        if self.demand.hourly_rates is not None and (
                len(self.demand.hourly_rates) != 24 or min(self.demand.hourly_rates) < 0):
            raise ConfigError("synthetic hourly_rates needs 24 non-negative values")
        f = self.fleet
        if not 0 <= f.initial_fleet <= f.total_drivers:
            raise ConfigError("need 0 <= initial_fleet <= total_drivers")
        lo, hi = f.initial_soc_fraction
        if not 0 <= lo <= hi <= 1:
            raise ConfigError("initial_soc_fraction must satisfy 0 <= lo <= hi <= 1")
        w = f.shift_start_weights
        if len(w) != 24 or min(w) < 0 or not sum(w) > 0:
            raise ConfigError("shift_start_weights needs 24 non-negative values, one positive")
        if self.chargers.file is None and (self.chargers.stations < 0 or self.chargers.piles_per_station < 1):
            raise ConfigError("invalid charger station layout")
        return self

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


def _spec(d: dict, default: TruncatedNormalSpec) -> TruncatedNormalSpec:
    merged = {**dataclasses.asdict(default), **d}
    try:
        return TruncatedNormalSpec(float(merged["min"]), float(merged["mean"]),
                                   float(merged["max"]), float(merged["sd"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _path(base: Path, value: Any) -> Path | None:
    if value is None:
        return None
    p = Path(value)
    return p if p.is_absolute() else base / p


def read_weights(path: Path) -> tuple[float, ...]:
    vals = [float(x) for x in Path(path).read_text().split()]
    if len(vals) != 24:
        raise ConfigError(f"{path}: expected 24 hourly weights, got {len(vals)}")
    return tuple(vals)


def from_dict(raw: dict, base: Path = Path(".")) -> ScenarioConfig:
    raw = dict(raw)
    try:
        net = raw.pop("network")
        dem = raw.pop("demand")
    except KeyError as exc:
        raise ConfigError(f"missing required section [{exc.args[0]}]") from None
    grid = net.get("grid")
    network = NetworkSource(
        file=_path(base, net.get("file")),
        grid=(int(grid["rows"]), int(grid["cols"]), float(grid["edge_time_s"])) if grid else None,
        precompute_all_pairs=bool(net.get("precompute_all_pairs", False)))
    syn = dem.get("synthetic")
    demand = DemandSource(
        file=_path(base, dem.get("file")),
        hourly_rates=tuple(float(x) for x in syn["hourly_rates"]) if syn else None,
        seed=int(syn.get("seed", 0)) if syn else 0,
        od_file=_path(base, (syn or {}).get("od_file")))

    fl = raw.pop("fleet", {})
    weights = fl.get("shift_start_weights")
    if "shift_start_file" in fl:
        weights = read_weights(_path(base, fl["shift_start_file"]))
    fleet = FleetConfig(
        total_drivers=int(fl.get("total_drivers", 28000)),
        initial_fleet=int(fl.get("initial_fleet", 2000)),
        soc_max=float(fl.get("soc_max_kwh", 54.0)),
        consumption_kw=float(fl.get("consumption_kw", 6.0)),
        initial_soc_fraction=tuple(float(x) for x in fl.get("initial_soc_fraction", (0.2, 1.0))),
        shift_start_weights=tuple(float(x) for x in weights) if weights else (1.0,) * 24)

    ch = raw.pop("chargers", {})
    chargers = ChargerSetup(file=_path(base, ch.get("file")), stations=int(ch.get("stations", 30)),
                            piles_per_station=int(ch.get("piles_per_station", 6)),
                            speed_kw=float(ch.get("speed_kw", 120.0)))

    pr = raw.pop("pricing", {})
    defaults = PricingConfig()
    tou = pr.get("tou")
    try:
        pricing = PricingConfig(
            fare=float(pr.get("fare_per_hour", 42.0)) / 3600,
            wage=float(pr.get("wage_per_hour", 30.0)) / 3600,
            e1=float(pr.get("e1", defaults.e1)), e2=float(pr.get("e2", defaults.e2)),
            tou=tuple(TariffWindow(float(w["start_h"]) * 3600, float(w["end_h"]) * 3600, float(w["price"]))
                      for w in tou) if tou else defaults.tou,
            vot_matching=float(pr.get("vot_matching", defaults.vot_matching)),
            vot_pickup=float(pr.get("vot_pickup", defaults.vot_pickup)),
            vot_charging=float(pr.get("vot_charging", defaults.vot_charging)))
    except MarketError as exc:
        raise ConfigError(str(exc)) from exc

    be = raw.pop("behavior", {})
    behavior = BehaviorConfig(
        matching_patience=_spec(be.get("matching_patience", {}), MATCHING_PATIENCE),
        pickup_patience=_spec(be.get("pickup_patience", {}), PICKUP_PATIENCE),
        gamma={k: _spec(be.get(k, {}), GAMMA[k]) for k in GAMMA},
        exit_decision_interval_s=float(be.get("exit_decision_interval_s", 60.0)),
        incentive_window_s=float(be.get("incentive_window_s", 3600.0)))

    scalars = {"seed": int, "strategy": str, "horizon_s": float, "start_s": float, "matching_interval_s": float,
               "zone_radius_s": float, "reactive_threshold": float}
    unknown = set(raw) - set(scalars)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    kw = {k: scalars[k](v) for k, v in raw.items()}
    return ScenarioConfig(network=network, demand=demand, fleet=fleet, chargers=chargers,
                          pricing=pricing, behavior=behavior, **kw).validate()


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return from_dict(raw, path.parent)
