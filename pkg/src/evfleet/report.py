"""Run report: supply, demand and operator metrics plus 5-minute time series."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

SERIES_BIN_S = 300.0


@dataclass
class SeriesRow:
    t_start: float
    cancelled_type1: int
    cancelled_type2: int
    charging_vehicles: int


@dataclass
class RunReport:
    strategy: str
    seed: int
    horizon_s: float
    start_s: float = 0.0
    # supply
    drivers_entered: int = 0
    drivers_exited: int = 0
    mean_driver_income: float = 0.0
    mean_shift_length_h: float = 0.0
    mean_initial_soc_kwh: float = 0.0
    mean_final_soc_kwh: float = 0.0
    # demand
    total_requests: int = 0
    served: int = 0
    served_pct: float = 0.0
    cancelled_type1: int = 0
    cancelled_type2: int = 0
    in_system: int = 0
    mean_matching_time_s: float = 0.0
    mean_pickup_time_s: float = 0.0
    # operator
    charging_dispatches: int = 0
    charging_refusals: int = 0
    chargings: int = 0
    chargings_offpeak: int = 0
    chargings_peak: int = 0
    charging_profit: float = 0.0
    charging_profit_offpeak: float = 0.0
    charging_profit_peak: float = 0.0
    trip_profit: float = 0.0
    monetary_profit: float = 0.0
    series: list[SeriesRow] = field(default_factory=list)

    @property
    def cancellations(self) -> int:
        return self.cancelled_type1 + self.cancelled_type2

    def scalars(self) -> dict[str, object]:
        d = asdict(self)
        d.pop("series")
        return d

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        d = dict(d)
        series = [SeriesRow(**row) for row in d.pop("series", [])]
        known = {f.name for f in fields(cls)}
        return cls(series=series, **{k: v for k, v in d.items() if k in known})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls.from_dict(json.loads(text))


# Rows of the comparison table, grouped as in the benchmark results table.
TABLE_ROWS = [
    ("Supply", "Mean driver income ($)", "mean_driver_income"),
    ("Supply", "Mean shift length (hour)", "mean_shift_length_h"),
    ("Supply", "Mean EV initial SoC (kWh)", "mean_initial_soc_kwh"),
    ("Supply", "Mean EV final SoC (kWh)", "mean_final_soc_kwh"),
    ("Supply", "Drivers entered", "drivers_entered"),
    ("Supply", "Drivers exited", "drivers_exited"),
    ("Demand", "Total requests", "total_requests"),
    ("Demand", "Served passengers", "served"),
    ("Demand", "Served passengers (%)", "served_pct"),
    ("Demand", "Cancellations", "cancellations"),
    ("Demand", "Type I Cancellation", "cancelled_type1"),
    ("Demand", "Type II Cancellation", "cancelled_type2"),
    ("Demand", "Still in system", "in_system"),
    ("Demand", "Mean matching time (s)", "mean_matching_time_s"),
    ("Demand", "Mean pick-up time (s)", "mean_pickup_time_s"),
    ("TNC", "Charging dispatches", "charging_dispatches"),
    ("TNC", "Charging refusals", "charging_refusals"),
    ("TNC", "Number of chargings", "chargings"),
    ("TNC", "Number of chargings, off-peak", "chargings_offpeak"),
    ("TNC", "Number of chargings, peak", "chargings_peak"),
    ("TNC", "Charging profit ($)", "charging_profit"),
    ("TNC", "Charging profit, off-peak ($)", "charging_profit_offpeak"),
    ("TNC", "Charging profit, peak ($)", "charging_profit_peak"),
    ("TNC", "Trip profit ($)", "trip_profit"),
    ("TNC", "Monetary profit ($)", "monetary_profit"),
]


def write_report(report: RunReport, out_dir: str | Path, stem: str) -> list[Path]:
    """Write ``<stem>.json`` plus the cancellation and charging-vehicle CSV series."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = out / f"{stem}.json"
    doc.write_text(report.to_json())
    canc = out / f"{stem}_cancellations.csv"
    chg = out / f"{stem}_charging_vehicles.csv"
    with open(canc, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t_start_s", "type1", "type2"])
        for r in report.series:
            w.writerow([r.t_start, r.cancelled_type1, r.cancelled_type2])
    with open(chg, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t_s", "charging_vehicles"])
        for r in report.series:
            w.writerow([r.t_start, r.charging_vehicles])
    return [doc, canc, chg]


def read_report(path: str | Path) -> RunReport:
    return RunReport.from_json(Path(path).read_text())


def comparison_table(reports: list[RunReport], labels: list[str] | None = None) -> str:
    """Side-by-side table of scalar metrics; the last column is last minus first."""
    if len(reports) < 2:
        raise ValueError("comparison needs at least two reports")
    horizons = {(r.start_s, r.horizon_s) for r in reports}
    if len(horizons) > 1:
        raise ValueError(f"reports cover different horizons: {sorted(horizons)}")
    labels = labels or [f"{r.strategy}#{r.seed}" for r in reports]
    head = ["", "Metric", *labels, "Delta"]
    rows = []
    for group, name, attr in TABLE_ROWS:
        vals = [getattr(r, attr) for r in reports]
        rows.append([group, name, *(_fmt(v) for v in vals), _fmt(vals[-1] - vals[0])])
    widths = [max(len(str(x)) for x in col) for col in zip(head, *rows)]
    line = lambda cells: "  ".join(str(c).ljust(w) if i < 2 else str(c).rjust(w)
                                   for i, (c, w) in enumerate(zip(cells, widths)))
    return "\n".join([line(head), line(["-" * w for w in widths]), *map(line, rows)]) + "\n"


def _fmt(v) -> str:
    if isinstance(v, int):
        return str(v)
    return f"{v:.2f}"
