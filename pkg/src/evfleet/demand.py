"""Demand and charger files, plus the synthetic demand generator.

Demand CSV rows are ``request_time_s,origin_node,dest_node`` (a header line
with those names is optional). Charger CSV rows are ``charger_id,node,speed_kW``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .network import Network

DEMAND_HEADER = ("request_time_s", "origin_node", "dest_node")
CHARGER_HEADER = ("charger_id", "node", "speed_kW")


@dataclass(frozen=True, order=True)
class TripRequest:
    time: float
    origin: int
    dest: int


def _rows(path: Path, header: tuple[str, ...]):
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if lineno == 1 and row[0].strip() == header[0]:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            yield lineno, [x.strip() for x in row]


def read_demand(path: str | Path) -> list[TripRequest]:
    out = []
    for lineno, (t, o, d) in _rows(Path(path), DEMAND_HEADER):
        try:
            out.append(TripRequest(float(t), int(o), int(d)))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return out


def write_demand(path: str | Path, requests: Sequence[TripRequest]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DEMAND_HEADER)
        for r in requests:
            w.writerow([repr(r.time), r.origin, r.dest])


def read_chargers(path: str | Path) -> list[tuple[int, int, float]]:
    out = []
    for lineno, (cid, node, speed) in _rows(Path(path), CHARGER_HEADER):
        out.append((int(cid), int(node), float(speed)))
    return out


def read_od_weights(path: str | Path) -> list[tuple[int, int, float]]:
    out = []
    for lineno, (o, d, w) in _rows(Path(path), ("origin_node", "dest_node", "weight")):
        out.append((int(o), int(d), float(w)))
    return out


def generate_demand(net: Network, hourly_rates: Sequence[float], horizon_s: float, seed: int,
                    od_weights: Sequence[tuple[int, int, float]] | None = None,
                    start_s: float = 0.0) -> list[TripRequest]:
    """Poisson arrivals with piecewise-constant hourly rates (requests per hour).

    Arrivals cover [start_s, start_s + horizon_s). Origins and destinations are uniform over distinct node pairs unless
    ``od_weights`` gives (origin, dest, weight) triples.
    """
    rates = np.asarray(hourly_rates, dtype=float)
    if rates.shape != (24,) or (rates < 0).any() or not np.isfinite(rates).all():
        raise ValueError("hourly_rates needs 24 non-negative finite values")
    if od_weights is not None:
        pairs = [(o, d) for o, d, _ in od_weights]
        w = np.array([x for _, _, x in od_weights], dtype=float)
        if (w < 0).any() or not w.sum() > 0:
            raise ValueError("OD weights must be non-negative with a positive total")
        for o, d in pairs:
            net.index(o), net.index(d)
        w = w / w.sum()
    rng = np.random.default_rng(seed)
    nodes = np.asarray(net.node_ids)
    out: list[TripRequest] = []
    start, stop = start_s, start_s + horizon_s
    while start < stop:
        end = min((start // 3600.0 + 1) * 3600.0, stop)
        lam = rates[int(start // 3600) % 24] / 3600.0
        n = rng.poisson(lam * (end - start))
        times = np.sort(rng.uniform(start, end, n))
        for t in times:
            if od_weights is not None:
                o, d = pairs[rng.choice(len(pairs), p=w)]
            else:
                o, d = rng.choice(nodes, 2, replace=False)
            out.append(TripRequest(float(t), int(o), int(d)))
        start = end
    return out
