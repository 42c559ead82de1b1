"""Directed road network with fixed travel times.

Network files are line oriented::

    # comment
    N <id> [<x> <y>]
    E <tail> <head> <travel_time_seconds>

Node ids are integers. Blank lines and anything after ``#`` are ignored.
Edges must reference declared nodes, travel times must be strictly
positive and the graph must be strongly connected.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np


class NetworkError(ValueError):
    """Raised for malformed or unusable network input."""


@dataclass(frozen=True)
class Edge:
    tail: int
    head: int
    travel_time: float


class Network:
    """Immutable directed graph with memoized single-source shortest paths."""

    def __init__(self, nodes: dict[int, tuple[float, float] | None], edges: Iterable[Edge]):
        self.coords = dict(nodes)
        self.node_ids: list[int] = sorted(self.coords)
        self._index = {n: i for i, n in enumerate(self.node_ids)}
        self.edges: tuple[Edge, ...] = tuple(edges)
        n = len(self.node_ids)
        self._out: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        self._in: list[list[int]] = [[] for _ in range(n)]
        for e in self.edges:
            a, b = self._index[e.tail], self._index[e.head]
            self._out[a].append((b, e.travel_time))
            self._in[b].append(a)
        self._dist: dict[int, np.ndarray] = {}
        self._within: dict[tuple[int, float], frozenset[int]] = {}

    def __len__(self) -> int:
        return len(self.node_ids)

    def __contains__(self, node: int) -> bool:
        return node in self._index

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def index(self, node: int) -> int:
        try:
            return self._index[node]
        except KeyError:
            raise NetworkError(f"unknown node id {node!r}") from None

    def is_strongly_connected(self) -> bool:
        if not self.node_ids:
            return False
        return (_reach_count(self._out_ids(), 0) == len(self)
                and _reach_count(self._in, 0) == len(self))

    def _out_ids(self) -> list[list[int]]:
        return [[b for b, _ in adj] for adj in self._out]

    def distances_from(self, origin: int) -> np.ndarray:
        """Shortest travel times from ``origin`` to every node (index order)."""
        i = self.index(origin)
        d = self._dist.get(i)
        if d is None:
            d = self._dijkstra(i)
            d.setflags(write=False)
            self._dist[i] = d
        return d

    def _dijkstra(self, src: int) -> np.ndarray:
        dist = [math.inf] * len(self)
        dist[src] = 0.0
        heap = [(0.0, src)]
        done = [False] * len(self)
        while heap:
            d, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            for v, w in self._out[u]:
                nd = d + w
                if nd < dist[v]:
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        return np.asarray(dist, dtype=float)

    def precompute_all_pairs(self) -> None:
        for n in self.node_ids:
            self.distances_from(n)

    def travel_time(self, origin: int, dest: int) -> float:
        j = self.index(dest)
        return float(self.distances_from(origin)[j])

    def nodes_within(self, center: int, radius: float) -> frozenset[int]:
        """Nodes reachable from ``center`` within ``radius`` seconds."""
        if radius < 0:
            raise ValueError("radius must be non-negative")
        key = (center, float(radius))
        hit = self._within.get(key)
        if hit is None:
            d = self.distances_from(center)
            hit = frozenset(self.node_ids[j] for j in np.flatnonzero(d <= radius))
            self._within[key] = hit
        return hit

    def to_text(self) -> str:
        lines = []
        for n in self.node_ids:
            xy = self.coords[n]
            lines.append(f"N {n}" if xy is None else f"N {n} {xy[0]!r} {xy[1]!r}")
        lines.extend(f"E {e.tail} {e.head} {e.travel_time!r}" for e in self.edges)
        return "\n".join(lines) + "\n"


def _reach_count(adj: list[list[int]], start: int) -> int:
    seen = [False] * len(adj)
    seen[start] = True
    queue = deque([start])
    count = 1
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                count += 1
                queue.append(v)
    return count


def build_network(nodes: dict[int, tuple[float, float] | None], edges: Iterable[Edge]) -> Network:
    edges = list(edges)
    for e in edges:
        if e.tail not in nodes or e.head not in nodes:
            raise NetworkError(f"dangling edge endpoint in {e.tail}->{e.head}")
        if not (e.travel_time > 0 and math.isfinite(e.travel_time)):
            raise NetworkError(f"edge {e.tail}->{e.head} has non-positive travel time")
    net = Network(nodes, edges)
    if not net.is_strongly_connected():
        raise NetworkError("network is not strongly connected")
    return net


def parse_network(text: str) -> Network:
    nodes: dict[int, tuple[float, float] | None] = {}
    edges: list[Edge] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "N" and len(parts) in (2, 4):
                nid = int(parts[1])
                if nid in nodes:
                    raise NetworkError(f"line {lineno}: duplicate node id {nid}")
                nodes[nid] = (float(parts[2]), float(parts[3])) if len(parts) == 4 else None
            elif parts[0] == "E" and len(parts) == 4:
                edges.append(Edge(int(parts[1]), int(parts[2]), float(parts[3])))
            else:
                raise NetworkError(f"line {lineno}: cannot parse {raw!r}")
        except ValueError as exc:
            if isinstance(exc, NetworkError):
                raise
            raise NetworkError(f"line {lineno}: cannot parse {raw!r}") from exc
    return build_network(nodes, edges)


def load_network(source: str | Path) -> Network:
    """Load a network from a file path."""
    return parse_network(Path(source).read_text())


def generate_grid(rows: int, cols: int, edge_time: float) -> Network:
    """Bidirectional rows x cols lattice; node id = r * cols + c."""
    if rows < 2 or cols < 2:
        raise NetworkError("grid needs at least 2 rows and 2 columns")
    if not edge_time > 0:
        raise NetworkError("edge_time must be positive")
    nodes = {r * cols + c: (float(c), float(r)) for r in range(rows) for c in range(cols)}
    edges = []
    for r in range(rows):
        for c in range(cols):
            u = r * cols + c
            if c + 1 < cols:
                edges += [Edge(u, u + 1, float(edge_time)), Edge(u + 1, u, float(edge_time))]
            if r + 1 < rows:
                edges += [Edge(u, u + cols, float(edge_time)), Edge(u + cols, u, float(edge_time))]
    return build_network(nodes, edges)
