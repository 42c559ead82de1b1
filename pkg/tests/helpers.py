"""Small scenario builders shared by the simulator and CLI tests."""

from pathlib import Path

from evfleet.config import load_config


def scenario(tmp_path: Path, body: str, files: dict[str, str] | None = None):
    """Write ``files`` plus a scenario.toml with ``body`` and load it."""
    for name, text in (files or {}).items():
        (tmp_path / name).write_text(text)
    path = tmp_path / "scenario.toml"
    path.write_text(body)
    return load_config(path)


TWO_NODE_NET = "N 0\nN 1\nE 0 1 60\nE 1 0 60\n"


def random_strong_graph(rng, n, extra, lo=20.0, hi=200.0):
    """Ring plus random chords with continuous edge times (ties have probability zero)."""
    edges = {(i, (i + 1) % n): float(rng.uniform(lo, hi)) for i in range(n)}
    for _ in range(extra):
        u, v = (int(x) for x in rng.integers(0, n, size=2))
        if u != v:
            edges[(u, v)] = float(rng.uniform(lo, hi))
    return [(u, v, w) for (u, v), w in sorted(edges.items())]


def random_zone_instance(rng, max_vehicles=5, max_passengers=5):
    """A small directed network with vacant vehicles and waiting passengers on distinct nodes.

    Returns (edges, n_nodes, vehicles, passengers) with vehicles as
    (id, node, soc, kw) and passengers as (id, node, trip_time).
    """
    nv = int(rng.integers(1, max_vehicles + 1))
    npax = int(rng.integers(0, max_passengers + 1))
    n = int(rng.integers(max(nv, npax, 2), 11))
    edges = random_strong_graph(rng, n, int(rng.integers(0, 2 * n)))
    vnodes = rng.choice(n, size=nv, replace=False)
    pnodes = rng.choice(n, size=npax, replace=False)
    vehicles = [(i, int(vnodes[i]), float(rng.choice([rng.uniform(0.2, 3.0), rng.uniform(3, 54)])), 6.0)
                for i in range(nv)]
    passengers = [(100 + j, int(pnodes[j]), float(rng.uniform(60, 1500))) for j in range(npax)]
    return edges, n, vehicles, passengers


# acceptance outcomes, printed by the terminal summary hook in conftest
ACCEPTANCE: dict[int, tuple[bool, str]] = {}
