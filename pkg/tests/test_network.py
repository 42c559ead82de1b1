import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evfleet.network import Edge, NetworkError, build_network, generate_grid, load_network, parse_network
from oracles import all_simple_path_costs, label_correcting


def test_minimal_two_node_network():
    net = parse_network("N 0\nN 1\nE 0 1 10\nE 1 0 10\n")
    assert len(net) == 2 and net.n_edges == 2


def test_one_way_pair_is_rejected():
    with pytest.raises(NetworkError, match="not strongly connected"):
        parse_network("N 0\nN 1\nE 0 1 10\n")


@pytest.mark.parametrize("text, msg", [
    ("N 0\nN 0\nE 0 0 1\n", "duplicate"),
    ("N 0\nN 1\nE 0 2 5\nE 1 0 5\n", "dangling|unknown"),
    ("N 0\nN 1\nE 0 1 0\nE 1 0 5\n", "positive"),
    ("N 0\nN 1\nX 0 1\n", "parse"),
    ("N a\n", "parse"),
])
def test_parse_errors(text, msg):
    with pytest.raises(NetworkError, match=msg):
        parse_network(text)


def test_comments_and_coordinates(tmp_path):
    path = tmp_path / "tiny.net"
    path.write_text("# two nodes\nN 0 0.0 0.0\nN 1 1.5 2.0  # with coords\n\nE 0 1 10\nE 1 0 12\n")
    net = load_network(path)
    assert net.travel_time(0, 1) == 10 and net.travel_time(1, 0) == 12


def test_text_round_trip():
    net = generate_grid(3, 4, 17.5)
    again = parse_network(net.to_text())
    assert again.node_ids == net.node_ids
    for u in net.node_ids:
        assert np.array_equal(again.distances_from(u), net.distances_from(u))


def _manhattan_scale(n_nodes=4360, n_edges=9537, seed=5):
    rng = random.Random(seed)
    pairs = {(i, (i + 1) % n_nodes) for i in range(n_nodes)}
    while len(pairs) < n_edges:
        u, v = rng.randrange(n_nodes), rng.randrange(n_nodes)
        if u != v:
            pairs.add((u, v))
    lines = [f"N {i}" for i in range(n_nodes)]
    lines += [f"E {u} {v} {rng.uniform(5, 90):.3f}" for u, v in sorted(pairs)]
    return "\n".join(lines) + "\n"


def test_manhattan_scale_input_loads():
    net = parse_network(_manhattan_scale())
    assert len(net) == 4360 and net.n_edges == 9537
    d = net.distances_from(0)
    assert np.isfinite(d).all()


@pytest.mark.parametrize("rows, cols, nodes, edges", [(2, 2, 4, 8), (10, 10, 100, 360), (3, 5, 15, 44)])
def test_grid_counts(rows, cols, nodes, edges):
    net = generate_grid(rows, cols, 30)
    assert len(net) == nodes and net.n_edges == edges == 2 * (2 * rows * cols - rows - cols)


@pytest.mark.parametrize("rows, cols, t", [(1, 5, 30), (5, 1, 30), (3, 3, 0), (3, 3, -2)])
def test_grid_rejects_bad_arguments(rows, cols, t):
    with pytest.raises(NetworkError):
        generate_grid(rows, cols, t)


def test_travel_time_basics():
    net = parse_network("N 0\nN 1\nE 0 1 10\nE 1 0 10\n")
    assert net.travel_time(1, 1) == 0
    assert net.travel_time(0, 1) == 10
    with pytest.raises(NetworkError):
        net.travel_time(0, 7)


def test_grid_corner_to_corner_matches_path_enumeration():
    net = generate_grid(3, 3, 30)
    adj = {u: [] for u in net.node_ids}
    for line in net.to_text().splitlines():
        if line.startswith("E"):
            _, u, v, w = line.split()
            adj[int(u)].append((int(v), float(w)))
    assert min(all_simple_path_costs(adj, 0, 8)) == 120
    assert net.travel_time(0, 8) == 120


def test_nodes_within():
    net = generate_grid(3, 3, 30)
    assert net.nodes_within(4, 0) == {4}
    assert net.nodes_within(4, 30) == {1, 3, 4, 5, 7}
    assert net.nodes_within(0, 1e9) == set(net.node_ids)
    with pytest.raises(NetworkError):
        net.nodes_within(42, 10)


def test_zone_membership_is_asymmetric_on_directed_graphs():
    # 0 -> 1 is short, 1 -> 0 has to go around through 2
    net = parse_network("N 0\nN 1\nN 2\nE 0 1 10\nE 1 2 50\nE 2 0 50\n")
    assert 1 in net.nodes_within(0, 20)
    assert 0 not in net.nodes_within(1, 20)


def _random_strong_graph(rng, n, extra):
    edges = {(i, (i + 1) % n): rng.uniform(1, 20) for i in range(n)}
    for _ in range(extra):
        u, v = rng.randrange(n), rng.randrange(n)
        if u != v:
            edges[(u, v)] = rng.uniform(1, 20)
    return [(u, v, w) for (u, v), w in edges.items()]


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 50), st.integers(0, 120), st.integers(0, 2**31))
def test_dijkstra_matches_label_correcting(n, extra, seed):
    rng = random.Random(seed)
    edges = _random_strong_graph(rng, n, extra)
    net = build_network({i: None for i in range(n)}, [Edge(u, v, w) for u, v, w in edges])
    for src in range(min(n, 5)):
        assert list(net.distances_from(src)) == label_correcting(n, edges, src)


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 20), st.integers(0, 40), st.integers(0, 2**31))
def test_triangle_inequality(n, extra, seed):
    rng = random.Random(seed)
    edges = _random_strong_graph(rng, n, extra)
    net = build_network({i: None for i in range(n)}, [Edge(u, v, w) for u, v, w in edges])
    a, b, c = rng.sample(range(n), 3)
    assert net.travel_time(a, c) <= net.travel_time(a, b) + net.travel_time(b, c) + 1e-9


def test_precomputed_all_pairs_agree_with_lazy_queries():
    lazy = generate_grid(4, 4, 12)
    eager = generate_grid(4, 4, 12)
    eager.precompute_all_pairs()
    for u in lazy.node_ids:
        assert np.array_equal(lazy.distances_from(u), eager.distances_from(u))
