import json
import math
from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geosim.errors import ConfigError, GenerationFailed, UnknownNode
from geosim.geometry import Point
from geosim.topology import (
    DiscHole,
    GenConfig,
    PolygonHole,
    build_topology,
    generate,
    is_connected,
    load_topology,
    neighbors,
    planarize_gabriel,
    save_topology,
    topology_from_json,
)

TRIANGLE = [(0, 0), (30, 0), (15, 15 * math.sqrt(3))]
COLLINEAR = [(0, 0), (20, 0), (40, 0)]

# seed verified to exhaust max_rejects for a 2-node, r=1 field in 50x50 m
FAILING_SEED = 3


def test_two_nodes_one_edge():
    t = build_topology([(0, 0), (30, 0)], 40)
    assert t.udg_adj == ((1,), (0,))
    assert t.planar_adj == ((1,), (0,))


def test_equilateral_triangle_keeps_all_edges():
    t = build_topology(TRIANGLE, 40)
    assert len(t.edges(planar=True)) == 3


def test_collinear_long_edge_removed():
    t = build_topology(COLLINEAR, 40)
    assert (0, 2) in t.edges()
    assert (0, 2) not in t.edges(planar=True)
    assert neighbors(t, 0, planar=True) == [1]


def test_neighbors_sorted_and_isolated():
    t = build_topology(TRIANGLE + [(500, 500)], 40)
    assert neighbors(t, 0) == [1, 2]
    assert neighbors(t, 3) == []
    with pytest.raises(UnknownNode):
        neighbors(t, 4)


def test_is_connected_examples():
    assert is_connected(build_topology([(5, 5)], 40))
    assert not is_connected(build_topology([(0, 0), (100, 0)], 40))
    assert is_connected(build_topology(TRIANGLE, 40))


def test_generate_two_node_seed_connects():
    t = generate(GenConfig(n_nodes=2, seed=45, max_rejects=1))
    assert t.n == 2
    assert t.edges() == [(0, 1)]


def _bfs_size(t):
    seen = {0}
    q = deque([0])
    while q:
        u = q.popleft()
        for v in t.udg_adj[u]:
            if v not in seen:
                seen.add(v)
                q.append(v)
    return len(seen)


def test_generate_with_disc_hole():
    hole = DiscHole(Point(200, 200), 60)
    t = generate(GenConfig(n_nodes=150, holes=(hole,), seed=7, max_rejects=200_000))
    assert t.n == 150
    assert not any(math.dist(p, (200, 200)) < 60 for p in t.positions)
    assert all(0 <= p.x <= 400 and 0 <= p.y <= 400 for p in t.positions)
    assert _bfs_size(t) == 150


def test_generate_is_deterministic():
    cfg = GenConfig(n_nodes=150, holes=(DiscHole(Point(200, 200), 60),), seed=7, max_rejects=200_000)
    assert generate(cfg).same_as(generate(cfg))


def test_generate_failure_pins_seed():
    cfg = GenConfig(area_w=50, area_h=50, n_nodes=2, radius=1, seed=FAILING_SEED, max_rejects=10)
    with pytest.raises(GenerationFailed) as info:
        generate(cfg)
    assert info.value.seed == FAILING_SEED


@pytest.mark.parametrize(
    "doc, field",
    [
        ({"n_nodes": 0}, "n_nodes"),
        ({"radius": -1}, "radius"),
        ({"area_w": 0}, "area_w"),
        ({"seed": -1}, "seed"),
        ({"max_rejects": 0}, "max_rejects"),
        ({"bogus": 1}, "bogus"),
        ({"holes": [{"type": "star"}]}, "holes.type"),
    ],
)
def test_gen_config_validation_names_field(doc, field):
    with pytest.raises(ConfigError) as info:
        GenConfig.from_json(doc)
    assert info.value.field == field


def test_gen_config_round_trip():
    cfg = GenConfig(n_nodes=20, holes=(DiscHole(Point(1, 2), 3), PolygonHole((Point(0, 0), Point(4, 0), Point(0, 4)))))
    assert GenConfig.from_json(json.loads(json.dumps(cfg.to_json()))) == cfg


def test_polygon_hole_contains_and_validation():
    sq = PolygonHole((Point(0, 0), Point(10, 0), Point(10, 10), Point(0, 10)))
    assert sq.contains(5, 5)
    assert not sq.contains(10, 5)
    assert not sq.contains(11, 5)
    with pytest.raises(ConfigError):
        PolygonHole((Point(0, 0), Point(10, 0), Point(0, 10), Point(10, 10)))


def test_topology_json_round_trip(tmp_path):
    t = build_topology(TRIANGLE, 40, holes=(DiscHole(Point(100, 100), 5),))
    path = tmp_path / "t.json"
    save_topology(t, path)
    back = load_topology(path)
    assert back.same_as(t)
    assert back.holes == t.holes


def test_topology_json_rejects_bad_ids_and_hole_nodes():
    with pytest.raises(ConfigError):
        topology_from_json({"radius": 40, "nodes": [{"id": 0, "x": 0, "y": 0}, {"id": 2, "x": 1, "y": 1}]})
    with pytest.raises(ConfigError):
        topology_from_json({
            "radius": 40,
            "nodes": [{"id": 0, "x": 0, "y": 0}],
            "holes": [{"type": "disc", "center": [0, 1], "r": 5}],
        })


def _brute_gabriel(pts, radius):
    n = len(pts)
    keep = set()
    for u in range(n):
        for v in range(u + 1, n):
            if math.dist(pts[u], pts[v]) > radius:
                continue
            mx, my = (pts[u][0] + pts[v][0]) / 2, (pts[u][1] + pts[v][1]) / 2
            rr = math.dist(pts[u], pts[v]) / 2
            if all(math.dist((mx, my), pts[w]) >= rr - 1e-9 for w in range(n) if w not in (u, v)):
                keep.add((u, v))
    return keep


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_udg_and_gabriel_match_brute_force(seed):
    rng = np.random.default_rng(seed)
    pts = [tuple(p) for p in rng.uniform(0, 120, size=(25, 2))]
    t = build_topology(pts, 40)
    udg = {(u, v) for u in range(25) for v in range(u + 1, 25) if math.dist(pts[u], pts[v]) <= 40}
    assert set(t.edges()) == udg
    assert set(t.edges(planar=True)) == _brute_gabriel(pts, 40)
    for u, nbrs in enumerate(t.udg_adj):
        assert list(nbrs) == sorted(nbrs)
        assert all(u in t.udg_adj[v] for v in nbrs)


def _segments_cross(a, b, c, d):
    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    return o1 * o2 < 0 and o3 * o4 < 0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_gabriel_subgraph_is_planar(seed):
    rng = np.random.default_rng(seed)
    t = build_topology(rng.uniform(0, 150, size=(40, 2)).tolist(), 40)
    edges = t.edges(planar=True)
    pos = t.positions
    for i, (a, b) in enumerate(edges):
        for c, d in edges[i + 1:]:
            if len({a, b, c, d}) == 4:
                assert not _segments_cross(pos[a], pos[b], pos[c], pos[d])


def test_planarize_is_idempotent_on_planar_input():
    t = build_topology(TRIANGLE, 40)
    assert planarize_gabriel(t).planar_adj == t.planar_adj
