import math
from fractions import Fraction as Fr
from itertools import combinations

import numpy as np
import pytest

from gridmetric.grid import EdgeKey, Rect, distance_field
from gridmetric.pinwheel import (GAMMA, OFF_PATH, SHARED, Disk, InvalidTriangle, PinwheelTriangle,
                                 ResourceLimit, angles_of_descendants, audit_embedding,
                                 build_pinwheel_graph, embed_into_grid, expand_to_cover,
                                 measure_stretch, parent_of, planarity_violations, progression,
                                 progression_covered, stretch_pairs, subdivide, tile_window)
from gridmetric.pinwheel.graph import _segments_cross


def tri_area(vs):
    (ax, ay), (bx, by), (cx, cy) = vs
    return abs((bx - ax) * (cy - ay) - (by - ay) * (cx - ax)) / 2


def interior_disjoint(t1, t2):
    """Exact separating-axis test allowing shared boundary."""
    for tri in (t1, t2):
        for k in range(3):
            p, q = tri[k], tri[(k + 1) % 3]
            nrm = (q[1] - p[1], p[0] - q[0])
            a = [nrm[0] * x + nrm[1] * y for x, y in t1]
            b = [nrm[0] * x + nrm[1] * y for x, y in t2]
            if max(a) <= min(b) or max(b) <= min(a):
                return True
    return False


@pytest.fixture(scope="module")
def window500():
    g = build_pinwheel_graph(Rect(0, 0, 499, 499), 25)
    return g, embed_into_grid(g)


def test_central_child_of_reference_triangle():
    # A=(0,0), B=(2,0), C=(0,1), stored as (right, short end, long end)
    t = PinwheelTriangle(((0, 0), (0, 1), (2, 0)))
    kids = subdivide(t)
    central = kids[2]
    assert set(central.vertices) == {(Fr(1, 5), Fr(2, 5)), (Fr(2, 5), Fr(4, 5)), (Fr(1), Fr(0))}
    for k in kids:
        assert sorted(k.side_lengths()) == pytest.approx([1 / math.sqrt(5), 2 / math.sqrt(5), 1.0])
        assert k.level == t.level - 1


def test_partition_exact():
    t = PinwheelTriangle(((Fr(3, 7), Fr(1, 3)), (Fr(3, 7) - 1, Fr(1, 3) + 2), (Fr(3, 7) + 4, Fr(1, 3) + 2)))
    kids = subdivide(t)
    assert sum(tri_area(k.vertices) for k in kids) == tri_area(t.vertices)
    assert sum(k.area for k in kids) == t.area
    for a, b in combinations(kids, 2):
        assert interior_disjoint(a.vertices, b.vertices)
    for k in kids:
        assert all(t.contains(p) for p in k.vertices)


def test_float_partition_relative():
    t = PinwheelTriangle(((0.1, 0.2), (0.1 - 0.5, 0.2 + 1.0), (0.1 + 2.0, 0.2 + 1.0)))
    kids = subdivide(t)
    total = sum(float(k.area) for k in kids)
    assert abs(total - float(t.area)) <= 1e-12 * float(t.area)


def test_invalid_triangles():
    with pytest.raises(InvalidTriangle):
        PinwheelTriangle(((0, 0), (0, 1), (3, 0)))
    with pytest.raises(InvalidTriangle):
        PinwheelTriangle(((0, 0), (0, 0), (0, 0)))


def test_parent_inverts_central_child():
    t = PinwheelTriangle.seed(25)
    p = parent_of(t)
    assert subdivide(p)[2] == t
    assert p.level == 1
    assert p.area == 5 * t.area


def test_angles_small_k():
    t = PinwheelTriangle.seed(1)
    th = t.hypotenuse_angle
    a0 = angles_of_descendants(t, 0)
    assert len(a0) == 1 and a0[0] == pytest.approx(th % (2 * math.pi))
    a1 = angles_of_descendants(t, 1)
    assert progression_covered(a1, th, 1)
    assert set(np.round(progression(th, 1), 9)) == {round((th - GAMMA) % (2 * math.pi), 9),
                                                   round((th + GAMMA) % (2 * math.pi), 9)}


@pytest.mark.parametrize("k", range(6))
def test_angle_progression_superset(k):
    for t in (PinwheelTriangle.seed(1), PinwheelTriangle(((0, 0), (1, 0), (0, 2)))):
        ang = angles_of_descendants(t, k)
        th = t.hypotenuse_angle
        for target in progression(th, k):
            d = np.abs(np.mod(ang - target + math.pi, 2 * math.pi) - math.pi)
            assert d.min() <= 1e-9


def test_angle_resource_guard():
    with pytest.raises(ResourceLimit):
        angles_of_descendants(PinwheelTriangle.seed(1), 11)


def test_expand_to_cover_disk():
    s = PinwheelTriangle.seed(1)
    c = tuple(float(x) for x in s.centroid())
    disk = Disk(c, 100 * 5 ** 1.5)
    top = expand_to_cover(s, disk)
    m = top.level - s.level
    assert m <= 12
    assert top.contains(c) and top.edge_clearance(c) >= disk.radius
    # each expansion rotates the hypotenuse by gamma
    rot = (top.hypotenuse_angle - s.hypotenuse_angle - m * GAMMA) % math.pi
    assert min(rot, math.pi - rot) < 1e-9
    # and the seed is the central descendant
    t = top
    for _ in range(m):
        t = subdivide(t)[2]
    assert t == s


def test_expand_own_box():
    s = PinwheelTriangle.seed(25)
    top = expand_to_cover(s, Rect(0, 0, 50, 25))
    assert all(top.contains(p) for p in [(0, 0), (50, 0), (0, 25), (50, 25)])


def test_window_in_one_triangle():
    tris, _ = tile_window(Rect(5, 2, 6, 3), 25)
    assert len(tris) == 1
    g = build_pinwheel_graph(Rect(5, 2, 6, 3), 25)
    assert len(g.vertices) == 3 and len(g.edges) == 3


def test_triangle_count_500(window500):
    g, _ = window500
    n = len(g.triangles)
    atomic = 0.5 * 25 * 50
    # the tiles cover the window and lie within it dilated by their diameter
    lo = 500 * 500 / atomic
    hi = (500 + 2 * 25 * math.sqrt(5)) ** 2 / atomic
    assert lo <= n <= hi
    assert sum(float(t.area) for t in g.triangles) >= 500 * 500


def test_edge_lengths_and_planarity(window500):
    g, _ = window500
    L = g.lengths
    ok = np.isclose(L, 25) | np.isclose(L, 50) | np.isclose(L, 25 * math.sqrt(5))
    assert ok.all()
    assert planarity_violations(g) == []


def test_segments_cross_cases():
    P = lambda x, y: (Fr(x), Fr(y))
    assert _segments_cross(P(0, 0), P(2, 2), P(0, 2), P(2, 0))
    assert not _segments_cross(P(0, 0), P(1, 0), P(1, 0), P(2, 1))
    assert _segments_cross(P(0, 0), P(2, 0), P(1, 0), P(3, 0))
    assert not _segments_cross(P(0, 0), P(1, 0), P(2, 0), P(3, 0))
    assert _segments_cross(P(0, 0), P(2, 0), P(1, 0), P(1, 1))


def test_embedding_audit_and_independent_checks(window500):
    g, emb = window500
    rep = audit_embedding(emb)
    assert rep["ok"], rep
    assert rep["max_prefix"] <= 2
    W = emb.weights
    lengths = dict(zip(map(tuple, g.edges.tolist()), g.lengths))
    used = set()
    for e, keys in emb.path_map.items():
        total = sum(W.weight(k) for k in keys)
        assert abs(total - lengths[e]) <= 1e-9 * lengths[e]
        used.update(keys)
    # off-path edges weigh 10, everywhere
    rng = np.random.default_rng(0)
    for _ in range(2000):
        x, y = rng.integers(W.window.x0, W.window.x1), rng.integers(W.window.y0, W.window.y1)
        k = EdgeKey.between((int(x), int(y)), (int(x) + 1, int(y)))
        if k not in used:
            assert W.weight(k) == OFF_PATH


def test_horizontal_lattice_edges_weigh_one(window500):
    g, emb = window500
    seen = 0
    for (u, v), c in emb.paths.items():
        (ux, uy), (vx, vy) = g.vertices[u], g.vertices[v]
        if uy == vy and all(q.denominator == 1 for q in (ux, uy, vx, vy)) and abs(vx - ux) == 25:
            w = emb.path_weights((u, v))
            assert len(w) == 25
            assert (w == 1.0).all()
            seen += 1
    assert seen > 0


def test_shared_cells_weight_one(window500):
    _, emb = window500
    count = {}
    for e, keys in emb.path_map.items():
        for k in keys:
            count[k] = count.get(k, 0) + 1
    shared = [k for k, n in count.items() if n >= 2]
    assert shared
    assert all(emb.weights.weight(k) == SHARED for k in shared)


def test_grid_metric_below_graph_metric(window500):
    g, emb = window500
    rng = np.random.default_rng(1)
    src = rng.choice(len(g.vertices), 5, replace=False)
    gd = g.graph_distances(src)
    for row, s in zip(gd, src):
        field = distance_field(emb.weights, emb.vertex_map[s])
        for t in rng.choice(len(g.vertices), 30, replace=False):
            if np.isfinite(row[t]) and emb.weights.window.contains(emb.vertex_map[t]):
                assert field[emb.vertex_map[t]] <= row[t] + 1e-9


def test_stretch_report(window500, tmp_path):
    _, emb = window500
    pairs = stretch_pairs(Rect(0, 0, 499, 499), sources=4, per_source=15, seed=3)
    rep = measure_stretch(emb.weights, pairs)
    assert rep.unreachable == 0
    assert rep.lower_bound_gap() > -2
    assert sum(r[4] for r in rep.table()) == len(pairs)
    rep.to_csv(tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().startswith("d_bin,max_stretch,mean_stretch,count")


def test_tiling_deterministic():
    a = build_pinwheel_graph(Rect(0, 0, 199, 199))
    b = build_pinwheel_graph(Rect(0, 0, 199, 199))
    assert a.vertices == b.vertices and np.array_equal(a.edges, b.edges)
    ea, eb = embed_into_grid(a), embed_into_grid(b)
    assert np.array_equal(ea.weights.h, eb.weights.h) and np.array_equal(ea.weights.v, eb.weights.v)
