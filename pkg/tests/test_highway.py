import math

import numpy as np
import pytest

from gridmetric.grid import EdgeKey, Rect, certified_distances
from gridmetric.highway import (OFF_HIGHWAY, HighwayCollision, LeveledSegments, LevelParams,
                                LineSpec, assemble_weights, build_highways, build_level_params,
                                collision_audit, highway_weight, max_discrepancy, raster_cells,
                                rasterize_highway, ring_tiles, ring_tiling_weights, same_line_gaps,
                                sample_pairs, separation_audit, trim_lines, verify_guarantees)
from gridmetric.highway.lines import hippodrome_interval, trim_line
from gridmetric.highway.params import iroot
from gridmetric.highway.raster import staircase_edges


@pytest.mark.parametrize("n,levels", [(10**5, (10,)), (10**10, (100, 10)), (32, (2,)),
                                      (10**6, (15,)), (10**15, (1000, 31))])
def test_level_params(n, levels):
    p = build_level_params(n)
    assert p.levels == levels
    assert p.m == len(levels)


def test_iroot_exact():
    for n in (31, 32, 33, 10**10 - 1, 10**10, 3**40):
        r = iroot(n, 5)
        assert r**5 <= n < (r + 1) ** 5


def test_weight_formula():
    assert highway_weight(5, 0) == 1.0
    assert highway_weight(3, 3) == pytest.approx(math.sqrt(2) / 2)
    assert highway_weight(2, 1) == highway_weight(1, 2) == highway_weight(-2, 1)
    for a in np.linspace(0, 1, 11):
        assert math.sqrt(2) / 2 - 1e-12 <= highway_weight(1, a) <= 1


def test_raster_is_staircase():
    rng = np.random.default_rng(0)
    for _ in range(200):
        p = rng.uniform(-50, 50, 2)
        q = p + rng.uniform(-80, 80, 2)
        cells = raster_cells(p, q)
        staircase_edges(cells)  # raises unless 4-connected
        d = np.diff(cells, axis=0)
        # monotone in both coordinates
        assert (d[:, 0] >= 0).all() or (d[:, 0] <= 0).all()
        assert (d[:, 1] >= 0).all() or (d[:, 1] <= 0).all()
        # every vertex square meets the segment
        for c in cells:
            assert meets_square(p, q, c)


def meets_square(p, q, c, tol=1e-9):
    """Liang-Barsky clip of segment p-q against the square of side 1 centred on c."""
    lo, hi = 0.0, 1.0
    for ax in (0, 1):
        d = q[ax] - p[ax]
        a, b = c[ax] - 0.5 - tol, c[ax] + 0.5 + tol
        if d == 0:
            if not a <= p[ax] <= b:
                return False
            continue
        t0, t1 = sorted(((a - p[ax]) / d, (b - p[ax]) / d))
        lo, hi = max(lo, t0), min(hi, t1)
    return lo <= hi


def test_rasterize_weights_uniform():
    edges = rasterize_highway((0.3, 0.1), (40.2, 20.05))
    ws = {w for _, w in edges}
    assert len(ws) == 1
    assert ws.pop() == pytest.approx(highway_weight(39.9, 19.95))


def test_highway_exactness_slope_half():
    assert max_discrepancy((0.0, 0.0), (2000.0, 1000.0)) <= 1.0
    assert max_discrepancy((0.3, -0.2), (1500.7, 750.1)) <= 1.0
    assert max_discrepancy((0, 0), (1000, 0)) == 0.0


def test_two_perpendicular_lines_lose_2k():
    k = 2
    params = LevelParams((k,), 32)
    lines = [LineSpec(0, 0, 0, k), LineSpec(0, 1, 0, k)]
    segs = trim_lines(params, Rect(-50, -50, 50, 50), lines=lines)
    assert len(segs) == 4
    for j in (0, 1):
        rows = sorted((segs.s0[r], segs.s1[r]) for r in range(len(segs)) if segs.j[r] == j)
        assert rows[0][1] == pytest.approx(-k)
        assert rows[1][0] == pytest.approx(k)
        assert rows[1][0] - rows[0][1] == pytest.approx(2 * k)


def test_lone_line_spans_window():
    params = LevelParams((3,), 243)
    segs = trim_lines(params, Rect(0, 0, 99, 99), lines=[LineSpec(0, 0, 0, 3)])
    assert len(segs) == 1
    assert (segs.x0[0], segs.x1[0]) == (0.0, 99.0)


def test_step2_short_gap_extends_to_k():
    k = 2.0
    line = LineSpec(1, 0, 0, 2)
    h = math.sqrt(k * k - 0.25)  # end disk cuts a chord of length 1 = 0.5 k
    lower = [(np.array([0.0, h]), np.array([0.0, 50.0]))]
    iv = hippodrome_interval(*line.frame(), *lower[0], k)
    assert iv[1] - iv[0] == pytest.approx(0.5 * k)
    res = trim_line(line, [line], lower, (-50, -50, 50, 50), k)
    assert res[0] == pytest.approx((-50.0, -0.5))
    # A kept fixed, B pushed to A + k
    assert res[1] == pytest.approx((-0.5 + k, 50.0))


def test_step2_long_gap_removed_as_is():
    line = LineSpec(1, 0, 0, 2)
    lower = [(np.array([0.0, -30.0]), np.array([0.0, 30.0]))]
    res = trim_line(line, [line], lower, (-50, -50, 50, 50), 2.0)
    assert res == [pytest.approx((-50.0, -2.0)), pytest.approx((2.0, 50.0))]


def test_trimming_deterministic():
    a, _ = build_highways(10**4)
    b, _ = build_highways(10**4)
    for f in ("level", "j", "t", "s0", "s1"):
        assert np.array_equal(getattr(a, f), getattr(b, f))


def test_separation_and_collisions_n1e5():
    segs, _ = build_highways(10**5)
    ratio, checked, _ = separation_audit(segs)
    assert checked > 0
    assert ratio >= 1 - 1e-6
    assert same_line_gaps(segs) >= 1 - 1e-9
    assert collision_audit(segs) == 0


def test_assemble_examples():
    params = LevelParams((3,), 243)
    empty = LeveledSegments(params, Rect(0, 0, 9, 9), [], [], [], [], [])
    h, v = assemble_weights(empty).block(Rect(0, 0, 9, 9))
    assert (h == OFF_HIGHWAY).all() and (v == OFF_HIGHWAY).all()
    one = LeveledSegments(params, Rect(-5, -5, 5, 5), [0], [0], [0], [-5.0], [5.0])
    w = assemble_weights(one)
    h, v = w.block(w.window)
    assert (h[:, 5] == 1.0).all()
    assert (np.delete(h, 5, axis=1) == 2.0).all()
    assert (v == 2.0).all()


def test_collision_is_hard_error():
    params = LevelParams((3,), 243)
    segs = LeveledSegments(params, Rect(-5, -5, 5, 5), [0, 0], [0, 0], [0, 0], [-5.0, -1.0], [0.0, 5.0])
    with pytest.raises(HighwayCollision):
        assemble_weights(segs).block(Rect(-5, -5, 5, 5))


def test_same_highway_pairs_within_one():
    segs, w = build_highways(10**4)
    r = int(np.argmax(np.hypot(segs.x1 - segs.x0, segs.y1 - segs.y0)))
    cells = raster_cells(*segs.endpoints(r))
    rng = np.random.default_rng(3)
    src = tuple(int(c) for c in cells[0])
    tg = [tuple(int(c) for c in cells[i]) for i in rng.choice(np.arange(1, len(cells)), 10, replace=False)]
    d = certified_distances(w, src, tg, math.sqrt(2) / 2)
    for t, dt in zip(tg, d):
        assert abs(dt - math.dist(src, t)) <= 1.0


def test_verify_lower_bound_n1e4():
    segs, w = build_highways(10**4)
    pairs = sample_pairs(segs, w.window, 60, 800, seed=2)
    rep = verify_guarantees(w, pairs, segs.params)
    assert rep.violations == 0
    assert rep.fitted_constant() < 20


def test_ring_tiles_layout():
    tiles = ring_tiles(9000)
    assert len(tiles) == 17
    assert [s for _, s, _ in tiles] == [1000] + [1000] * 8 + [3000] * 8
    total = sum(t.size for t, _, _ in tiles)
    assert total == 9000 * 9000


def test_ring_boundary_and_interior():
    R = ring_tiling_weights(9000)
    # central tile is [-500, 499]^2
    assert R.weight(EdgeKey.between((499, 10), (499, 11))) == 2.0
    assert R.weight(EdgeKey.between((499, 10), (500, 10))) == 2.0
    assert R.weight(EdgeKey.between((-500, 0), (-500, 1))) == 2.0
    # a 3000 tile agrees with the standalone 3000 construction
    tile = Rect(-4500, -4500, -1501, -1501)
    assert R.tile_of((-4000, -4000))[0] == tile
    _, ref = build_highways(window=Rect(1, 1, 2998, 2998), params=build_level_params(3000))
    local = Rect(1200, 700, 1500, 1000)
    h1, v1 = R.block(Rect(local.x0 + tile.x0, local.y0 + tile.y0, local.x1 + tile.x0, local.y1 + tile.y0))
    h2, v2 = ref.block(local)
    assert np.array_equal(h1, h2) and np.array_equal(v1, v2)
    assert (h1 < 2).any()


def test_ring_extent_limits():
    with pytest.raises(ValueError):
        ring_tiling_weights(5000)
    with pytest.raises(ValueError):
        ring_tiling_weights(1000 * 3**7)
