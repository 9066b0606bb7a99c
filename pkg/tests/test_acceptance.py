"""Acceptance suite: one PASS/FAIL line per criterion, printed to the terminal.

Slow (several minutes in total) but part of the default run.
"""
import json
import math
from fractions import Fraction as Fr
from itertools import combinations
from pathlib import Path

import numpy as np
import pytest

from gridmetric.cli import main as cli_main
from gridmetric.distributions import D2, D3, ContinuousDistribution, KPointDistribution, sample_weight_grid
from gridmetric.grid import Rect, distance_field, monodist
from gridmetric.highway import (build_highways, build_level_params, collision_audit, ring_tiling_weights,
                                sample_pairs, separation_audit, trim_lines, verify_guarantees)
from gridmetric.highway.verify import additive_scale, network_upper_bound, random_highway_discrepancy
from gridmetric.percolation import (directional_stretch, empirical_ball, ball_threshold, find_eps_star,
                                    fit_p, mono_ball_convexity, mono_directional)
from gridmetric.pinwheel import (PinwheelTriangle, angles_of_descendants, audit_embedding,
                                 build_pinwheel_graph, embed_into_grid, measure_stretch, progression,
                                 stretch_pairs, subdivide)

from test_grid import bellman_ford, monotone_brute, random_dense
from test_pinwheel import interior_disjoint, tri_area

pytestmark = pytest.mark.slow

BASELINE = Path(__file__).with_name("acceptance_baseline.json")


@pytest.fixture
def verdict(capsys):
    def report(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} [{label}] {detail}"
        with capsys.disabled():
            print("\n" + line)
        assert ok, line
    return report


def test_c01_highway_exactness(verdict):
    worst, edges = random_highway_discrepancy(1000, 10_000, seed=0)
    verdict("1 highway exactness", worst <= 1.0 and edges >= 9_999,
            f"worst |path - euclid| = {worst:.5f} (<= 1) over 1000 lines, longest {edges} edges")


def _ring_pairs(R, per_tile, max_sep):
    pairs = []
    for i, (tile, side, _) in enumerate(R.tiles):
        segs = R.tile_weights(side).segments
        win = Rect(R.window.x0 - tile.x0, R.window.y0 - tile.y0, R.window.x1 - tile.x0, R.window.y1 - tile.y0)
        for u, v in sample_pairs(segs, win, per_tile, max_sep, seed=100 + i, per_source=10):
            pairs.append(((u[0] + tile.x0, u[1] + tile.y0), (v[0] + tile.x0, v[1] + tile.y0)))
    return pairs


def test_c02_lower_bound(verdict):
    results = []
    for n in (10**4, 10**5):
        segs, w = build_highways(n)
        pairs = sample_pairs(segs, w.window, 500, 1000, seed=11)
        rep = verify_guarantees(w, pairs, segs.params, strict=False)
        results.append((f"n={n}", rep.violations, len(rep.rows), min(r[6] for r in rep.rows)))
    R = ring_tiling_weights(9000)
    pairs = _ring_pairs(R, 30, 1000)[:500]
    rep = verify_guarantees(R, pairs, build_level_params(3000), strict=False)
    results.append(("ring 9000", rep.violations, len(rep.rows), min(r[6] for r in rep.rows)))
    ok = all(v == 0 and m == 500 for _, v, m, _ in results)
    verdict("2 lower bound", ok, "; ".join(f"{name}: {v} violations / {m} pairs, min dist-euclid {e:.3f}"
                                            for name, v, m, e in results))


def test_c03_per_level_stretch(verdict):
    segs, _ = build_highways(10**6)
    assert segs.params.levels == (15,)
    rng = np.random.default_rng(3)
    cs = []
    for d in (10**4, 10**5):
        for _ in range(50):
            while True:
                u = rng.uniform(0, 10**6, 2)
                a = rng.uniform(0, 2 * math.pi)
                v = u + d * np.array([math.cos(a), math.sin(a)])
                if (v >= 0).all() and (v <= 10**6 - 1).all():
                    break
            u, v = tuple(int(x) for x in np.rint(u)), tuple(int(x) for x in np.rint(v))
            e = math.dist(u, v)
            cs.append((network_upper_bound(segs, u, v) - e) / additive_scale(segs.params, e))
    C = max(cs)
    base = json.loads(BASELINE.read_text())["per_level_C"]
    verdict("3 per-level stretch", C <= 20,
            f"fitted C = {C:.4f} (<= 20; baseline {base:.4f}) over {len(cs)} pairs at d in {{1e4, 1e5}}")


def test_c04_separation(verdict):
    out = []
    for params, win in [(build_level_params(10**5), Rect(0, 0, 10**5 - 1, 10**5 - 1)),
                        (build_level_params(10**10), Rect(0, 0, 29_999, 29_999))]:
        segs = trim_lines(params, win)
        ratio, checked, _ = separation_audit(segs)
        out.append((params.levels, ratio, checked, collision_audit(segs)))
    ok = all(r >= 1 - 1e-6 and c > 0 and col == 0 for _, r, c, col in out)
    verdict("4 separation", ok, "; ".join(f"levels {lv}: min dist/k = {r:.12f} over {c} pairs, "
                                          f"{col} collisions" for lv, r, c, col in out))


def test_c05_pinwheel(verdict):
    rng = np.random.default_rng(5)
    exact_ok, float_err = True, 0.0
    for _ in range(50):
        a = (Fr(int(rng.integers(-50, 50)), 7), Fr(int(rng.integers(-50, 50)), 3))
        s = (Fr(int(rng.integers(-9, 10))), Fr(int(rng.integers(-9, 10))))
        if s == (0, 0):
            s = (Fr(1), Fr(0))
        t = PinwheelTriangle((a, (a[0] + s[0], a[1] + s[1]), (a[0] - 2 * s[1], a[1] + 2 * s[0])))
        kids = subdivide(t)
        exact_ok &= sum(tri_area(k.vertices) for k in kids) == tri_area(t.vertices)
        exact_ok &= all(interior_disjoint(p.vertices, q.vertices) for p, q in combinations(kids, 2))
        exact_ok &= all(t.contains(p) for k in kids for p in k.vertices)
        tf = PinwheelTriangle(tuple(tuple(float(c) + 0.1 for c in p) for p in t.vertices))
        float_err = max(float_err, abs(sum(float(k.area) for k in subdivide(tf)) - float(tf.area)) / float(tf.area))
    miss = 0
    for t in (PinwheelTriangle.seed(1), PinwheelTriangle(((0, 0), (1, 0), (0, 2)))):
        for k in range(6):
            ang = angles_of_descendants(t, k)
            for target in progression(t.hypotenuse_angle, k):
                d = np.abs(np.mod(ang - target + math.pi, 2 * math.pi) - math.pi)
                miss += d.min() > 1e-9
    ok = exact_ok and float_err <= 1e-12 and miss == 0
    verdict("5 pinwheel", ok, f"exact partition {exact_ok}, float area error {float_err:.1e}, "
                              f"missing progression angles for k <= 5: {miss}")


def test_c06_embedding(verdict):
    win = Rect(0, 0, 1999, 1999)
    emb = embed_into_grid(build_pinwheel_graph(win, 25))
    rep = audit_embedding(emb)
    sr = measure_stretch(emb.weights, stretch_pairs(win, sources=10, per_source=30, seed=0))
    inv = sr.inversions()
    ok = (rep["ok"] and rep["max_sum_error"] <= 1e-9 and rep["max_subpath_error"] <= 2
          and 0.6 <= rep["interior_min"] and rep["interior_max"] <= 1.05 and rep["max_prefix"] <= 2
          and rep["off_path_ok"] and inv <= 1 and sr.unreachable == 0)
    verdict("6 embedding", ok,
            f"{rep['paths']} paths, sum error {rep['max_sum_error']:.1e}, subpath {rep['max_subpath_error']:.3f}, "
            f"interior [{rep['interior_min']:.4f}, {rep['interior_max']:.4f}], prefix {rep['max_prefix']}, "
            f"stretch bin inversions {inv}")


@pytest.mark.parametrize("name,law,target", [("D2", D2, 1.00750), ("D3", D3, 1.00622)])
def test_c07_fpp_reproduction(verdict, name, law, target):
    prof = directional_stretch(law, 2000, angle_count=33, trials=20, seed=0, margin=0.3)
    s = prof.max_stretch()
    verdict(f"7 FPP {name}", abs(s - target) <= 0.02, f"max normalised stretch {s:.5f} (target {target} +- 0.02)")


@pytest.mark.parametrize("name,law,p_ref,err_ref", [
    ("Uniform(0,1)", ContinuousDistribution.uniform(0, 1), 1.87361, 0.00462),
    ("Gamma(2,2)", ContinuousDistribution.gamma(2, 2), 1.85691, 0.00986),
    ("Gamma(10,10)", ContinuousDistribution.gamma(10, 10), 1.32879, 0.03658),
])
def test_c08_lp_table(verdict, name, law, p_ref, err_ref):
    ball = empirical_ball(law, ball_threshold(law, 2500), seed=0)
    p, err = fit_p(ball)
    ok = abs(p - p_ref) <= 0.05 and err <= err_ref + 0.015
    verdict(f"8 L_p {name}", ok, f"p* = {p:.4f} (ref {p_ref} +- 0.05), Err* = {err:.5f} (<= {err_ref + 0.015:.5f})")


def test_c09_monotone(verdict):
    law = KPointDistribution.two_sided(0.5)  # dyadic weights: sums are exact in any order
    checked = mismatch = 0
    for seed in range(100):
        for W in range(1, 6):
            for H in range(1, 6):
                if W * H < 2:
                    continue
                w = sample_weight_grid(law, Rect(0, 0, W - 1, H - 1), seed)
                for u in ((0, 0), (W - 1, H - 1), (0, H - 1)):
                    for v in ((x, y) for x in range(W) for y in range(H)):
                        mismatch += monodist(w, u, v) != monotone_brute(w, u, v)
                        checked += 1
    mu0 = mono_directional(KPointDistribution.two_sided(0.0), 1000, trials=10).mu45
    mu1 = mono_directional(KPointDistribution.two_sided(1.0), 1000, trials=10).mu45
    eps = find_eps_star(1000).eps
    rep = mono_ball_convexity(eps, 1000)
    ok = mismatch == 0 and mu0 >= 1.4 and mu1 <= 0.8 and rep["violation"] > 3 * rep["noise"]
    verdict("9 monotone", ok, f"DP vs enumeration {mismatch} mismatches / {checked}; mu45(0) = {mu0:.4f}, "
                              f"mu45(1) = {mu1:.4f}; eps* = {eps:.5f}, convexity violation "
                              f"{rep['violation']:.2f} vs 3 x noise {3 * rep['noise']:.2f}")


def test_c10_oracles_and_replay(verdict, tmp_path):
    rng = np.random.default_rng(2024)
    bad = 0
    for trial in range(500):
        W, H = (int(x) for x in rng.integers(1, 9, 2))
        W = 2 if W * H < 2 else W
        w = random_dense(rng, W, H, with_inf=trial % 5 == 0)
        src = (int(rng.integers(w.window.x0, w.window.x1 + 1)), int(rng.integers(w.window.y0, w.window.y1 + 1)))
        field = distance_field(w, src)
        bad += sum(field[p] != dp for p, dp in bellman_ford(w, src).items())
    replays = []
    for argv in (["fpp-profile", "--n", "150", "--trials", "3", "--angles", "5"],
                 ["highway-build", "--n", "3000"],
                 ["pinwheel-build", "--window", "120"]):
        a, b = tmp_path / f"{argv[0]}-a", tmp_path / f"{argv[0]}-b"
        assert cli_main([*argv, "--out", str(a)]) == 0
        code = cli_main(["replay", str(a / "manifest.json"), "--out", str(b)])
        man = json.loads((a / "manifest.json").read_text())
        same = all((a / f).read_bytes() == (b / f).read_bytes() for f in man["outputs"])
        replays.append((argv[0], code == 0 and same))
    ok = bad == 0 and all(r for _, r in replays)
    verdict("10 oracles and replay", ok, f"Dijkstra vs Bellman-Ford mismatches {bad} on 500 grids; "
                                         + ", ".join(f"{n} replay {'identical' if r else 'DIFFERS'}"
                                                     for n, r in replays))
