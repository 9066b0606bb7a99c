import math

import numpy as np
import pytest

from gridmetric.distributions import D2, ContinuousDistribution, KPointDistribution, sample_weight_grid
from gridmetric.grid import DenseWeights, Rect, _dijkstra
from gridmetric.percolation import (EmpiricalBall, ball_from_field, convexity_violation,
                                    direction_target, directional_stretch, empirical_ball, err_lp,
                                    err_scan, find_eps_star, fit_p, lp_radius, mono_ball,
                                    mono_ball_convexity, mono_directional)

ONE = KPointDistribution((1.0,), (1.0,))


def test_constant_weight_profile_is_l1():
    prof = directional_stretch(ONE, 200, angle_count=9, trials=1)
    targets = [direction_target(200, th) for th in prof.angles]
    expect = [(abs(x) + abs(y)) / math.hypot(x, y) for x, y in targets]
    assert np.allclose(prof.mu, expect, rtol=0, atol=1e-12)
    assert prof.mu45() == pytest.approx(math.sqrt(2), abs=1e-12)
    # geometric-mean normalisation: 2**(1/4) - 1 at both ends
    assert prof.max_stretch() - 1 == pytest.approx(2 ** 0.25 - 1, abs=1e-12)


def test_profile_deterministic_and_csv(tmp_path):
    a = directional_stretch(D2, 150, angle_count=5, trials=3, seed=4)
    b = directional_stretch(D2, 150, angle_count=5, trials=3, seed=4, workers=2)
    assert np.array_equal(a.samples, b.samples)
    a.to_csv(tmp_path / "p.csv")
    head = (tmp_path / "p.csv").read_text().splitlines()[0]
    assert head == "theta,mu_mean,mu_stderr,trials"


def test_time_constant_below_mean():
    prof = directional_stretch(D2, 300, angle_count=3, trials=4, seed=1)
    assert (prof.samples[:, 0] <= D2.mean()).all()


def test_symmetry_within_three_se():
    prof = directional_stretch(D2, 300, angle_count=9, trials=12, seed=8)
    se = np.hypot(prof.stderr, prof.stderr[::-1])
    assert (np.abs(prof.mu - prof.mu[::-1]) <= 3 * se + 1e-12).all()


def test_ball_of_constant_weights_is_diamond():
    region = Rect(-15, -15, 15, 15)
    w = DenseWeights.constant(region, 1.0)
    h, v = w.block(region)
    dist, pred = _dijkstra(h, v, region.index((0, 0)), np.empty(0, np.int64), math.inf)
    ball = ball_from_field(dist, pred, region, 10)
    l1 = np.abs(ball.frontier).sum(axis=1)
    assert (l1 == 10).all()
    assert len(ball.frontier) == 40
    assert ball.u0 == (10, 0)
    assert err_lp(ball, 1.0) < 1e-12


def test_frontier_predecessor_invariant():
    law = ContinuousDistribution.uniform(0, 1)
    ball = empirical_ball(law, 40.0, seed=3)
    region = ball.region
    g = sample_weight_grid(law, region, 3, "ball")
    h, v = g.block(region)
    dist, pred = _dijkstra(h, v, region.index((0, 0)), np.empty(0, np.int64), math.inf)
    d = dist.reshape(region.width, region.height)
    off = {1: (-1, 0), 2: (1, 0), 3: (0, -1), 4: (0, 1)}
    p = pred.reshape(region.width, region.height)
    for x, y in ball.frontier:
        i, j = x - region.x0, y - region.y0
        assert d[i, j] >= 40.0
        dx, dy = off[int(p[i, j])]
        assert d[i + dx, j + dy] < 40.0


def circle_ball(r, p=2.0):
    th = np.linspace(0, 2 * math.pi, 2000, endpoint=False)
    rad = r * lp_radius(th, p)
    pts = np.unique(np.rint(np.column_stack([rad * np.cos(th), rad * np.sin(th)])).astype(np.int64), axis=0)
    return EmpiricalBall(float(r), pts, (r, 0))


def test_err_lp_exact_shapes():
    ball = circle_ball(500)
    assert err_lp(ball, 2.0) <= 1.0 / 500 + 1e-12
    p, e = fit_p(ball)
    assert abs(p - 2.0) < 0.02
    assert e <= 1.0 / 500 + 1e-12
    dia = circle_ball(500, 1.0)
    assert err_lp(dia, 1.0) <= 1.0 / 500 + 1e-12
    with pytest.raises(ValueError):
        err_lp(ball, 0.5)


def test_err_scan_continuous():
    ball = empirical_ball(ContinuousDistribution.uniform(0, 1), 60.0, seed=1)
    ps = np.linspace(1, 3, 401)
    errs = err_scan(ball, ps)
    assert np.max(np.abs(np.diff(errs))) < 2.0 / math.hypot(*ball.u0)


def test_mono_eps_zero_is_sqrt2():
    est = mono_directional(KPointDistribution.two_sided(0.0), 300, trials=2)
    assert est.mu45 == pytest.approx(math.sqrt(2) * 1.0, abs=1e-12) or abs(est.mu45 - math.sqrt(2)) < 1e-9
    assert est.mu0 == pytest.approx(1.0)


def test_mono_eps_one_myopic_bound():
    n = 400
    est = mono_directional(KPointDistribution.two_sided(1.0), n, trials=3)
    assert est.mu45 <= 1 / math.sqrt(2) + 3 / math.sqrt(n)
    for eps in (0.3, 0.7):
        e = mono_directional(KPointDistribution.two_sided(eps), n, trials=6, seed=2)
        assert abs(e.mu0 - 1.0) <= 3 * e.stderr0 + 1e-12


def test_eps_star_bisection_nested():
    a = find_eps_star(200, trials=2, tol=0.05)
    b = find_eps_star(200, trials=2, tol=0.01)
    assert 0 < a.eps < 1 and 0 < b.eps < 1
    assert abs(b.mu45 - 1) <= 0.01
    # same seed: the finer search retraces the coarse one
    assert b.history[: len(a.history)] == a.history
    for lo, hi, mid, _ in b.history[2:]:
        assert lo <= mid <= hi


def test_constant_mono_ball_convex():
    region, inside = mono_ball(KPointDistribution((1.0,), (1.0,)), 60)
    viol, *_ = convexity_violation(region, inside)
    assert viol == 0.0
    rep = mono_ball_convexity(0.0, 60)
    assert rep["convex"]
    # monodist is the L1 norm here
    assert rep["r0"] == 1.0
    assert rep["r45"] == pytest.approx(1 / math.sqrt(2), abs=0.02)


def test_dent_is_detected():
    region = Rect(-10, -10, 10, 10)
    x, y = np.meshgrid(np.arange(-10, 11), np.arange(-10, 11), indexing="ij")
    inside = (np.abs(x) + np.abs(y) <= 8)
    inside[16, 10] = False  # carve (6, 0) and (7, 0), keep the tip (8, 0)
    inside[17, 10] = False
    viol, *_ = convexity_violation(region, inside)
    # (6, 0) sits 2 / sqrt(2) below the facets x +- y = 8
    assert viol == pytest.approx(math.sqrt(2))
