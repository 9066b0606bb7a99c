"""Directional stretch of the two- and three-point laws, and L_p fits of continuous laws."""
from gridmetric.distributions import D2, D3, ContinuousDistribution
from gridmetric.percolation import ball_threshold, directional_stretch, empirical_ball, fit_p

for name, law in (("D2", D2), ("D3", D3)):
    prof = directional_stretch(law, 600, angle_count=17, trials=6, seed=0)
    print(f"{name}: mu0 {prof.mu0():.4f}  mu45 {prof.mu45():.4f}  max stretch {prof.max_stretch():.5f}")

for name, law in (("uniform(0,1)", ContinuousDistribution.uniform(0, 1)),
                  ("gamma(2,2)", ContinuousDistribution.gamma(2, 2)),
                  ("gamma(10,10)", ContinuousDistribution.gamma(10, 10))):
    ball = empirical_ball(law, ball_threshold(law, 600), seed=0)
    p, err = fit_p(ball)
    print(f"{name:13s} p* = {p:.3f}  Err = {err:.4f}  ({len(ball.frontier)} frontier points)")
