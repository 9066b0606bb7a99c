"""Build the highway weighting for n = 10^4 and check dist_W >= |u - v| - 1 on random pairs."""
import math

from gridmetric.highway import build_highways, sample_pairs, verify_guarantees

segs, weights = build_highways(10**4)
print(f"levels {segs.params.levels}, {len(segs)} trimmed segments")

pairs = sample_pairs(segs, weights.window, 100, 800, seed=1)
rep = verify_guarantees(weights, pairs, segs.params, strict=False)
errs = [r[6] for r in rep.rows]
print(f"{len(rep.rows)} pairs, {rep.violations} lower-bound violations")
print(f"additive error: min {min(errs):.3f}, max {max(errs):.3f}")
print(f"fitted C = {rep.fitted_constant():.3f}")
worst = max(rep.rows, key=lambda r: r[6])
print(f"worst pair {worst[:2]} -> {worst[2:4]}, |u-v| = {worst[4]:.1f}, dist = {worst[5]:.1f}")
print(f"stretch of worst pair {worst[5] / worst[4]:.4f}; sqrt2 for comparison {math.sqrt(2):.4f}")
