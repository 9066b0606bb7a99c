"""First-passage percolation experiments on i.i.d. weighted grids.

Directional time constants, empirical distance balls, L_p fits of the ball
and the monotone-path (monodist) experiments.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.spatial import ConvexHull

from .distributions import KPointDistribution, sample_weight_grid
from .grid import Rect, Unreachable, _dijkstra, _monotone_dp, monotone_field


def _map(fn, items, workers):
    if workers is None or workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(workers) as ex:
        return list(ex.map(fn, items))


def angle_grid(count: int = 33) -> np.ndarray:
    """``count`` uniform angles covering [0, pi/2] inclusive."""
    if count < 2:
        raise ValueError("need at least two angles")
    return np.linspace(0.0, math.pi / 2, count)


def direction_target(n: int, theta: float) -> tuple[int, int]:
    """Integer point nearest to ``n * e_theta`` (ties to even)."""
    return int(np.rint(n * math.cos(theta))), int(np.rint(n * math.sin(theta)))


# --------------------------------------------------------------------------
# directional profile


@dataclass
class DirectionalProfile:
    n: int
    angles: np.ndarray
    samples: np.ndarray  # (trials, angles): dist / |target|_2
    seed: int
    law: str = ""
    margin: float = 0.3

    @property
    def trials(self) -> int:
        return self.samples.shape[0]

    @property
    def mu(self) -> np.ndarray:
        return self.samples.mean(axis=0)

    @property
    def stderr(self) -> np.ndarray:
        if self.trials < 2:
            return np.full(len(self.angles), np.nan)
        return self.samples.std(axis=0, ddof=1) / math.sqrt(self.trials)

    def _at(self, theta):
        k = np.flatnonzero(np.isclose(self.angles, theta, atol=1e-12))
        if not len(k):
            raise ValueError(f"profile has no sample at angle {theta}")
        return self.mu[k[0]]

    def mu0(self) -> float:
        return float(self._at(0.0))

    def mu45(self) -> float:
        return float(self._at(math.pi / 4))

    def normalized(self) -> np.ndarray:
        """Profile divided by the geometric mean of the 0 and 45 degree values."""
        return self.mu / math.sqrt(self.mu0() * self.mu45())

    def max_deviation(self) -> float:
        return float(np.max(np.abs(self.normalized() - 1.0)))

    def max_stretch(self) -> float:
        """``1 + max |normalized - 1|`` over the angle grid."""
        return 1.0 + self.max_deviation()

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["theta", "mu_mean", "mu_stderr", "trials"])
            for th, m, s in zip(self.angles.tolist(), self.mu.tolist(), self.stderr.tolist()):
                w.writerow([repr(th), repr(m), repr(s), self.trials])


def _profile_trial(law, n, angles, seed, trial, margin):
    targets = [direction_target(n, th) for th in angles]
    region = Rect.around([(0, 0), *targets], margin * n)
    g = sample_weight_grid(law, region, seed, "fpp", trial)
    h, v = g.block(region)
    idx = np.array([region.index(t) for t in targets], dtype=np.int64)
    dist, _ = _dijkstra(h, v, region.index((0, 0)), idx, math.inf)
    d = dist[idx]
    if not np.isfinite(d).all():
        bad = [targets[k] for k in np.flatnonzero(~np.isfinite(d))]
        raise Unreachable(f"targets {bad} unreachable in trial {trial}")
    return d / np.hypot(*np.asarray(targets, dtype=float).T)


def directional_stretch(law, n: int, angle_count: int = 33, trials: int = 20, seed: int = 0,
                        margin: float = 0.3, angles=None, workers: int = 1) -> DirectionalProfile:
    """Mean ``dist(0, round(n e_theta)) / |round(n e_theta)|`` per angle.

    One Dijkstra per trial covers all angles: its region is the bounding box
    of the origin and every target, dilated by ``margin * n``.
    """
    if n < 1 or trials < 1:
        raise ValueError("need n >= 1 and trials >= 1")
    angles = angle_grid(angle_count) if angles is None else np.asarray(angles, dtype=float)
    rows = _map(lambda t: _profile_trial(law, n, angles, seed, t, margin), range(trials), workers)
    return DirectionalProfile(n, angles, np.vstack(rows), seed, law.label(), margin)


# --------------------------------------------------------------------------
# empirical balls and L_p fits


@dataclass
class EmpiricalBall:
    n: float
    frontier: np.ndarray  # (m, 2) int64
    u0: tuple[int, int]
    region: Rect | None = None

    def radii(self) -> np.ndarray:
        return np.hypot(self.frontier[:, 0], self.frontier[:, 1])

    def anisotropy(self) -> float:
        """max / min frontier radius."""
        r = self.radii()
        return float(r.max() / r.min())

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y"])
            w.writerows(self.frontier.tolist())


def ball_from_field(dist: np.ndarray, pred: np.ndarray, region: Rect, n: float) -> EmpiricalBall:
    """Frontier of a distance field: ``dist >= n`` while the tree parent is below ``n``."""
    W, H = region.width, region.height
    dist = dist.reshape(W, H)
    pred = pred.reshape(W, H)
    pd = np.full((W, H), np.inf)
    pd[1:, :] = np.where(pred[1:, :] == 1, dist[:-1, :], pd[1:, :])
    pd[:-1, :] = np.where(pred[:-1, :] == 2, dist[1:, :], pd[:-1, :])
    pd[:, 1:] = np.where(pred[:, 1:] == 3, dist[:, :-1], pd[:, 1:])
    pd[:, :-1] = np.where(pred[:, :-1] == 4, dist[:, 1:], pd[:, :-1])
    ii, jj = np.nonzero(np.isfinite(dist) & (dist >= n) & (pd < n))
    frontier = np.column_stack([ii + region.x0, jj + region.y0]).astype(np.int64)
    if not len(frontier):
        raise ValueError("empty frontier")
    on_axis = frontier[(frontier[:, 1] == 0) & (frontier[:, 0] > 0)]
    if len(on_axis):
        u0 = (int(on_axis[:, 0].min()), 0)
    else:
        # the tree can jump the axis; fall back to the first axis vertex at distance >= n
        row = dist[1 - region.x0:, -region.y0]
        hit = np.flatnonzero(row >= n)
        if not len(hit):
            raise ValueError("ball does not close on the positive x-axis")
        u0 = (int(1 + hit[0]), 0)
    return EmpiricalBall(n, frontier, u0, region)


def _pilot_mu(law, seed, r=100) -> float:
    targets = [(r, 0), direction_target(r, math.pi / 4)]
    region = Rect.around([(0, 0), *targets], 0.5 * r)
    g = sample_weight_grid(law, region, seed, "ball-pilot")
    h, v = g.block(region)
    idx = np.array([region.index(t) for t in targets], dtype=np.int64)
    dist, _ = _dijkstra(h, v, region.index((0, 0)), idx, math.inf)
    return float(min(dist[idx[0]] / r, dist[idx[1]] / math.hypot(*targets[1])))


def ball_threshold(law, radius: float, seed: int = 0) -> float:
    """Distance threshold whose ball has roughly the given Euclidean radius."""
    return radius * _pilot_mu(law, seed, 200)


def empirical_ball(law, n: float, seed: int = 0, region_scale: float = 1.25,
                   max_cells: int = 40_000_000) -> EmpiricalBall:
    """Distance-``n`` frontier of one sampled grid around the origin.

    The search square has half-side ``region_scale * n / mu`` with ``mu`` a
    small-radius pilot estimate; it grows until the ball stays off its border.
    """
    half = int(math.ceil(region_scale * n / _pilot_mu(law, seed)))
    while True:
        region = Rect(-half, -half, half, half)
        if region.size > max_cells:
            raise MemoryError(f"ball region {region} exceeds {max_cells} cells")
        g = sample_weight_grid(law, region, seed, "ball")
        h, v = g.block(region)
        # every vertex whose final parent lies inside the ball settles below n + max weight
        wmax = max(h.max(), v.max())
        dist, pred = _dijkstra(h, v, region.index((0, 0)), np.empty(0, np.int64), n + wmax)
        d2 = dist.reshape(region.width, region.height)
        border = np.concatenate([d2[0], d2[-1], d2[:, 0], d2[:, -1]])
        if not (border < n).any():
            return ball_from_field(dist, pred, region, n)
        half = int(math.ceil(half * 1.25))


def lp_radius(theta, p: float):
    """Radius of the unit L_p ball in direction ``theta``."""
    c, s = np.abs(np.cos(theta)), np.abs(np.sin(theta))
    return (c**p + s**p) ** (-1.0 / p)


def err_lp(ball: EmpiricalBall, p: float) -> float:
    """Max over the frontier of | |u|/|u0| - L_p radius at angle(u) |."""
    if p < 1:
        raise ValueError("p must be at least 1")
    f = ball.frontier.astype(float)
    if not len(f):
        raise ValueError("empty frontier")
    r = np.hypot(f[:, 0], f[:, 1]) / math.hypot(*ball.u0)
    theta = np.arctan2(f[:, 1], f[:, 0])
    return float(np.max(np.abs(r - lp_radius(theta, p))))


def err_scan(ball: EmpiricalBall, ps) -> np.ndarray:
    return np.array([err_lp(ball, p) for p in ps])


def fit_p(ball: EmpiricalBall, lo: float = 1.0, hi: float = 3.0, xatol: float = 1e-3):
    """``(p*, Err(p*))``: coarse scan, then bounded Brent refinement."""
    ps = np.linspace(lo, hi, 201)
    errs = err_scan(ball, ps)
    k = int(np.argmin(errs))
    a, b = ps[max(k - 1, 0)], ps[min(k + 1, len(ps) - 1)]
    res = minimize_scalar(lambda p: err_lp(ball, p), bounds=(a, b), method="bounded",
                          options={"xatol": xatol})
    if res.fun <= errs[k]:
        return float(res.x), float(res.fun)
    return float(ps[k]), float(errs[k])


# --------------------------------------------------------------------------
# monotone-path experiments


@dataclass
class MonoEstimate:
    mu0: float
    mu45: float
    stderr0: float
    stderr45: float
    trials: int


def mono_directional(law, n: int, trials: int = 20, seed: int = 0, workers: int = 1) -> MonoEstimate:
    """Straight-path weight per unit length along the x-axis and the 45 degree monodist stretch."""
    m = direction_target(n, math.pi / 4)[0]

    def one(trial):
        region = Rect(0, 0, max(n, m), m)
        g = sample_weight_grid(law, region, seed, "mono", trial)
        h, v = g.block(region)
        mu0 = h[:n, 0].sum() / n
        dp = _monotone_dp(np.ascontiguousarray(h[:m, :]), np.ascontiguousarray(v[:m + 1, :]))
        return mu0, dp[m, m] / math.hypot(m, m)

    rows = np.array(_map(one, range(trials), workers))
    se = rows.std(axis=0, ddof=1) / math.sqrt(trials) if trials > 1 else np.array([np.nan, np.nan])
    return MonoEstimate(float(rows[:, 0].mean()), float(rows[:, 1].mean()),
                        float(se[0]), float(se[1]), trials)


@dataclass
class EpsSearch:
    eps: float
    mu45: float
    history: list = field(default_factory=list)  # (lo, hi, mid, mu45(mid))


def find_eps_star(n: int = 1000, trials: int = 10, seed: int = 0, tol: float = 0.005,
                  max_iter: int = 60, workers: int = 1) -> EpsSearch:
    """Bisection for ``mu45_mono(D[eps]) = 1`` on [0, 1].

    Every evaluation reuses the same seed, so the per-edge signs are shared
    across ``eps`` and the estimate is a deterministic function of ``eps``.
    """
    def f(eps):
        return mono_directional(KPointDistribution.two_sided(eps), n, trials, seed, workers).mu45

    lo, hi = 0.0, 1.0
    flo, fhi = f(lo), f(hi)
    if not (flo > 1.0 > fhi):
        raise ValueError(f"no bracket: mu45(0) = {flo}, mu45(1) = {fhi}")
    history = [(lo, hi, lo, flo), (lo, hi, hi, fhi)]
    mid, fm = lo, flo
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        history.append((lo, hi, mid, fm))
        if abs(fm - 1.0) <= tol:
            break
        if fm > 1.0:
            lo = mid
        else:
            hi = mid
    return EpsSearch(mid, fm, history)


def mono_ball(law, n: float, seed: int = 0, half: int | None = None):
    """Boolean mask of ``{u : monodist(0, u) <= n}`` over ``[-half, half]^2``.

    Each quadrant is one monotone DP from the origin over the same weights.
    """
    half = int(math.ceil(1.6 * n)) if half is None else int(half)
    region = Rect(-half, -half, half, half)
    g = sample_weight_grid(law, region, seed, "mono-ball")
    inside = np.zeros((region.width, region.height), bool)
    for sx in (1, -1):
        for sy in (1, -1):
            fld = monotone_field(g, (0, 0), (sx * half, sy * half)) <= n
            xs = slice(half, None) if sx > 0 else slice(None, half + 1)
            ys = slice(half, None) if sy > 0 else slice(None, half + 1)
            block = fld if (sx > 0 and sy > 0) else fld[::sx, ::sy]
            inside[xs, ys] |= block
    return region, inside


def convexity_violation(region: Rect, inside: np.ndarray, bins: int = 720):
    """Depth of the deepest lattice point inside the ball's convex hull but outside the ball.

    The lattice points of a convex set leave no such point, so any positive
    depth is a dent.  Returns ``(violation, angles, r_ball, r_hull)``; the
    radial profiles (max ball radius per angle bin, hull radius at the bin
    centre) are for plotting.
    """
    ii, jj = np.nonzero(inside)
    pts = np.column_stack([ii + region.x0, jj + region.y0]).astype(float)
    hull = ConvexHull(pts)
    a, b = hull.equations[:, :2], hull.equations[:, 2]  # unit outward normals

    def hull_radius(angles):
        d = np.column_stack([np.cos(angles), np.sin(angles)])
        ad = d @ a.T
        with np.errstate(divide="ignore"):
            t = np.where(ad > 1e-15, -b / ad, np.inf)
        return t.min(axis=1)

    # prune with a fine radial profile of the hull, then test candidates exactly
    fine = np.linspace(-math.pi, math.pi, 16 * bins + 1)
    r_fine = hull_radius(fine)
    oi, oj = np.nonzero(~inside)
    ox, oy = (oi + region.x0).astype(float), (oj + region.y0).astype(float)
    near = np.hypot(ox, oy) <= np.interp(np.arctan2(oy, ox), fine, r_fine) + 1.0
    cand = np.column_stack([ox[near], oy[near]])
    viol = 0.0
    for chunk in np.array_split(cand, max(1, len(cand) // 20000)):
        if not len(chunk):
            continue
        depth = -(chunk @ a.T + b).max(axis=1)
        if depth.size:
            viol = max(viol, float(depth.max()))

    theta = np.arctan2(pts[:, 1], pts[:, 0])
    r = np.hypot(pts[:, 0], pts[:, 1])
    edges = np.linspace(-math.pi, math.pi, bins + 1)
    k = np.clip(np.digitize(theta, edges) - 1, 0, bins - 1)
    r_ball = np.zeros(bins)
    np.maximum.at(r_ball, k, r)
    r_ball[np.bincount(k, minlength=bins) == 0] = np.nan
    centers = 0.5 * (edges[1:] + edges[:-1])
    return viol, centers, r_ball, hull_radius(centers)


def mono_ball_convexity(eps: float, n: float = 1000, seed: int = 0, bins: int = 720) -> dict:
    """Convexity test of the monodist ball of ``D[eps]``.

    Lattice discretisation alone leaves dents up to about sqrt(2); the report
    compares the measured dent depth against that noise level.
    """
    law = KPointDistribution.two_sided(eps)
    region, inside = mono_ball(law, n, seed)
    viol, centers, r_ball, r_hull = convexity_violation(region, inside, bins)
    noise = math.sqrt(2.0)
    # radial extent along the positive axis and the diagonal, normalised by n
    half = -region.x0
    ax = np.flatnonzero(inside[half:, half])
    diag = np.flatnonzero(np.diagonal(inside[half:, half:]))
    return {
        "eps": eps,
        "n": n,
        "violation": viol,
        "noise": noise,
        "convex": bool(viol <= 3 * noise),
        "r0": float(ax.max()) / n if len(ax) else 0.0,
        "r45": float(diag.max()) * math.sqrt(2) / n if len(diag) else 0.0,
        "angles": centers,
        "r_ball": r_ball,
        "r_hull": r_hull,
    }
