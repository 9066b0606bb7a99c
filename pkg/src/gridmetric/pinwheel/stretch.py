"""Empirical stretch of a weighted grid over random point pairs."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from ..grid import Rect, WeightGrid, distance_field


@dataclass
class StretchReport:
    rows: list          # (ux, uy, vx, vy, euclid, dist, stretch, reachable)
    bins: np.ndarray    # bin edges in Euclidean distance

    def table(self):
        """``(d_lo, d_hi, max_stretch, mean_stretch, count)`` per non-empty bin."""
        d = np.array([r[4] for r in self.rows])
        s = np.array([r[6] for r in self.rows])
        ok = np.array([r[7] for r in self.rows], bool)
        out = []
        for lo, hi in zip(self.bins[:-1], self.bins[1:]):
            m = ok & (d >= lo) & (d < hi)
            if m.any():
                out.append((float(lo), float(hi), float(s[m].max()), float(s[m].mean()), int(m.sum())))
        return out

    def inversions(self) -> int:
        """Number of bins whose max stretch exceeds the previous bin's."""
        mx = [t[2] for t in self.table()]
        return sum(1 for a, b in zip(mx[:-1], mx[1:]) if b > a)

    def lower_bound_gap(self) -> float:
        """min over reachable pairs of dist - |u - v| (a large negative value breaks the lower bound)."""
        return min((r[5] - r[4] for r in self.rows if r[7]), default=math.inf)

    @property
    def unreachable(self) -> int:
        return sum(1 for r in self.rows if not r[7])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["d_bin", "max_stretch", "mean_stretch", "count"])
            for lo, hi, mx, mean, n in self.table():
                w.writerow([f"{lo:.6g}-{hi:.6g}", repr(mx), repr(mean), n])

    def pairs_to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["ux", "uy", "vx", "vy", "euclid", "dist", "stretch", "reachable"])
            for r in self.rows:
                w.writerow([r[0], r[1], r[2], r[3], repr(r[4]), repr(r[5]), repr(r[6]), int(r[7])])


def stretch_pairs(window: Rect, sources: int = 10, per_source: int = 20, d_min: float = 5.0,
                  d_max: float | None = None, seed: int = 0):
    """Random pairs inside ``window``; distances are log-uniform in ``[d_min, d_max]``."""
    rng = np.random.default_rng(seed)
    if d_max is None:
        d_max = 0.7 * min(window.width, window.height)
    pairs = []
    for _ in range(sources):
        u = (int(rng.integers(window.x0, window.x1 + 1)), int(rng.integers(window.y0, window.y1 + 1)))
        got = 0
        while got < per_source:
            r = math.exp(rng.uniform(math.log(d_min), math.log(d_max)))
            a = rng.uniform(0, 2 * math.pi)
            v = (int(round(u[0] + r * math.cos(a))), int(round(u[1] + r * math.sin(a))))
            if window.contains(v) and v != u:
                pairs.append((u, v))
                got += 1
    return pairs


def default_bins(pairs, count: int = 8) -> np.ndarray:
    d = [math.dist(u, v) for u, v in pairs]
    lo, hi = max(min(d), 1.0), max(d)
    return np.geomspace(lo, hi * (1 + 1e-9), count + 1)


def measure_stretch(weights: WeightGrid, pairs, bins=None) -> StretchReport:
    """Exact ``dist_w(u, v) / |u - v|`` per pair, one Dijkstra over the window per source."""
    by_src: dict = {}
    for u, v in pairs:
        by_src.setdefault(tuple(map(int, u)), []).append(tuple(map(int, v)))
    rows = []
    for u, targets in by_src.items():
        field = distance_field(weights, u, targets=targets)
        for v in targets:
            e = math.dist(u, v)
            d = field[v]
            ok = math.isfinite(d)
            rows.append((u[0], u[1], v[0], v[1], e, d, d / e if ok else math.inf, ok))
    bins = default_bins(pairs) if bins is None else np.asarray(bins, float)
    return StretchReport(rows, bins)
