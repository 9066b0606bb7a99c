"""Layers of lines and their trimming into separated segments.

A line ``(level i, angle index j, offset t)`` is the set of points ``p`` with
``p . nrm = t * k_i**4`` where ``nrm = (-sin th, cos th)``.  It is
parameterised by arc length ``s``: ``p(s) = t k^4 nrm + s (cos th, sin th)``.
All trimming happens in that 1-D parameter.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from ..grid import Rect
from .params import LevelParams


@dataclass(frozen=True)
class LineSpec:
    level: int  # 0-based index into LevelParams.levels
    j: int
    t: int
    k: int

    @property
    def theta(self) -> float:
        return math.pi * self.j / self.k

    @property
    def offset(self) -> float:
        return float(self.t) * float(self.k) ** 4

    def frame(self):
        """``(c, nrm, dir)``: offset, unit normal and unit direction."""
        th = self.theta
        return self.offset, np.array([-math.sin(th), math.cos(th)]), np.array([math.cos(th), math.sin(th)])

    def point(self, s):
        c, nrm, d = self.frame()
        s = np.asarray(s, dtype=float)
        return c * nrm + s[..., None] * d

    def contains(self, p, tol=1e-9) -> bool:
        c, nrm, _ = self.frame()
        return abs(float(np.dot(p, nrm)) - c) <= tol * max(1.0, abs(c))


@dataclass(frozen=True)
class FatRegion:
    """Points within ``radius`` of a segment ``(p0, p1)`` (a hippodrome) or of a line."""

    core: object
    radius: float

    def contains(self, p) -> bool:
        return point_core_distance(p, self.core) <= self.radius


def point_segment_distance(p, a, b) -> float:
    p, a, b = (np.asarray(x, dtype=float) for x in (p, a, b))
    ab = b - a
    L2 = float(ab @ ab)
    u = 0.0 if L2 == 0 else min(1.0, max(0.0, float((p - a) @ ab) / L2))
    return float(np.hypot(*(p - (a + u * ab))))


def point_core_distance(p, core) -> float:
    if isinstance(core, LineSpec):
        c, nrm, _ = core.frame()
        return abs(float(np.dot(p, nrm)) - c)
    a, b = core
    return point_segment_distance(p, a, b)


def segment_distance(a0, a1, b0, b1) -> float:
    """Exact Euclidean distance between two closed segments."""
    a0, a1, b0, b1 = (np.asarray(x, dtype=float) for x in (a0, a1, b0, b1))

    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    o1, o2 = orient(a0, a1, b0), orient(a0, a1, b1)
    o3, o4 = orient(b0, b1, a0), orient(b0, b1, a1)
    if o1 * o2 < 0 and o3 * o4 < 0:
        return 0.0
    return min(point_segment_distance(a0, b0, b1), point_segment_distance(a1, b0, b1),
               point_segment_distance(b0, a0, a1), point_segment_distance(b1, a0, a1))


# --------------------------------------------------------------------------
# 1-D interval helpers


def line_box_interval(c, nrm, d, box):
    """Parameter interval where the line meets the closed box ``(x0, y0, x1, y1)``."""
    lo, hi = -math.inf, math.inf
    base = c * nrm
    for axis, (bmin, bmax) in enumerate(((box[0], box[2]), (box[1], box[3]))):
        if abs(d[axis]) < 1e-15:
            if not bmin <= base[axis] <= bmax:
                return None
            continue
        s0 = (bmin - base[axis]) / d[axis]
        s1 = (bmax - base[axis]) / d[axis]
        lo, hi = max(lo, min(s0, s1)), min(hi, max(s0, s1))
    return (lo, hi) if lo <= hi else None


def merge_intervals(iv):
    iv = sorted(iv)
    out = []
    for a, b in iv:
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return [(a, b) for a, b in out]


def subtract(residual, a, b):
    """Remove the closed interval ``[a, b]`` from a sorted list of intervals."""
    out = []
    for lo, hi in residual:
        if hi < a or lo > b:
            out.append((lo, hi))
            continue
        if lo < a:
            out.append((lo, a))
        if hi > b:
            out.append((b, hi))
    return out


def meets(residual, a, b) -> bool:
    return any(lo <= b and hi >= a for lo, hi in residual)


def hippodrome_interval(c, nrm, d, q0, q1, r):
    """Parameter interval of the line inside ``Fat(segment q0 q1, r)``, or None.

    The distance from a point moving along a line to a convex set is convex,
    so the intersection is one interval: the hull of the two end-disk chords
    and the chord of the middle rectangle.
    """
    lo, hi = math.inf, -math.inf
    for q in (q0, q1):
        h = c - float(q @ nrm)
        if abs(h) <= r:
            w = math.sqrt(max(r * r - h * h, 0.0))
            m = float(q @ d)
            lo, hi = min(lo, m - w), max(hi, m + w)
    seg = q1 - q0
    L = math.hypot(*seg)
    if L > 0:
        u = seg / L
        v = np.array([-u[1], u[0]])
        base = c * nrm - q0
        # constraints 0 <= (base + s d).u <= L and |(base + s d).v| <= r
        a_lo, a_hi = -math.inf, math.inf
        ok = True
        for g, gmin, gmax in ((u, 0.0, L), (v, -r, r)):
            p0, p1 = float(base @ g), float(d @ g)
            if abs(p1) < 1e-15:
                if not gmin <= p0 <= gmax:
                    ok = False
                    break
                continue
            s0, s1 = (gmin - p0) / p1, (gmax - p0) / p1
            a_lo, a_hi = max(a_lo, min(s0, s1)), min(a_hi, max(s0, s1))
        if ok and a_lo <= a_hi:
            lo, hi = min(lo, a_lo), max(hi, a_hi)
    return (lo, hi) if lo <= hi else None


# --------------------------------------------------------------------------
# segment sets


class LeveledSegments:
    """Trimmed segments, one row each: level, j, t, s0 < s1 and weight.

    ``level`` is the 0-based level index; ``k`` the corresponding k_i.
    """

    def __init__(self, params: LevelParams, window: Rect, level, j, t, s0, s1):
        self.params = params
        self.window = Rect(*window)
        self.level = np.asarray(level, dtype=np.int64)
        self.j = np.asarray(j, dtype=np.int64)
        self.t = np.asarray(t, dtype=np.int64)
        self.s0 = np.asarray(s0, dtype=float)
        self.s1 = np.asarray(s1, dtype=float)
        ks = np.asarray(params.levels, dtype=np.int64)
        self.k = ks[self.level] if len(self.level) else np.zeros(0, np.int64)
        th = np.pi * self.j / np.maximum(self.k, 1)
        c = self.t.astype(float) * self.k.astype(float) ** 4
        nx, ny = -np.sin(th), np.cos(th)
        dx, dy = np.cos(th), np.sin(th)
        self.x0 = c * nx + self.s0 * dx
        self.y0 = c * ny + self.s0 * dy
        self.x1 = c * nx + self.s1 * dx
        self.y1 = c * ny + self.s1 * dy
        self.weight = np.array([highway_weight(a, b) for a, b in
                                zip(self.x1 - self.x0, self.y1 - self.y0)])

    def __len__(self):
        return len(self.level)

    def line(self, r: int) -> LineSpec:
        return LineSpec(int(self.level[r]), int(self.j[r]), int(self.t[r]), int(self.k[r]))

    def endpoints(self, r: int):
        return (self.x0[r], self.y0[r]), (self.x1[r], self.y1[r])

    def at_level(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.level == i)

    def rows(self):
        for r in range(len(self)):
            yield {"level": int(self.level[r]) + 1, "j": int(self.j[r]), "t": int(self.t[r]),
                   "x0": float(self.x0[r]), "y0": float(self.y0[r]),
                   "x1": float(self.x1[r]), "y1": float(self.y1[r]),
                   "weight": float(self.weight[r])}

    def to_csv(self, path):
        cols = ["level", "j", "t", "x0", "y0", "x1", "y1", "weight"]
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, cols)
            w.writeheader()
            for row in self.rows():
                w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})

    def to_json(self, path):
        doc = {"n": self.params.n, "levels": list(self.params.levels),
               "window": list(self.window), "segments": list(self.rows())}
        with open(path, "w") as fh:
            json.dump(doc, fh)


def highway_weight(dx: float, dy: float) -> float:
    """``sqrt(a^2 + 1) / (|a| + 1)`` with ``a`` the slope folded into [-1, 1]."""
    ax, ay = abs(dx), abs(dy)
    if ax == 0 and ay == 0:
        raise ValueError("degenerate segment")
    a = min(ax, ay) / max(ax, ay)
    return math.sqrt(a * a + 1.0) / (a + 1.0)


# --------------------------------------------------------------------------
# trimming


def enumerate_lines(params: LevelParams, i: int, box) -> list[LineSpec]:
    """Level-``i`` lines meeting ``box`` dilated by ``k_i``."""
    k = params.levels[i]
    sp = float(k) ** 4
    x0, y0, x1, y1 = box[0] - k, box[1] - k, box[2] + k, box[3] + k
    out = []
    for j in range(k):
        th = math.pi * j / k
        nrm = (-math.sin(th), math.cos(th))
        vals = [x * nrm[0] + y * nrm[1] for x in (x0, x1) for y in (y0, y1)]
        for t in range(math.ceil(min(vals) / sp), math.floor(max(vals) / sp) + 1):
            out.append(LineSpec(i, j, t, k))
    return out


def step1_intervals(line: LineSpec, others: list[LineSpec], k: float):
    """Parameter intervals of ``line`` within distance ``k`` of the other lines."""
    c1, n1, d1 = line.frame()
    out = []
    for o in others:
        if o == line:
            continue
        c2, n2, d2 = o.frame()
        sin = float(d1 @ n2)
        if abs(sin) < 1e-12:
            if abs(c2 - c1 * float(n1 @ n2)) <= k:
                return [(-math.inf, math.inf)]
            continue
        s = (c2 - c1 * float(n1 @ n2)) / sin
        half = k / abs(sin)
        out.append((s - half, s + half))
    return merge_intervals(out)


def trim_line(line: LineSpec, same_level: list[LineSpec], lower: list, box, k: float):
    """Residual parameter intervals of ``line`` inside ``box`` after both steps.

    ``lower`` holds ``(q0, q1)`` endpoint pairs of lower-level segments, already
    in processing order.
    """
    c, nrm, d = line.frame()
    span = line_box_interval(c, nrm, d, box)
    if span is None:
        return []
    residual = [span]
    for a, b in step1_intervals(line, same_level, k):
        residual = subtract(residual, a, b)
    for q0, q1 in lower:
        if not residual:
            break
        iv = hippodrome_interval(c, nrm, d, q0, q1, k)
        if iv is None or not meets(residual, *iv):
            continue
        a, b = iv
        residual = subtract(residual, a, b if b - a >= k else a + k)
    return [(a, b) for a, b in residual if b > a]


def _work_box(params: LevelParams, window: Rect):
    pad = 2 * sum(params.levels) + 2
    return (window.x0 - pad, window.y0 - pad, window.x1 + pad, window.y1 + pad)


def trim_lines(params: LevelParams, window: Rect, lines: list[LineSpec] | None = None,
               clip=None) -> LeveledSegments:
    """Run Steps 1-2 level by level and clip the result to ``clip`` (default: window).

    Trimming uses a work box padded past the window so that segments near its
    border see every feature that could cut them.  ``lines`` overrides the
    enumerated line set (test fixtures).
    """
    window = Rect(*window)
    box = _work_box(params, window)
    clip = tuple(float(v) for v in (window if clip is None else clip))
    rows = []  # (level, j, t, s0, s1) on the work box
    for i, k in enumerate(params.levels):
        lvl = [ln for ln in lines if ln.level == i] if lines is not None else enumerate_lines(params, i, box)
        lower = [r for r in rows if r[0] < i]
        lower.sort(key=lambda r: (r[0], r[1], r[2], r[3]))
        lower_pts = []
        for r in lower:
            ln = LineSpec(r[0], r[1], r[2], params.levels[r[0]])
            p = ln.point(np.array([r[3], r[4]]))
            lower_pts.append((p[0], p[1]))
        if lower_pts:
            L = np.array([[*a, *b] for a, b in lower_pts])
        for line in lvl:
            cand = lower_pts
            if lower_pts:
                c, nrm, _ = line.frame()
                h0 = L[:, :2] @ nrm - c
                h1 = L[:, 2:] @ nrm - c
                near = ~(((h0 > k) & (h1 > k)) | ((h0 < -k) & (h1 < -k)))
                cand = [lower_pts[q] for q in np.flatnonzero(near)]
            for a, b in trim_line(line, lvl, cand, box, k):
                rows.append((i, line.j, line.t, a, b))
    out = []
    for i, j, t, a, b in rows:
        ln = LineSpec(i, j, t, params.levels[i])
        c, nrm, d = ln.frame()
        span = line_box_interval(c, nrm, d, clip)
        if span is None:
            continue
        a2, b2 = max(a, span[0]), min(b, span[1])
        if b2 > a2:
            out.append((i, j, t, a2, b2))
    out.sort()
    cols = list(zip(*out)) if out else [[], [], [], [], []]
    return LeveledSegments(params, window, *cols)
