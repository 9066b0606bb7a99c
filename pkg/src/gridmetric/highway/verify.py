"""Audits and distance checks for the highway construction."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree

from ..grid import Rect, certified_distances
from .assemble import OFF_HIGHWAY
from .lines import LeveledSegments, segment_distance
from .params import LevelParams
from .raster import max_discrepancy, raster_cells

MIN_WEIGHT = math.sqrt(2) / 2


class LowerBoundViolation(AssertionError):
    """dist_W(u, v) < |u - v| - 1: the construction is broken."""


def additive_scale(params: LevelParams, d: float) -> float:
    """``min_i (d / k_i + k_i^4)``."""
    return min(d / k + float(k) ** 4 for k in params.levels)


@dataclass
class VerifyReport:
    rows: list = field(default_factory=list)  # (ux, uy, vx, vy, euclid, dist, additive_error)
    params: LevelParams | None = None
    exact: bool = True

    @property
    def violations(self) -> int:
        return sum(1 for r in self.rows if r[5] < r[4] - 1 - 1e-9 * max(1.0, r[4]))

    def fitted_constant(self) -> float:
        """Smallest C with additive_error <= C * min_i(d/k_i + k_i^4) on every row."""
        return max((r[6] / additive_scale(self.params, r[4]) for r in self.rows if r[4] > 0),
                   default=0.0)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["ux", "uy", "vx", "vy", "euclid", "dist", "additive_error"])
            for r in self.rows:
                w.writerow([r[0], r[1], r[2], r[3], repr(r[4]), repr(r[5]), repr(r[6])])


def verify_guarantees(weights, pairs, params: LevelParams, strict: bool = True) -> VerifyReport:
    """Exact distances for ``pairs`` and the lower-bound / additive-error report.

    Pairs sharing a source are answered by one certified Dijkstra run.
    """
    report = VerifyReport(params=params)
    by_src: dict = {}
    for u, v in pairs:
        by_src.setdefault(tuple(map(int, u)), []).append(tuple(map(int, v)))
    for u, targets in by_src.items():
        d = certified_distances(weights, u, targets, MIN_WEIGHT)
        for v, dv in zip(targets, d):
            e = math.dist(u, v)
            report.rows.append((u[0], u[1], v[0], v[1], e, float(dv), float(dv) - e))
    if strict and report.violations:
        bad = [r for r in report.rows if r[5] < r[4] - 1 - 1e-9 * max(1.0, r[4])]
        raise LowerBoundViolation(f"{len(bad)} pairs below |u-v| - 1, first {bad[0]}")
    return report


def sample_pairs(segments: LeveledSegments, window: Rect, count: int, max_sep: float,
                 seed: int = 0, per_source: int = 20, on_highway: float = 0.5):
    """Pairs within ``max_sep`` of each other; about half the points lie on highways."""
    rng = np.random.default_rng(seed)
    cells = []
    for r in range(len(segments)):
        c = raster_cells(*segments.endpoints(r))
        if len(c):
            cells.append(c[rng.integers(0, len(c), size=min(len(c), 64))])
    cells = np.concatenate(cells) if cells else np.zeros((0, 2), np.int64)

    def pick_near(center):
        if len(cells) and rng.random() < on_highway:
            near = cells[np.abs(cells - center).max(axis=1) <= max_sep / math.sqrt(2)]
            if len(near):
                return tuple(int(x) for x in near[rng.integers(len(near))])
        while True:
            ang = rng.uniform(0, 2 * math.pi)
            rad = max_sep * math.sqrt(rng.uniform(0.01, 1.0))
            p = (int(round(center[0] + rad * math.cos(ang))), int(round(center[1] + rad * math.sin(ang))))
            if window.contains(p) and p != tuple(center):
                return p

    pairs = []
    while len(pairs) < count:
        if len(cells) and rng.random() < on_highway:
            u = tuple(int(x) for x in cells[rng.integers(len(cells))])
        else:
            u = (int(rng.integers(window.x0, window.x1 + 1)), int(rng.integers(window.y0, window.y1 + 1)))
        for _ in range(min(per_source, count - len(pairs))):
            v = pick_near(u)
            if v != u:
                pairs.append((u, v))
    return pairs


# --------------------------------------------------------------------------
# long-range upper bounds


def _segment_nodes(p, q, step):
    """Staircase vertices sampled every ``step`` along the major axis (ends included)."""
    xmajor = abs(q[0] - p[0]) >= abs(q[1] - p[1])
    if not xmajor:
        nodes = _segment_nodes((p[1], p[0]), (q[1], q[0]), step)
        return nodes[:, ::-1].copy()
    if q[0] < p[0]:
        p, q = q, p
    first, last = math.floor(p[0] - 0.5) + 1, math.floor(q[0] + 0.5)
    cx = np.unique(np.concatenate([np.arange(first, last + 1, step), [last]]))
    a = (q[1] - p[1]) / (q[0] - p[0]) if q[0] > p[0] else 0.0
    x = np.clip(cx.astype(float), p[0], q[0])
    cy = np.floor(p[1] + (x - p[0]) * a + 0.5).astype(np.int64)
    return np.column_stack([cx, cy])


def network_upper_bound(segments: LeveledSegments, u, v, step: int = 100, jump: float = 250.0,
                        margin: float | None = None) -> float:
    """Upper bound on dist_W(u, v) from a sparse network of highway samples.

    Moves along one highway cost ``weight * L1`` (exact on a staircase).
    Jumps between any two nodes, and from ``u``/``v`` to nearby nodes, cost
    ``2 * L1``, which no grid path of that L1 length can exceed.
    """
    u, v = tuple(map(int, u)), tuple(map(int, v))
    d1 = abs(u[0] - v[0]) + abs(u[1] - v[1])
    if margin is None:
        # reach at least one line of every direction even for short pairs
        margin = 0.3 * math.dist(u, v) + float(segments.params.levels[0]) ** 4 + 2 * jump
    box = Rect.around([u, v], margin)
    s = segments
    near = np.flatnonzero((np.maximum(s.x0, s.x1) >= box.x0) & (np.minimum(s.x0, s.x1) <= box.x1)
                          & (np.maximum(s.y0, s.y1) >= box.y0) & (np.minimum(s.y0, s.y1) <= box.y1))
    pts = [np.array([u, v], dtype=np.int64)]
    rows, cols, vals = [0], [1], [OFF_HIGHWAY * d1]
    base = 2
    for r in near:
        nd = _segment_nodes(*s.endpoints(r), step)
        if not len(nd):
            continue
        idx = np.arange(base, base + len(nd))
        if len(nd) > 1:
            rows.extend(idx[:-1])
            cols.extend(idx[1:])
            vals.extend(s.weight[r] * np.abs(np.diff(nd, axis=0)).sum(axis=1))
        pts.append(nd)
        base += len(nd)
    P = np.concatenate(pts)
    tree = cKDTree(P)
    pr = tree.query_pairs(jump, p=1, output_type="ndarray")
    if len(pr):
        rows.extend(pr[:, 0])
        cols.extend(pr[:, 1])
        vals.extend(OFF_HIGHWAY * np.abs(P[pr[:, 0]] - P[pr[:, 1]]).sum(axis=1))
    # always attach the endpoints to their nearest few nodes
    k = min(8, len(P))
    for e in (0, 1):
        dd, ii = tree.query(P[e], k=k, p=1)
        for dist_, j in zip(np.atleast_1d(dd), np.atleast_1d(ii)):
            if j != e:
                rows.append(e)
                cols.append(int(j))
                vals.append(OFF_HIGHWAY * dist_)
    vals = np.asarray(vals, dtype=float)
    rows, cols = np.asarray(rows, np.int64), np.asarray(cols, np.int64)
    # keep the cheapest of duplicate edges (a sparse matrix would add them up)
    key = np.minimum(rows, cols) * len(P) + np.maximum(rows, cols)
    order = np.lexsort((vals, key))
    first = np.ones(len(order), bool)
    first[1:] = key[order][1:] != key[order][:-1]
    sel = order[first]
    # zero-cost jumps between coincident nodes must survive the sparse format
    g = coo_matrix((np.maximum(vals[sel], 1e-12), (rows[sel], cols[sel])),
                   shape=(len(P), len(P))).tocsr()
    d = dijkstra(g, directed=False, indices=0)
    return float(d[1])


# --------------------------------------------------------------------------
# separation and per-highway audits


def separation_audit(segments: LeveledSegments, spacing_frac: float = 0.5):
    """Minimum of ``dist(s, s') / k`` over distinct segment pairs.

    ``k`` is k_i of the finer of the two levels.  Candidate pairs come from
    points sampled every ``spacing_frac * k_min`` along each segment; any pair
    closer than ``k`` has samples within ``k + spacing`` and is then measured
    exactly.  Returns ``(min_ratio, n_checked, worst_pair)``.
    """
    if len(segments) < 2:
        return math.inf, 0, None
    kmin = float(segments.k.min())
    step = spacing_frac * kmin
    pts, ids = [], []
    for r in range(len(segments)):
        (x0, y0), (x1, y1) = segments.endpoints(r)
        L = math.hypot(x1 - x0, y1 - y0)
        m = max(int(math.ceil(L / step)), 1)
        t = np.linspace(0.0, 1.0, m + 1)
        pts.append(np.column_stack([x0 + t * (x1 - x0), y0 + t * (y1 - y0)]))
        ids.append(np.full(m + 1, r))
    P, I = np.concatenate(pts), np.concatenate(ids)
    kmax = float(segments.k.max())
    pr = cKDTree(P).query_pairs(kmax + step, output_type="ndarray")
    a, b = I[pr[:, 0]], I[pr[:, 1]]
    keep = a != b
    cand = np.unique(np.sort(np.column_stack([a[keep], b[keep]]), axis=1), axis=0)
    best, worst = math.inf, None
    for r1, r2 in cand:
        need = float(min(segments.k[r1], segments.k[r2]))
        d = segment_distance(*segments.endpoints(r1), *segments.endpoints(r2))
        if d / need < best:
            best, worst = d / need, (int(r1), int(r2), d)
    return best, len(cand), worst


def same_line_gaps(segments: LeveledSegments) -> float:
    """Minimum of ``gap / k`` between consecutive segments on one line (inf if none)."""
    best = math.inf
    key = np.column_stack([segments.level, segments.j, segments.t])
    order = np.lexsort((segments.s0, segments.t, segments.j, segments.level))
    for a, b in zip(order[:-1], order[1:]):
        if (key[a] == key[b]).all():
            best = min(best, (segments.s0[b] - segments.s1[a]) / segments.k[a])
    return best


def random_highway_discrepancy(count: int = 1000, max_edges: int = 10_000, seed: int = 0):
    """Worst per-highway discrepancy over random segments of every octant.

    Lengths are log-uniform up to about ``max_edges`` edges, and every tenth
    segment takes the full length.
    """
    rng = np.random.default_rng(seed)
    worst, edges = 0.0, 0
    for i in range(count):
        ang = rng.uniform(0, 2 * math.pi)
        p = rng.uniform(-1000, 1000, 2)
        L1 = max_edges if i % 10 == 0 else math.exp(rng.uniform(0, math.log(max_edges)))
        L = L1 / (abs(math.cos(ang)) + abs(math.sin(ang)))
        q = p + L * np.array([math.cos(ang), math.sin(ang)])
        worst = max(worst, max_discrepancy(p, q))
        edges = max(edges, len(raster_cells(p, q)) - 1)
    return worst, edges

