"""Embedding of the pinwheel plane graph into the weighted grid.

Each graph vertex goes to its nearest integer point.  Each graph edge becomes
a monotone staircase between the two images, chosen by a dynamic program that
minimises the squared distance of its vertices from the original segment while
avoiding every cell already used.  Paths leaving the same vertex may share up
to their first two edges; nothing else is shared.

Weights: edges on no path weigh 10, edges on two or more paths weigh 1, and
the remaining edges of a path share one value chosen so that the path sums to
the Euclidean length of its graph edge.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numba import njit

from ..grid import DenseWeights, EdgeKey, GridPoint, Rect
from .graph import PinwheelGraph

OFF_PATH = 10.0
SHARED = 1.0
INTERIOR_RANGE = (0.6, 1.05)
SHARE_PENALTY = 0.25
FOREIGN_PENALTY = 4.0
FREE = -1
RESERVED = -2


class RoutingError(RuntimeError):
    """No admissible staircase exists for an edge."""

    def __init__(self, msg, edge=None, blocker=None):
        super().__init__(msg)
        self.edge = edge
        self.blocker = blocker


class EmbeddingError(AssertionError):
    """An embedding invariant failed."""


def nearest_point(p) -> tuple[int, int]:
    """Nearest integer point; halves round up."""
    return tuple(math.floor(Fraction(c) + Fraction(1, 2)) for c in p)


@njit(cache=True)
def _staircase_dp(occ, sx, sy, ox, oy, nx, ny, cost, lo_x, lo_y, hi_x, hi_y):
    """Cheapest monotone path over free cells from (ox, oy) in direction (sx, sy).

    ``cost`` is indexed like ``occ``; only cells with ``occ == -1`` (plus the
    start) are admissible.  Returns the accumulated cost array over the box
    ``[lo, hi]`` (index ``(|x - ox|, |y - oy|)``) and the move taken into each
    cell (0 = x step, 1 = y step, -1 = none).
    """
    W = abs(hi_x - lo_x) + 1
    H = abs(hi_y - lo_y) + 1
    acc = np.full((W, H), np.inf)
    move = np.full((W, H), -1, np.int8)
    for a in range(W):
        for b in range(H):
            x = ox + sx * a
            y = oy + sy * b
            if a == 0 and b == 0:
                acc[0, 0] = cost[x - nx, y - ny]
                continue
            if occ[x - nx, y - ny] != -1:
                continue
            best = np.inf
            m = -1
            if a > 0 and acc[a - 1, b] < best:
                best = acc[a - 1, b]
                m = 0
            if b > 0 and acc[a, b - 1] < best:
                best = acc[a, b - 1]
                m = 1
            if m >= 0:
                acc[a, b] = best + cost[x - nx, y - ny]
                move[a, b] = m
    return acc, move


@njit(cache=True)
def _path_errors(cells, cum):
    """Max over vertex pairs of |path weight - Euclidean distance|."""
    n = cells.shape[0]
    worst = 0.0
    for a in range(n):
        for b in range(a + 1, n):
            dx = cells[b, 0] - cells[a, 0]
            dy = cells[b, 1] - cells[a, 1]
            e = abs(cum[b] - cum[a] - math.sqrt(dx * dx + dy * dy))
            if e > worst:
                worst = e
    return worst


@dataclass
class GridEmbedding:
    vertex_map: list                      # graph vertex index -> GridPoint
    paths: dict                           # (u, v) with u < v -> (L, 2) cells from phi(u) to phi(v)
    weights: DenseWeights
    graph: PinwheelGraph
    interior: dict = field(default_factory=dict)   # (u, v) -> interior weight

    @property
    def path_map(self) -> dict:
        """Graph edge -> ordered list of grid :class:`EdgeKey`."""
        out = {}
        for e, c in self.paths.items():
            out[e] = [EdgeKey.between(a, b) for a, b in zip(c[:-1].tolist(), c[1:].tolist())]
        return out

    def path_weights(self, e) -> np.ndarray:
        c = self.paths[e]
        W = self.weights
        base = np.minimum(c[:-1], c[1:]) - np.array([W.window.x0, W.window.y0])
        horiz = c[1:, 0] != c[:-1, 0]
        return np.where(horiz, W.h[base[:, 0], np.minimum(base[:, 1], W.h.shape[1] - 1)],
                        W.v[np.minimum(base[:, 0], W.v.shape[0] - 1), base[:, 1]])

    def to_json(self, path=None):
        doc = {
            "window": list(self.weights.window),
            "vertex_map": [list(p) for p in self.vertex_map],
            "path_map": [{"edge": list(map(int, e)), "cells": c.tolist(), "interior_weight": self.interior[e]}
                         for e, c in sorted(self.paths.items())],
        }
        if path is None:
            return doc
        with open(path, "w") as fh:
            json.dump(doc, fh)


def _monotone_prefixes(start, exit_):
    """All monotone cell sequences from ``start`` to ``exit_`` (start excluded)."""
    dx, dy = exit_[0] - start[0], exit_[1] - start[1]
    sx, sy = int(np.sign(dx)), int(np.sign(dy))
    n = abs(dx) + abs(dy)
    out = []
    for xs in itertools.combinations(range(n), abs(dx)):
        c, seq = start, []
        for k in range(n):
            c = (c[0] + sx, c[1]) if k in xs else (c[0], c[1] + sy)
            seq.append(c)
        out.append(seq)
    return out


class _Router:
    """Two-phase router.

    Phase one fixes, around every vertex, a distinct exit cell at L1 radius
    ``RADIUS`` for each incident edge and stubs reaching those exits: two stubs
    may share cells only at radius 1 and 2, and a shared radius-2 cell needs a
    shared radius-1 cell.  Phase two joins the two exits of every edge with a
    cheapest free staircase, ripping up and re-ordering blockers on failure.
    """

    RADIUS = 4

    def __init__(self, g: PinwheelGraph):
        self.g = g
        self.phi = [nearest_point(p) for p in g.vertices]
        if len(set(self.phi)) != len(self.phi):
            raise EmbeddingError("two graph vertices round to the same grid point")
        P = np.array(self.phi, dtype=np.int64).reshape(-1, 2)
        self.window = Rect.around(P, 1)
        W, H = self.window.width, self.window.height
        self.occ = np.full((W, H), FREE, np.int64)
        for p in self.phi:
            self.occ[p[0] - self.window.x0, p[1] - self.window.y0] = RESERVED
        self.edges = [tuple(e) for e in g.edges.tolist()]
        self.edge_index = {e: k for k, e in enumerate(self.edges)}
        self.near_d, self.near_e = _nearest_segment(g, self.window)
        self.incident = [[] for _ in g.vertices]
        for k, (u, v) in enumerate(self.edges):
            self.incident[u].append(k)
            self.incident[v].append(k)
        self.prefix: dict = {}     # (vertex, edge id) -> 3 cells leaving phi(vertex)
        self.paths: dict = {}

    def _o(self, c):
        return c[0] - self.window.x0, c[1] - self.window.y0

    def _line_dist2(self, k, c):
        u, v = self.edges[k]
        (ux, uy), (vx, vy) = self.g.xy[u], self.g.xy[v]
        L = math.hypot(vx - ux, vy - uy)
        d = ((c[0] - ux) * (vy - uy) - (c[1] - uy) * (vx - ux)) / L
        return d * d

    # -- phase one ------------------------------------------------------------
    def plan_vertex(self, vid):
        from scipy.optimize import linear_sum_assignment

        ks = self.incident[vid]
        P = self.phi[vid]
        R = self.RADIUS
        ring = [(P[0] + a, P[1] + (R - abs(a)) * s) for a in range(-R, R + 1) for s in (1, -1)
                if not (abs(a) == R and s == -1)]
        cost = np.full((len(ks), len(ring)), 1e9)
        for i, k in enumerate(ks):
            u, v = self.edges[k]
            Q = self.phi[v if u == vid else u]
            dx, dy = Q[0] - P[0], Q[1] - P[1]
            # each end may use at most half of the displacement (rounded in favour of u)
            first = u == vid
            capx = (abs(dx) + first) // 2
            capy = (abs(dy) + first) // 2
            for j, c in enumerate(ring):
                ex, ey = c[0] - P[0], c[1] - P[1]
                if ex * dx < 0 or ey * dy < 0 or abs(ex) > capx or abs(ey) > capy:
                    continue
                cost[i, j] = self._line_dist2(k, c)
        rows, cols = linear_sum_assignment(cost)
        if (cost[rows, cols] >= 1e9).any():
            raise RoutingError(f"no distinct exits around vertex {vid}",
                               edge=self.edges[ks[rows[cost[rows, cols] >= 1e9][0]]])
        exits = {ks[r]: ring[c] for r, c in zip(rows, cols)}
        order = sorted(ks, key=lambda k: math.atan2(exits[k][1] - P[1], exits[k][0] - P[0]))
        options = {k: sorted(_monotone_prefixes(P, exits[k]),
                             key=lambda seq: sum(self._line_dist2(k, c) for c in seq[:-1]))
                   for k in ks}
        chosen: dict = {}

        def ok(seq):
            for other in chosen.values():
                if seq[1] == other[1] and seq[0] != other[0]:
                    return False
                if any(a == b for a, b in zip(seq[2:], other[2:])):
                    return False
            return True

        def search(i):
            if i == len(order):
                return True
            k = order[i]
            for seq in options[k]:
                if ok(seq):
                    chosen[k] = seq
                    if search(i + 1):
                        return True
                    del chosen[k]
            return False

        if not search(0):
            raise RoutingError(f"no prefix tree around vertex {vid}", edge=self.edges[ks[0]])
        for k, seq in chosen.items():
            self.prefix[(vid, k)] = seq
            for c in seq:
                o = self._o(c)
                cur = self.occ[o]
                if cur == FREE:
                    self.occ[o] = k
                elif cur == RESERVED or not any(c in self.prefix.get((vid, kk), ()) for kk in ks if kk != k):
                    raise RoutingError(f"prefix of vertex {vid} runs into a foreign cell {c}",
                                       edge=self.edges[k], blocker=self._owner(cur))

    def _owner(self, code):
        return self.edges[code] if code >= 0 else None

    # -- phase two ------------------------------------------------------------
    def route(self, k):
        u, v = self.edges[k]
        hu, hv = self.prefix[(u, k)], self.prefix[(v, k)]
        A, B = hu[-1], hv[-1]
        sx = 1 if B[0] >= A[0] else -1
        sy = 1 if B[1] >= A[1] else -1
        (ux, uy), (vx, vy) = self.g.xy[u], self.g.xy[v]
        L = math.hypot(vx - ux, vy - uy)
        box = Rect(min(A[0], B[0]), min(A[1], B[1]), max(A[0], B[0]), max(A[1], B[1]))
        sl = (slice(box.x0 - self.window.x0, box.x1 - self.window.x0 + 1),
              slice(box.y0 - self.window.y0, box.y1 - self.window.y0 + 1))
        xs = np.arange(box.x0, box.x1 + 1, dtype=float)[:, None]
        ys = np.arange(box.y0, box.y1 + 1, dtype=float)[None, :]
        dev = ((xs - ux) * (vy - uy) - (ys - uy) * (vx - ux)) / L
        # stay in the own Voronoi cell of the segment so neighbours keep room
        cost = dev * dev + FOREIGN_PENALTY * ((self.near_e[sl] != k) & (self.near_d[sl] < np.abs(dev)))
        occ = self.occ[sl].copy()
        occ[A[0] - box.x0, A[1] - box.y0] = FREE
        occ[B[0] - box.x0, B[1] - box.y0] = FREE
        acc, move = _staircase_dp(occ, sx, sy, A[0], A[1], box.x0, box.y0, cost, A[0], A[1], B[0], B[1])
        a, b = abs(B[0] - A[0]), abs(B[1] - A[1])
        if not math.isfinite(acc[a, b]):
            sub = self.occ[sl]
            ids = np.unique(sub[(sub >= 0) & (sub != k)])
            raise RoutingError(f"no free staircase for edge {(u, v)}", edge=(u, v),
                               blocker=[self.edges[i] for i in ids])
        mid = [B]
        while (a, b) != (0, 0):
            if move[a, b] == 0:
                a -= 1
            else:
                b -= 1
            mid.append((A[0] + sx * a, A[1] + sy * b))
        mid.reverse()
        cells = np.array([self.phi[u]] + hu[:-1] + mid + hv[:-1][::-1] + [self.phi[v]], dtype=np.int64)
        for c in mid[1:-1]:
            self.occ[self._o(c)] = k
        self.paths[(u, v)] = cells
        return cells

    def unroute(self, k):
        u, v = self.edges[k]
        cells = self.paths.pop((u, v))
        for c in map(tuple, cells[self.RADIUS + 1:len(cells) - self.RADIUS - 1].tolist()):
            self.occ[self._o(c)] = FREE

    def run(self, max_retries: int = 8):
        for vid in range(len(self.g.vertices)):
            self.plan_vertex(vid)
        order = sorted(range(len(self.edges)),
                       key=lambda k: (self.g.vertices[self.edges[k][0]], self.g.vertices[self.edges[k][1]]))
        rng = np.random.default_rng(0)
        for k in order:
            try:
                self.route(k)
                continue
            except RoutingError as err:
                group = [k] + [self.edge_index[e] for e in (err.blocker or []) if e in self.paths]
            # rip up the group and re-route it in other orders
            for attempt in range(max_retries):
                for kk in group:
                    if self.edges[kk] in self.paths:
                        self.unroute(kk)
                seq = group if attempt == 0 else (group[1:] + group[:1] if attempt == 1
                                                  else list(rng.permutation(group)))
                try:
                    for kk in seq:
                        self.route(kk)
                    break
                except RoutingError as err2:
                    more = [self.edge_index[e] for e in (err2.blocker or []) if e in self.paths]
                    group = list(dict.fromkeys(group + more))
            else:
                raise RoutingError(f"edge {self.edges[k]} conflicts with {[self.edges[b] for b in group[1:]]}",
                                   edge=self.edges[k], blocker=[self.edges[b] for b in group[1:]])
        return self.paths


def _nearest_segment(g: PinwheelGraph, window: Rect, reach: int = 4):
    """Per cell: distance to the nearest graph edge within ``reach`` and its index."""
    W, H = window.width, window.height
    best = np.full((W, H), np.inf)
    which = np.full((W, H), -1, np.int64)
    for k, (i, j) in enumerate(g.edges):
        (ax, ay), (bx, by) = g.xy[i], g.xy[j]
        x0 = max(math.floor(min(ax, bx)) - reach, window.x0)
        x1 = min(math.ceil(max(ax, bx)) + reach, window.x1)
        y0 = max(math.floor(min(ay, by)) - reach, window.y0)
        y1 = min(math.ceil(max(ay, by)) + reach, window.y1)
        px = np.arange(x0, x1 + 1, dtype=float)[:, None]
        py = np.arange(y0, y1 + 1, dtype=float)[None, :]
        dx, dy = bx - ax, by - ay
        t = np.clip(((px - ax) * dx + (py - ay) * dy) / (dx * dx + dy * dy), 0.0, 1.0)
        d = np.hypot(px - ax - t * dx, py - ay - t * dy)
        sub = best[x0 - window.x0:x1 - window.x0 + 1, y0 - window.y0:y1 - window.y0 + 1]
        wsub = which[x0 - window.x0:x1 - window.x0 + 1, y0 - window.y0:y1 - window.y0 + 1]
        closer = d < sub
        sub[closer] = d[closer]
        wsub[closer] = k
    return best, which


def _interior_weights(paths: dict, lengths: dict, window: Rect):
    W, H = window.width, window.height
    hcount = np.zeros((W - 1, H), np.int64)
    vcount = np.zeros((W, H - 1), np.int64)
    split = {}
    for e, c in paths.items():
        base = np.minimum(c[:-1], c[1:]) - np.array([window.x0, window.y0])
        horiz = c[1:, 0] != c[:-1, 0]
        np.add.at(hcount, (base[horiz, 0], base[horiz, 1]), 1)
        np.add.at(vcount, (base[~horiz, 0], base[~horiz, 1]), 1)
        split[e] = (base, horiz)
    h = np.full((W - 1, H), OFF_PATH)
    v = np.full((W, H - 1), OFF_PATH)
    h[hcount >= 2] = SHARED
    v[vcount >= 2] = SHARED
    interior = {}
    for e, (base, horiz) in split.items():
        cnt = np.where(horiz, hcount[base[:, 0], np.minimum(base[:, 1], H - 1)],
                       vcount[np.minimum(base[:, 0], W - 1), base[:, 1]])
        shared = int(np.count_nonzero(cnt >= 2))
        alone = len(cnt) - shared
        w = (lengths[e] - SHARED * shared) / alone
        interior[e] = w
        hb, vb = base[horiz & (cnt == 1)], base[~horiz & (cnt == 1)]
        h[hb[:, 0], hb[:, 1]] = w
        v[vb[:, 0], vb[:, 1]] = w
    return h, v, interior


def embed_into_grid(g: PinwheelGraph, strict: bool = True) -> GridEmbedding:
    """Route every edge, assign weights and (with ``strict``) run :func:`audit_embedding`."""
    r = _Router(g)
    lengths = dict(zip(map(tuple, g.edges.tolist()), g.lengths))
    r.run()
    h, v, interior = _interior_weights(r.paths, lengths, r.window)
    emb = GridEmbedding([GridPoint(*p) for p in r.phi], r.paths,
                        DenseWeights(r.window, h, v), g, interior)
    if strict:
        rep = audit_embedding(emb)
        if not rep["ok"]:
            raise EmbeddingError(f"embedding audit failed: {rep}")
    return emb


# --------------------------------------------------------------------------
# audit


def audit_embedding(emb: GridEmbedding, subpath_tol: float = 2.0) -> dict:
    """Check every rule of the embedding and return a summary dict."""
    g = emb.graph
    lengths = dict(zip(map(tuple, g.edges.tolist()), g.lengths))
    rep = {"paths": len(emb.paths), "monotone": True, "max_sum_error": 0.0, "max_subpath_error": 0.0,
           "interior_min": math.inf, "interior_max": -math.inf, "prefix_ok": True, "max_prefix": 0,
           "disjoint_ok": True, "shared_weight_ok": True, "off_path_ok": True}
    # monotone and sums
    for e, c in emb.paths.items():
        d = np.diff(c, axis=0)
        if not (np.abs(d).sum(axis=1) == 1).all() or (d[:, 0] * np.sign(c[-1, 0] - c[0, 0]) < 0).any() \
                or (d[:, 1] * np.sign(c[-1, 1] - c[0, 1]) < 0).any():
            rep["monotone"] = False
        w = emb.path_weights(e)
        rep["max_sum_error"] = max(rep["max_sum_error"], abs(w.sum() - lengths[e]) / lengths[e])
        cum = np.concatenate([[0.0], np.cumsum(w)])
        rep["max_subpath_error"] = max(rep["max_subpath_error"], float(_path_errors(c, cum)))
        rep["interior_min"] = min(rep["interior_min"], emb.interior[e])
        rep["interior_max"] = max(rep["interior_max"], emb.interior[e])
    # pairwise sharing rules
    cell_paths: dict = {}
    for e, c in emb.paths.items():
        for k, p in enumerate(map(tuple, c.tolist())):
            cell_paths.setdefault(p, []).append((e, k))
    for p, lst in cell_paths.items():
        for x in range(len(lst)):
            for y in range(x + 1, len(lst)):
                (e1, k1), (e2, k2) = lst[x], lst[y]
                common = set(e1) & set(e2)
                if not common:
                    rep["disjoint_ok"] = False
                    continue
                z = common.pop()
                # positions counted from the shared vertex
                c1, c2 = emb.paths[e1], emb.paths[e2]
                d1 = k1 if e1[0] == z else len(c1) - 1 - k1
                d2 = k2 if e2[0] == z else len(c2) - 1 - k2
                if d1 != d2 or d1 > 2:
                    rep["prefix_ok"] = False
                    continue
                a = c1 if e1[0] == z else c1[::-1]
                b = c2 if e2[0] == z else c2[::-1]
                if not (a[:d1 + 1] == b[:d1 + 1]).all():
                    rep["prefix_ok"] = False
                rep["max_prefix"] = max(rep["max_prefix"], d1)
    # weight classes
    W = emb.weights
    hc = np.zeros(W.h.shape, np.int64)
    vc = np.zeros(W.v.shape, np.int64)
    for c in emb.paths.values():
        base = np.minimum(c[:-1], c[1:]) - np.array([W.window.x0, W.window.y0])
        horiz = c[1:, 0] != c[:-1, 0]
        np.add.at(hc, (base[horiz, 0], base[horiz, 1]), 1)
        np.add.at(vc, (base[~horiz, 0], base[~horiz, 1]), 1)
    rep["shared_weight_ok"] = bool((W.h[hc >= 2] == SHARED).all() and (W.v[vc >= 2] == SHARED).all())
    rep["off_path_ok"] = bool((W.h[hc == 0] == OFF_PATH).all() and (W.v[vc == 0] == OFF_PATH).all())
    lo, hi = INTERIOR_RANGE
    rep["interior_in_range"] = bool(lo <= rep["interior_min"] and rep["interior_max"] <= hi)
    rep["ok"] = bool(rep["monotone"] and rep["prefix_ok"] and rep["disjoint_ok"] and rep["shared_weight_ok"]
                     and rep["off_path_ok"] and rep["interior_in_range"] and rep["max_sum_error"] <= 1e-9
                     and rep["max_subpath_error"] <= subpath_tol)
    return rep
