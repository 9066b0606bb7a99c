"""Plane graph of a tiled window."""
from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from ..grid import Rect
from .tiling import PinwheelTriangle, _cross, _dot, _sub, tile_window


class PlanarityError(AssertionError):
    """Two edges of the plane graph cross or overlap."""


@dataclass
class PinwheelGraph:
    """Vertices (exact rationals) and edges of the atomic tiles meeting ``window``.

    Tile sides are split wherever another tile's vertex lies on them, so the
    graph is a proper plane graph.  ``edges`` holds vertex-index pairs ``u < v``.
    """

    vertices: list
    edges: np.ndarray
    window: Rect
    triangles: list = field(default_factory=list)
    atomic_scale: float = 25

    def __post_init__(self):
        self.index = {p: i for i, p in enumerate(self.vertices)}
        self.xy = np.array([[float(x), float(y)] for x, y in self.vertices]).reshape(-1, 2)

    @property
    def lengths(self) -> np.ndarray:
        d = self.xy[self.edges[:, 1]] - self.xy[self.edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=len(self.vertices))

    def adjacency(self):
        n = len(self.vertices)
        m = coo_matrix((self.lengths, (self.edges[:, 0], self.edges[:, 1])), shape=(n, n))
        return m.tocsr()

    def graph_distances(self, sources) -> np.ndarray:
        """Shortest-path lengths in the plane graph (edge weight = Euclidean length)."""
        return dijkstra(self.adjacency(), directed=False, indices=np.atleast_1d(sources))

    def to_json(self, path=None):
        doc = {
            "window": list(self.window),
            "atomic_scale": str(self.atomic_scale),
            "triangles": [t.to_dict() for t in self.triangles],
            "vertices": [[str(x), str(y)] for x, y in self.vertices],
            "edges": self.edges.tolist(),
        }
        if path is None:
            return doc
        with open(path, "w") as fh:
            json.dump(doc, fh)


def _on_open_segment(p, a, b) -> bool:
    ab, ap = _sub(b, a), _sub(p, a)
    if _cross(ab, ap) != 0:
        return False
    t = _dot(ap, ab)
    return 0 < t < _dot(ab, ab)


def graph_from_triangles(triangles: list[PinwheelTriangle], window: Rect, atomic_scale=25) -> PinwheelGraph:
    verts = sorted({p for t in triangles for p in t.vertices})
    index = {p: i for i, p in enumerate(verts)}
    xy = np.array([[float(x), float(y)] for x, y in verts])
    # bucket vertices for the T-junction search
    cell = float(atomic_scale)
    buckets = defaultdict(list)
    for i, (x, y) in enumerate(xy):
        buckets[(math.floor(x / cell), math.floor(y / cell))].append(i)

    sides = {tuple(sorted(e)) for t in triangles for e in t.edges()}
    edges = set()
    for a, b in sorted(sides):
        (ax, ay), (bx, by) = xy[index[a]], xy[index[b]]
        inner = []
        for gx in range(math.floor(min(ax, bx) / cell), math.floor(max(ax, bx) / cell) + 1):
            for gy in range(math.floor(min(ay, by) / cell), math.floor(max(ay, by) / cell) + 1):
                for i in buckets.get((gx, gy), ()):
                    if _on_open_segment(verts[i], a, b):
                        inner.append(verts[i])
        ab = _sub(b, a)
        chain = [a] + sorted(inner, key=lambda p: _dot(_sub(p, a), ab)) + [b]
        for p, q in zip(chain[:-1], chain[1:]):
            i, j = index[p], index[q]
            edges.add((min(i, j), max(i, j)))
    e = np.array(sorted(edges), dtype=np.int64).reshape(-1, 2)
    return PinwheelGraph(verts, e, window, list(triangles), atomic_scale)


def build_pinwheel_graph(window: Rect, atomic_scale=25, max_triangles: int = 200_000) -> PinwheelGraph:
    """Plane graph of all atomic tiles (sides ``s, 2s, s*sqrt(5)``) meeting ``window``."""
    window = Rect(*window)
    tris, _ = tile_window(window, atomic_scale, max_triangles)
    return graph_from_triangles(tris, window, atomic_scale)


# --------------------------------------------------------------------------
# planarity audit


def _segments_cross(a, b, c, d) -> bool:
    """True if closed segments ab and cd share a point other than a common endpoint."""
    d1, d2 = _cross(_sub(b, a), _sub(c, a)), _cross(_sub(b, a), _sub(d, a))
    if d1 == 0 and d2 == 0:
        ab = _sub(b, a)
        tc, td = _dot(_sub(c, a), ab), _dot(_sub(d, a), ab)
        return min(_dot(ab, ab), max(tc, td)) > max(0, min(tc, td))
    if {a, b} & {c, d}:
        return False
    d3, d4 = _cross(_sub(d, c), _sub(a, c)), _cross(_sub(d, c), _sub(b, c))
    return d1 * d2 <= 0 and d3 * d4 <= 0


def planarity_violations(g: PinwheelGraph, limit: int = 10) -> list:
    """Pairs of edges meeting outside a shared endpoint (exact, bucketed)."""
    cell = float(g.atomic_scale)
    buckets = defaultdict(list)
    for k, (i, j) in enumerate(g.edges):
        (x0, y0), (x1, y1) = g.xy[i], g.xy[j]
        for gx in range(math.floor(min(x0, x1) / cell), math.floor(max(x0, x1) / cell) + 1):
            for gy in range(math.floor(min(y0, y1) / cell), math.floor(max(y0, y1) / cell) + 1):
                buckets[(gx, gy)].append(k)
    seen, bad = set(), []
    for ks in buckets.values():
        for x in range(len(ks)):
            for y in range(x + 1, len(ks)):
                pair = (min(ks[x], ks[y]), max(ks[x], ks[y]))
                if pair in seen:
                    continue
                seen.add(pair)
                (i, j), (k, l) = g.edges[pair[0]], g.edges[pair[1]]
                V = g.vertices
                if _segments_cross(V[i], V[j], V[k], V[l]):
                    bad.append(pair)
                    if len(bad) >= limit:
                        return bad
    return bad
