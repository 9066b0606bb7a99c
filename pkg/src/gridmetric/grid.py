"""Weighted integer grid: edge storage, Dijkstra and monotone-path distances.

Conventions
-----------
A rectangle of vertices ``Rect(x0, y0, x1, y1)`` is inclusive on both ends.
Edge weights over a rectangle with ``W`` columns and ``H`` rows are two arrays:

* ``h[i, j]`` -- edge from ``(x0+i, y0+j)`` to ``(x0+i+1, y0+j)``, shape ``(W-1, H)``
* ``v[i, j]`` -- edge from ``(x0+i, y0+j)`` to ``(x0+i, y0+j+1)``, shape ``(W, H-1)``

Vertex ``(x0+i, y0+j)`` has flat index ``i*H + j``, which is lexicographic
``(x, y)`` order; Dijkstra breaks ties on that index.
"""
from __future__ import annotations

import csv
import enum
import json
import math
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from numba import njit

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1


class Unreachable(LookupError):
    """Target cannot be reached inside the searched region."""


class Axis(enum.IntEnum):
    H = 0
    V = 1


def _check_coord(c):
    c = int(c)
    if not INT64_MIN <= c <= INT64_MAX:
        raise OverflowError(f"grid coordinate {c} outside the int64 range")
    return c


class GridPoint(NamedTuple):
    x: int
    y: int

    @classmethod
    def of(cls, x, y) -> "GridPoint":
        return cls(_check_coord(x), _check_coord(y))

    def shifted(self, dx, dy) -> "GridPoint":
        return GridPoint.of(self.x + dx, self.y + dy)

    def norm2(self) -> float:
        return math.hypot(self.x, self.y)


class EdgeKey(NamedTuple):
    base: GridPoint
    axis: Axis

    @classmethod
    def between(cls, u, v) -> "EdgeKey":
        u, v = GridPoint.of(*u), GridPoint.of(*v)
        dx, dy = v.x - u.x, v.y - u.y
        if abs(dx) + abs(dy) != 1:
            raise ValueError(f"{u} and {v} are not grid neighbours")
        if dx:
            return cls(u if dx > 0 else v, Axis.H)
        return cls(u if dy > 0 else v, Axis.V)

    def endpoints(self) -> tuple[GridPoint, GridPoint]:
        b = self.base
        return b, (b.shifted(1, 0) if self.axis == Axis.H else b.shifted(0, 1))


class Rect(NamedTuple):
    x0: int
    y0: int
    x1: int
    y1: int

    @classmethod
    def around(cls, points: Iterable[Sequence[int]], margin: float = 0.0) -> "Rect":
        pts = np.asarray(list(points), dtype=np.int64).reshape(-1, 2)
        m = int(math.ceil(margin))
        return cls(int(pts[:, 0].min()) - m, int(pts[:, 1].min()) - m,
                   int(pts[:, 0].max()) + m, int(pts[:, 1].max()) + m)

    @property
    def width(self) -> int:
        return self.x1 - self.x0 + 1

    @property
    def height(self) -> int:
        return self.y1 - self.y0 + 1

    @property
    def size(self) -> int:
        return max(self.width, 0) * max(self.height, 0)

    def is_empty(self) -> bool:
        return self.x1 < self.x0 or self.y1 < self.y0

    def contains(self, p) -> bool:
        return self.x0 <= p[0] <= self.x1 and self.y0 <= p[1] <= self.y1

    def contains_rect(self, other: "Rect") -> bool:
        return (self.x0 <= other.x0 and self.y0 <= other.y0
                and other.x1 <= self.x1 and other.y1 <= self.y1)

    def intersect(self, other: "Rect") -> "Rect":
        return Rect(max(self.x0, other.x0), max(self.y0, other.y0),
                    min(self.x1, other.x1), min(self.y1, other.y1))

    def dilate(self, m: int) -> "Rect":
        return Rect(self.x0 - m, self.y0 - m, self.x1 + m, self.y1 + m)

    def index(self, p) -> int:
        return (p[0] - self.x0) * self.height + (p[1] - self.y0)

    def point(self, idx: int) -> GridPoint:
        i, j = divmod(int(idx), self.height)
        return GridPoint(self.x0 + i, self.y0 + j)


# --------------------------------------------------------------------------
# weight grids


class WeightGrid:
    """Non-negative edge weights over ``window``.

    Subclasses provide ``_block`` (vectorised materialisation of a
    sub-rectangle) and may override ``weight`` with a cheaper scalar path.
    """

    def __init__(self, window: Rect, default_weight: float = math.inf):
        self.window = Rect(*window)
        self.default_weight = float(default_weight)

    def _check_key(self, key: EdgeKey):
        a, b = key.endpoints()
        if not (self.window.contains(a) and self.window.contains(b)):
            raise KeyError(f"edge {key} outside window {self.window}")

    def weight(self, key: EdgeKey) -> float:
        self._check_key(key)
        a, b = key.endpoints()
        h, v = self.block(Rect(a.x, a.y, b.x, b.y))
        return float(h[0, 0] if key.axis == Axis.H else v[0, 0])

    def block(self, rect: Rect) -> tuple[np.ndarray, np.ndarray]:
        rect = Rect(*rect)
        if rect.is_empty() or not self.window.contains_rect(rect):
            raise KeyError(f"block {rect} not inside window {self.window}")
        h, v = self._block(rect)
        return (np.ascontiguousarray(h, dtype=np.float64),
                np.ascontiguousarray(v, dtype=np.float64))

    def _block(self, rect: Rect):
        raise NotImplementedError

    def dense(self, rect: Rect | None = None) -> "DenseWeights":
        rect = self.window if rect is None else Rect(*rect)
        h, v = self.block(rect)
        return DenseWeights(rect, h, v, self.default_weight)


class DenseWeights(WeightGrid):
    def __init__(self, window: Rect, h, v, default_weight: float = math.inf):
        super().__init__(window, default_weight)
        h = np.asarray(h, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        W, H = self.window.width, self.window.height
        if h.shape != (W - 1, H) or v.shape != (W, H - 1):
            raise ValueError(f"weight arrays {h.shape}, {v.shape} do not fit a {W}x{H} window")
        if (h < 0).any() or (v < 0).any() or np.isnan(h).any() or np.isnan(v).any():
            raise ValueError("edge weights must be non-negative")
        self.h, self.v = h, v

    @classmethod
    def constant(cls, window: Rect, value: float) -> "DenseWeights":
        window = Rect(*window)
        W, H = window.width, window.height
        return cls(window, np.full((W - 1, H), float(value)), np.full((W, H - 1), float(value)))

    def weight(self, key: EdgeKey) -> float:
        self._check_key(key)
        i, j = key.base.x - self.window.x0, key.base.y - self.window.y0
        return float(self.h[i, j] if key.axis == Axis.H else self.v[i, j])

    def _block(self, rect: Rect):
        i0, j0 = rect.x0 - self.window.x0, rect.y0 - self.window.y0
        return (self.h[i0:i0 + rect.width - 1, j0:j0 + rect.height],
                self.v[i0:i0 + rect.width, j0:j0 + rect.height - 1])


class FunctionWeights(WeightGrid):
    """Lazy weights from a scalar ``EdgeKey -> float`` function (small windows)."""

    def __init__(self, window: Rect, fn, default_weight: float = math.inf):
        super().__init__(window, default_weight)
        self.fn = fn

    def weight(self, key: EdgeKey) -> float:
        self._check_key(key)
        w = float(self.fn(key))
        if not w >= 0:
            raise ValueError(f"negative or NaN weight {w} at {key}")
        return w

    def _block(self, rect: Rect):
        W, H = rect.width, rect.height
        h = np.empty((W - 1, H))
        v = np.empty((W, H - 1))
        for i in range(W - 1):
            for j in range(H):
                h[i, j] = self.weight(EdgeKey(GridPoint(rect.x0 + i, rect.y0 + j), Axis.H))
        for i in range(W):
            for j in range(H - 1):
                v[i, j] = self.weight(EdgeKey(GridPoint(rect.x0 + i, rect.y0 + j), Axis.V))
        return h, v


# --------------------------------------------------------------------------
# Dijkstra kernel (indexed binary heap, ties broken on flat index)


@njit(cache=True, inline="always")
def _less(dist, a, b):
    da, db = dist[a], dist[b]
    return da < db or (da == db and a < b)


@njit(cache=True)
def _sift_up(heap, pos, dist, k):
    node = heap[k]
    while k > 0:
        parent = (k - 1) >> 1
        p = heap[parent]
        if _less(dist, node, p):
            heap[k] = p
            pos[p] = k
            k = parent
        else:
            break
    heap[k] = node
    pos[node] = k


@njit(cache=True)
def _sift_down(heap, pos, dist, k, size):
    node = heap[k]
    while True:
        c = 2 * k + 1
        if c >= size:
            break
        if c + 1 < size and _less(dist, heap[c + 1], heap[c]):
            c += 1
        if _less(dist, heap[c], node):
            heap[k] = heap[c]
            pos[heap[k]] = k
            k = c
        else:
            break
    heap[k] = node
    pos[node] = k


@njit(cache=True, nogil=True)
def _dijkstra(h, v, src, targets, limit):
    W = v.shape[0]
    H = h.shape[1]
    N = W * H
    dist = np.full(N, np.inf)
    pred = np.zeros(N, np.int8)
    settled = np.zeros(N, np.bool_)
    pos = np.full(N, -1, np.int64)
    heap = np.empty(N, np.int64)
    is_target = np.zeros(N, np.bool_)
    remaining = 0
    for t in targets:
        if not is_target[t]:
            is_target[t] = True
            remaining += 1
    dist[src] = 0.0
    heap[0] = src
    pos[src] = 0
    size = 1
    while size > 0:
        u = heap[0]
        du = dist[u]
        if du > limit:
            break
        size -= 1
        pos[u] = -1
        if size > 0:
            heap[0] = heap[size]
            _sift_down(heap, pos, dist, 0, size)
        settled[u] = True
        if is_target[u]:
            remaining -= 1
            if remaining == 0:
                break
        i = u // H
        j = u - i * H
        for code in range(1, 5):
            if code == 1:
                if i == 0:
                    continue
                nb = u - H
                w = h[i - 1, j]
            elif code == 2:
                if i == W - 1:
                    continue
                nb = u + H
                w = h[i, j]
            elif code == 3:
                if j == 0:
                    continue
                nb = u - 1
                w = v[i, j - 1]
            else:
                if j == H - 1:
                    continue
                nb = u + 1
                w = v[i, j]
            if settled[nb]:
                continue
            nd = du + w
            if nd < dist[nb]:
                dist[nb] = nd
                # code stored from the neighbour's side: where its predecessor sits
                pred[nb] = (2, 1, 4, 3)[code - 1]
                if pos[nb] < 0:
                    heap[size] = nb
                    pos[nb] = size
                    size += 1
                    _sift_up(heap, pos, dist, size - 1)
                else:
                    _sift_up(heap, pos, dist, pos[nb])
    for k in range(N):
        if not settled[k]:
            dist[k] = np.inf
            pred[k] = 0
    return dist, pred


# pred code -> offset of the predecessor (1: -x, 2: +x, 3: -y, 4: +y)
_PRED_OFFSET = {1: (-1, 0), 2: (1, 0), 3: (0, -1), 4: (0, 1)}


class DistanceField:
    """Single-source distances over a rectangle plus the shortest-path tree.

    Only settled vertices carry finite distances; the rest read as ``inf``.
    """

    def __init__(self, source: GridPoint, region: Rect, dist: np.ndarray, pred: np.ndarray,
                 weights: tuple[np.ndarray, np.ndarray] | None = None):
        self.source = GridPoint(*source)
        self.region = Rect(*region)
        self.dist = dist.reshape(self.region.width, self.region.height)
        self.pred = pred.reshape(self.region.width, self.region.height)
        self._weights = weights

    def __getitem__(self, p) -> float:
        if not self.region.contains(p):
            raise KeyError(f"{tuple(p)} outside {self.region}")
        return float(self.dist[p[0] - self.region.x0, p[1] - self.region.y0])

    def predecessor(self, p) -> GridPoint | None:
        code = int(self.pred[p[0] - self.region.x0, p[1] - self.region.y0])
        if code == 0:
            return None
        dx, dy = _PRED_OFFSET[code]
        return GridPoint(p[0] + dx, p[1] + dy)

    def trace(self, target) -> list[GridPoint]:
        target = GridPoint(*target)
        if not math.isfinite(self[target]):
            raise Unreachable(f"{target} not reached from {self.source} within {self.region}")
        path = [target]
        p = target
        while p != self.source:
            p = self.predecessor(p)
            path.append(p)
        path.reverse()
        return path

    def settled_points(self) -> np.ndarray:
        ii, jj = np.nonzero(np.isfinite(self.dist))
        return np.column_stack([ii + self.region.x0, jj + self.region.y0])

    def to_csv(self, path):
        pts = self.settled_points()
        d = self.dist[pts[:, 0] - self.region.x0, pts[:, 1] - self.region.y0]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "dist"])
            for (x, y), dd in zip(pts.tolist(), d.tolist()):
                w.writerow([x, y, repr(dd)])

    def to_jsonl(self, path):
        pts = self.settled_points()
        d = self.dist[pts[:, 0] - self.region.x0, pts[:, 1] - self.region.y0]
        with open(path, "w") as fh:
            for (x, y), dd in zip(pts.tolist(), d.tolist()):
                fh.write(json.dumps({"x": x, "y": y, "dist": dd}) + "\n")


def distance_field(weights: WeightGrid, source, region: Rect | None = None,
                   targets: Iterable = (), limit: float = math.inf) -> DistanceField:
    """Dijkstra from ``source`` over ``region`` (default: the whole window).

    Stops once every target is settled or the frontier passes ``limit``.
    """
    source = GridPoint.of(*source)
    region = weights.window if region is None else Rect(*region).intersect(weights.window)
    if not region.contains(source):
        raise KeyError(f"source {source} outside region {region}")
    tl = [region.index(t) for t in targets if region.contains(t)]
    h, v = weights.block(region)
    dist, pred = _dijkstra(h, v, region.index(source), np.asarray(tl, dtype=np.int64), float(limit))
    return DistanceField(source, region, dist, pred, (h, v))


def corridor(weights: WeightGrid, source, target, margin: float) -> Rect:
    if margin < 0:
        raise ValueError("corridor margin must be non-negative")
    return Rect.around([source, target], margin).intersect(weights.window)


def default_margin(source, target) -> float:
    return 0.3 * math.dist(source, target)


def shortest_dist(weights: WeightGrid, source, target, corridor_margin: float | None = None) -> float:
    """Exact shortest-path length inside the corridor around ``source``-``target``.

    The corridor is the bounding box of the two points dilated by
    ``corridor_margin`` (default ``0.3 * |source - target|``) and clipped to
    the window.  Raises :class:`Unreachable` if the target is cut off.
    """
    source, target = GridPoint.of(*source), GridPoint.of(*target)
    for p in (source, target):
        if not weights.window.contains(p):
            raise KeyError(f"{p} outside window {weights.window}")
    m = default_margin(source, target) if corridor_margin is None else corridor_margin
    field = distance_field(weights, source, corridor(weights, source, target, m), [target])
    d = field[target]
    if not math.isfinite(d):
        raise Unreachable(f"{target} unreachable from {source} in corridor margin {m}")
    return d


def shortest_path_trace(weights: WeightGrid, source, target,
                        corridor_margin: float | None = None) -> list[GridPoint]:
    source, target = GridPoint.of(*source), GridPoint.of(*target)
    m = default_margin(source, target) if corridor_margin is None else corridor_margin
    field = distance_field(weights, source, corridor(weights, source, target, m), [target])
    return field.trace(target)


def path_weight(weights: WeightGrid, path: Sequence) -> float:
    total = 0.0
    for a, b in zip(path[:-1], path[1:]):
        total += weights.weight(EdgeKey.between(a, b))
    return total


def stable_shortest_dist(weights: WeightGrid, source, target, rel_tol: float = 1e-3):
    """Corridor distance at 0.3x plus the 0.45x stability re-run.

    Returns ``(dist, rel_change, stable)``.
    """
    r = math.dist(source, target)
    d1 = shortest_dist(weights, source, target, 0.3 * r)
    d2 = shortest_dist(weights, source, target, 0.45 * r)
    change = abs(d1 - d2) / d2 if d2 > 0 else 0.0
    return d2, change, change < rel_tol


def certified_margin(source, target, upper: float, min_weight: float) -> float:
    """Corridor margin beyond which no path can beat ``upper``.

    A path leaving the bounding box dilated by ``m`` uses at least
    ``L1 + 2m`` edges, each weighing at least ``min_weight``.
    """
    if min_weight <= 0:
        raise ValueError("certification needs a positive minimum edge weight")
    l1 = abs(source[0] - target[0]) + abs(source[1] - target[1])
    return max(0.0, (upper / min_weight - l1) / 2.0)


def certified_distances(weights: WeightGrid, source, targets: Sequence, min_weight: float,
                        pilot_margin: float = 0.1) -> np.ndarray:
    """Exact distances from ``source`` to each target on the full window.

    A pilot corridor run gives upper bounds; the final region is widened until
    it contains the certified corridor of every target, so restricting the
    search to it cannot change any of the returned distances.
    """
    source = GridPoint.of(*source)
    targets = [GridPoint.of(*t) for t in targets]
    r = max(math.dist(source, t) for t in targets)
    region = Rect.around([source, *targets], pilot_margin * r + 1).intersect(weights.window)
    while True:
        field = distance_field(weights, source, region, targets)
        d = np.array([field[t] for t in targets])
        need = Rect.around([source], 0)
        for t, dt in zip(targets, d):
            if not math.isfinite(dt):
                raise Unreachable(f"{t} unreachable from {source}")
            m = certified_margin(source, t, dt, min_weight)
            rt = Rect.around([source, t], m).intersect(weights.window)
            need = Rect(min(need.x0, rt.x0), min(need.y0, rt.y0), max(need.x1, rt.x1), max(need.y1, rt.y1))
        if region.contains_rect(need):
            return d
        region = Rect(min(need.x0, region.x0), min(need.y0, region.y0),
                      max(need.x1, region.x1), max(need.y1, region.y1))


# --------------------------------------------------------------------------
# monotone paths


@njit(cache=True, nogil=True)
def _monotone_dp(h, v):
    W = v.shape[0]
    H = h.shape[1]
    dp = np.empty((W, H))
    dp[0, 0] = 0.0
    for j in range(1, H):
        dp[0, j] = dp[0, j - 1] + v[0, j - 1]
    for i in range(1, W):
        dp[i, 0] = dp[i - 1, 0] + h[i - 1, 0]
        for j in range(1, H):
            a = dp[i - 1, j] + h[i - 1, j]
            b = dp[i, j - 1] + v[i, j - 1]
            dp[i, j] = a if a <= b else b
    return dp


def oriented_block(weights: WeightGrid, u, v):
    """Weights of the u-v bounding box re-indexed so that paths run +x, +y from u."""
    rect = Rect.around([u, v])
    h, vv = weights.block(rect)
    if v[0] < u[0]:
        h, vv = h[::-1, :], vv[::-1, :]
    if v[1] < u[1]:
        h, vv = h[:, ::-1], vv[:, ::-1]
    return np.ascontiguousarray(h), np.ascontiguousarray(vv)


def monotone_field(weights: WeightGrid, u, v) -> np.ndarray:
    """monodist from ``u`` to every vertex of the u-v box (oriented away from u)."""
    h, vv = oriented_block(weights, u, v)
    return _monotone_dp(h, vv)


def monodist(weights: WeightGrid, u, v) -> float:
    """Minimum weight over lattice paths from u to v with exactly |u-v|_1 edges."""
    u, v = GridPoint.of(*u), GridPoint.of(*v)
    for p in (u, v):
        if not weights.window.contains(p):
            raise KeyError(f"{p} outside window {weights.window}")
    if u == v:
        return 0.0
    return float(monotone_field(weights, u, v)[-1, -1])
