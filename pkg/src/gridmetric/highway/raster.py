"""Rasterisation of a segment into a grid staircase (its highway).

A vertex ``v`` belongs to the highway when the segment meets the unit square
centred on ``v``.  For an x-major segment (|slope| <= 1) each column ``cx``
covers the x-range ``[cx - 0.5, cx + 0.5]`` clipped to the segment; the
segment's y-values there are computed from the column boundaries, which are
shared by neighbouring columns, so adjacent columns overlap in exactly one
row.  The result is a 4-connected monotone staircase with no 2x2 block.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from ..grid import EdgeKey, GridPoint
from .lines import highway_weight


@njit(cache=True, inline="always")
def _row_range(ya, yb):
    lo, hi = min(ya, yb), max(ya, yb)
    return math.floor(lo - 0.5) + 1, math.floor(hi + 0.5)


@njit(cache=True)
def _raster(px, py, qx, qy, c_lo, c_hi):
    """Cells of segment p-q, major-axis coordinates restricted to [c_lo, c_hi].

    Returns ``(cells, swap)``: cells as (major, minor) pairs in major order,
    ``swap`` true when the major axis is y.
    """
    swap = abs(qy - py) > abs(qx - px)
    if swap:
        px, py, qx, qy = py, px, qy, qx
    if qx < px:
        px, py, qx, qy = qx, qy, px, py
    a = (qy - py) / (qx - px) if qx > px else 0.0
    first = math.floor(px - 0.5) + 1
    last = math.floor(qx + 0.5)
    first = max(first, c_lo)
    last = min(last, c_hi)
    cap = 0
    for cx in range(first, last + 1):
        xa = max(px, cx - 0.5)
        xb = min(qx, cx + 0.5)
        r0, r1 = _row_range(py + (xa - px) * a, py + (xb - px) * a)
        cap += r1 - r0 + 1
    cells = np.empty((max(cap, 0), 2), np.int64)
    k = 0
    for cx in range(first, last + 1):
        xa = max(px, cx - 0.5)
        xb = min(qx, cx + 0.5)
        r0, r1 = _row_range(py + (xa - px) * a, py + (xb - px) * a)
        if a >= 0:
            for cy in range(r0, r1 + 1):
                cells[k, 0] = cx
                cells[k, 1] = cy
                k += 1
        else:
            for cy in range(r1, r0 - 1, -1):
                cells[k, 0] = cx
                cells[k, 1] = cy
                k += 1
    return cells[:k], swap


def raster_cells(p, q, lo=-(2**62), hi=2**62) -> np.ndarray:
    """Staircase vertices ``(x, y)`` of segment p-q in path order.

    ``lo``/``hi`` restrict the major-axis coordinate (for windowed work).
    """
    if p[0] == q[0] and p[1] == q[1]:
        raise ValueError("degenerate segment")
    cells, swap = _raster(float(p[0]), float(p[1]), float(q[0]), float(q[1]), int(lo), int(hi))
    return cells[:, ::-1].copy() if swap else cells


def rasterize_highway(p, q) -> list[tuple[EdgeKey, float]]:
    """Edges of the highway of segment p-q, each with the segment's weight."""
    w = highway_weight(q[0] - p[0], q[1] - p[1])
    cells = raster_cells(p, q)
    out = []
    for a, b in zip(cells[:-1], cells[1:]):
        out.append((EdgeKey.between(GridPoint(int(a[0]), int(a[1])), GridPoint(int(b[0]), int(b[1]))), w))
    return out


def staircase_edges(cells: np.ndarray):
    """Split consecutive-cell steps into horizontal and vertical edge bases."""
    d = np.diff(cells, axis=0)
    if len(d) and not np.all(np.abs(d).sum(axis=1) == 1):
        raise AssertionError("rasterisation is not 4-connected")
    base = np.minimum(cells[:-1], cells[1:])
    horiz = d[:, 0] != 0
    return base[horiz], base[~horiz]


# --------------------------------------------------------------------------
# exhaustive check of the per-highway discrepancy


@njit(cache=True)
def _max_discrepancy(cells, w):
    n = cells.shape[0]
    worst = 0.0
    for a in range(n):
        ax, ay = cells[a, 0], cells[a, 1]
        for b in range(a + 1, n):
            dx = cells[b, 0] - ax
            dy = cells[b, 1] - ay
            # staircase: edges between a and b equal b - a
            e = abs(w * (b - a) - math.sqrt(dx * dx + dy * dy))
            if e > worst:
                worst = e
    return worst


def max_discrepancy(p, q) -> float:
    """Max over all vertex pairs of |highway distance - Euclidean distance|."""
    cells = raster_cells(p, q)
    return float(_max_discrepancy(cells, highway_weight(q[0] - p[0], q[1] - p[1])))

