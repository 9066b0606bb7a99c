"""Highway weight grids: every highway edge carries its segment weight, all else 2."""
from __future__ import annotations

import numpy as np

from ..grid import Rect, WeightGrid
from .lines import LeveledSegments, trim_lines
from .params import LevelParams, build_level_params
from .raster import raster_cells

OFF_HIGHWAY = 2.0


class HighwayCollision(RuntimeError):
    """Two different highways touch the same grid vertex."""


class HighwayWeights(WeightGrid):
    """Lazy highway weights; blocks are rasterised on demand."""

    def __init__(self, segments: LeveledSegments, window: Rect | None = None,
                 default_weight: float = OFF_HIGHWAY):
        super().__init__(segments.window if window is None else window, default_weight)
        self.segments = segments
        s = segments
        self._bx0 = np.minimum(s.x0, s.x1) - 1
        self._bx1 = np.maximum(s.x0, s.x1) + 1
        self._by0 = np.minimum(s.y0, s.y1) - 1
        self._by1 = np.maximum(s.y0, s.y1) + 1

    def segments_near(self, rect: Rect) -> np.ndarray:
        return np.flatnonzero((self._bx1 >= rect.x0) & (self._bx0 <= rect.x1)
                              & (self._by1 >= rect.y0) & (self._by0 <= rect.y1))

    def _block(self, rect: Rect):
        W, H = rect.width, rect.height
        h = np.full((W - 1, H), self.default_weight)
        v = np.full((W, H - 1), self.default_weight)
        owner = np.full((W, H), -1, np.int64)
        s = self.segments
        for r in self.segments_near(rect):
            p, q = (s.x0[r], s.y0[r]), (s.x1[r], s.y1[r])
            xmajor = abs(q[0] - p[0]) >= abs(q[1] - p[1])
            lo, hi = (rect.x0, rect.x1) if xmajor else (rect.y0, rect.y1)
            cells = raster_cells(p, q, lo - 1, hi + 1)
            if not len(cells):
                continue
            ci = cells[:, 0] - rect.x0
            cj = cells[:, 1] - rect.y0
            inside = (ci >= 0) & (ci < W) & (cj >= 0) & (cj < H)
            prev = owner[ci[inside], cj[inside]]
            clash = (prev >= 0) & (prev != r)
            if clash.any():
                k = np.flatnonzero(inside)[np.flatnonzero(clash)[0]]
                raise HighwayCollision(
                    f"vertex {tuple(cells[k])} lies on segments {int(prev[clash][0])} and {int(r)}")
            owner[ci[inside], cj[inside]] = r
            both = inside[:-1] & inside[1:]
            d = np.diff(cells, axis=0)
            bi = np.minimum(ci[:-1], ci[1:])
            bj = np.minimum(cj[:-1], cj[1:])
            hm = both & (d[:, 0] != 0)
            vm = both & (d[:, 1] != 0)
            h[bi[hm], bj[hm]] = s.weight[r]
            v[bi[vm], bj[vm]] = s.weight[r]
        return h, v


def assemble_weights(segments: LeveledSegments, window: Rect | None = None) -> HighwayWeights:
    return HighwayWeights(segments, window)


def build_highways(n: int | None = None, window: Rect | None = None,
                   params: LevelParams | None = None):
    """Segments and lazy weights of the construction on ``[0, n-1]^2`` (or ``window``)."""
    params = build_level_params(n) if params is None else params
    if window is None:
        window = Rect(0, 0, params.n - 1, params.n - 1)
    segs = trim_lines(params, window)
    return segs, HighwayWeights(segs, window)


def all_cells(segments: LeveledSegments):
    """Concatenated raster cells of every segment and the owning row index."""
    cells, owner = [], []
    for r in range(len(segments)):
        c = raster_cells(*segments.endpoints(r))
        cells.append(c)
        owner.append(np.full(len(c), r, np.int64))
    if not cells:
        return np.zeros((0, 2), np.int64), np.zeros(0, np.int64)
    return np.concatenate(cells), np.concatenate(owner)


def collision_audit(segments: LeveledSegments) -> int:
    """Number of grid vertices shared by rasterisations of different segments."""
    cells, owner = all_cells(segments)
    if not len(cells):
        return 0
    key = (cells[:, 0] << 32) ^ (cells[:, 1] & 0xFFFFFFFF)
    order = np.lexsort((owner, key))
    key, owner = key[order], owner[order]
    same = key[1:] == key[:-1]
    return int(np.count_nonzero(same & (owner[1:] != owner[:-1])))
