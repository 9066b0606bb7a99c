"""Extension to a large square by concentric rings of tiles.

Block ``r`` is the square of side ``S_r = 1000 * 3**r`` covering
``[-S_r/2, S_r/2 - 1]^2``, so the central tile is ``[-500, 499]^2``.  Block
``r`` is a 3x3 arrangement of tiles of side ``S_{r-1}`` whose centre is
block ``r - 1``; the eight outer tiles form ring ``r``.  Inside each tile the
finite construction for its side length runs on the interior
``[1, side - 2]^2`` of the tile frame; edges touching the tile boundary or
joining two tiles weigh 2.
"""
from __future__ import annotations

import threading

import numpy as np

from ..grid import Rect, WeightGrid
from .assemble import OFF_HIGHWAY, HighwayWeights
from .lines import trim_lines
from .params import build_level_params

CENTRAL = 1000


def _rings_for(extent: int) -> int:
    r, s = 0, CENTRAL
    while s < extent:
        s *= 3
        r += 1
    if s != extent:
        raise ValueError(f"extent must be 1000 * 3**R, got {extent}")
    return r


def ring_tiles(extent: int) -> list[tuple[Rect, int, int]]:
    """``(tile rect, side, ring)`` for every tile, central tile first."""
    R = _rings_for(extent)
    tiles = [(Rect(-CENTRAL // 2, -CENTRAL // 2, CENTRAL // 2 - 1, CENTRAL // 2 - 1), CENTRAL, 0)]
    for r in range(1, R + 1):
        side = CENTRAL * 3 ** (r - 1)
        lo = -(CENTRAL * 3**r) // 2
        for a in range(3):
            for b in range(3):
                if a == 1 and b == 1:
                    continue
                x0, y0 = lo + a * side, lo + b * side
                tiles.append((Rect(x0, y0, x0 + side - 1, y0 + side - 1), side, r))
    return tiles


class RingTilingWeights(WeightGrid):
    """Lazy weights over ``[-extent/2, extent/2 - 1]^2``.

    Constructions are memoised per tile side; the memo only ever stores the
    value a fresh computation would produce, so concurrent readers agree.
    """

    MAX_EXTENT = 1000 * 3**6

    def __init__(self, extent: int):
        if extent > self.MAX_EXTENT:
            raise ValueError(f"extent {extent} beyond the limit {self.MAX_EXTENT}")
        self.rings = _rings_for(extent)
        half = extent // 2
        super().__init__(Rect(-half, -half, half - 1, half - 1), OFF_HIGHWAY)
        self.extent = extent
        self.tiles = ring_tiles(extent)
        self._cache: dict[int, HighwayWeights] = {}
        self._lock = threading.Lock()

    def tile_weights(self, side: int) -> HighwayWeights:
        """Highway weights of one tile in its own frame ``[0, side - 1]^2``."""
        with self._lock:
            hw = self._cache.get(side)
        if hw is None:
            interior = Rect(1, 1, side - 2, side - 2)
            segs = trim_lines(build_level_params(side), interior)
            hw = HighwayWeights(segs, interior)
            with self._lock:
                hw = self._cache.setdefault(side, hw)
        return hw

    def tile_of(self, p) -> tuple[Rect, int, int]:
        """Tile containing ``p``: walk out from the centre, O(#rings)."""
        if not self.window.contains(p):
            raise KeyError(f"{tuple(p)} outside {self.window}")
        x, y = p
        for r in range(self.rings + 1):
            half = CENTRAL * 3**r // 2
            if -half <= x < half and -half <= y < half:
                break
        if r == 0:
            return self.tiles[0]
        side = CENTRAL * 3 ** (r - 1)
        lo = -half
        a, b = (x - lo) // side, (y - lo) // side
        x0, y0 = lo + a * side, lo + b * side
        return Rect(x0, y0, x0 + side - 1, y0 + side - 1), side, r

    def _block(self, rect: Rect):
        W, H = rect.width, rect.height
        h = np.full((W - 1, H), OFF_HIGHWAY)
        v = np.full((W, H - 1), OFF_HIGHWAY)
        for tile, side, _ in self.tiles:
            inner = Rect(tile.x0 + 1, tile.y0 + 1, tile.x1 - 1, tile.y1 - 1)
            part = rect.intersect(inner)
            if part.is_empty():
                continue
            local = Rect(part.x0 - tile.x0, part.y0 - tile.y0, part.x1 - tile.x0, part.y1 - tile.y0)
            th, tv = self.tile_weights(side).block(local)
            i0, j0 = part.x0 - rect.x0, part.y0 - rect.y0
            h[i0:i0 + part.width - 1, j0:j0 + part.height] = th
            v[i0:i0 + part.width, j0:j0 + part.height - 1] = tv
        return h, v


def ring_tiling_weights(extent: int) -> RingTilingWeights:
    return RingTilingWeights(extent)
