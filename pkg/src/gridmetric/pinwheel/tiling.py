"""Pinwheel triangles and their five-way substitution, in exact rationals.

A triangle is stored as ``(right-angle vertex, short-leg end, long-leg end)``;
the hypotenuse runs from the short-leg end to the long-leg end and its angle
is measured in that direction.  The canonical frame sends ``(0, 0)``,
``(0, 1)`` and ``(2, 0)`` to the three vertices, so a child or a parent is just
the image of fixed canonical points under the parent's affine frame.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from ..grid import Rect

GAMMA = math.atan(0.5)
TWO_PI = 2 * math.pi
ANGLE_TOL = 1e-9

Point = tuple  # (Fraction, Fraction)


class InvalidTriangle(ValueError):
    """Vertices do not form a 1:2:sqrt(5) right triangle."""


class ResourceLimit(RuntimeError):
    """A requested enumeration or tiling is beyond the configured limit."""


def _pt(p) -> Point:
    return (Fraction(p[0]), Fraction(p[1]))


def _sub(p, q):
    return (p[0] - q[0], p[1] - q[1])


def _cross(a, b):
    return a[0] * b[1] - a[1] * b[0]


def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1]


# canonical coordinates (x along half the long leg, y along the short leg)
_CHILDREN = (
    # F, C, A / G, A, D / G, F, D (central) / E, D, F / E, D, B
    ((Fraction(2, 5), Fraction(4, 5)), (0, 1), (0, 0)),
    ((Fraction(1, 5), Fraction(2, 5)), (0, 0), (1, 0)),
    ((Fraction(1, 5), Fraction(2, 5)), (Fraction(2, 5), Fraction(4, 5)), (1, 0)),
    ((Fraction(6, 5), Fraction(2, 5)), (1, 0), (Fraction(2, 5), Fraction(4, 5))),
    ((Fraction(6, 5), Fraction(2, 5)), (1, 0), (2, 0)),
)
CENTRAL = 2
# the triangle whose central child is the canonical one
_PARENT = ((0, -1), (-1, 1), (4, 1))


@dataclass(frozen=True)
class PinwheelTriangle:
    """Right triangle with legs 1 : 2; ``level`` counts substitutions above the atomic tiles."""

    vertices: tuple
    level: int = 0

    def __post_init__(self):
        vs = tuple(_pt(p) for p in self.vertices)
        if len(vs) != 3:
            raise InvalidTriangle("a pinwheel triangle has three vertices")
        object.__setattr__(self, "vertices", vs)
        a, c, b = vs
        s, l = _sub(c, a), _sub(b, a)
        ss, ll = _dot(s, s), _dot(l, l)
        if ss == 0:
            raise InvalidTriangle(f"degenerate triangle {self.vertices}")
        if _dot(s, l) == 0 and ll == 4 * ss:
            return
        # inexact inputs: 1e-9 relative
        fs, fl = math.sqrt(float(ss)), math.sqrt(float(ll))
        if abs(float(_dot(s, l))) > 1e-9 * fs * fl or abs(fl / fs - 2) > 2e-9:
            raise InvalidTriangle(f"{self.vertices} is not a 1:2:sqrt(5) right triangle")

    @classmethod
    def seed(cls, scale=1, level: int = 0) -> "PinwheelTriangle":
        """``A = (0, 0)``, ``B = (2 scale, 0)``, ``C = (0, scale)``."""
        s = Fraction(scale)
        return cls(((0, 0), (0, s), (2 * s, 0)), level)

    # -- geometry -----------------------------------------------------------
    @property
    def right(self):
        return self.vertices[0]

    @property
    def short_end(self):
        return self.vertices[1]

    @property
    def long_end(self):
        return self.vertices[2]

    @property
    def chirality(self) -> str:
        """``left`` when the long leg is a counter-clockwise turn from the short leg."""
        a, c, b = self.vertices
        return "left" if _cross(_sub(c, a), _sub(b, a)) > 0 else "right"

    @property
    def hypotenuse_angle(self) -> float:
        (cx, cy), (bx, by) = self.vertices[1], self.vertices[2]
        return math.atan2(float(by - cy), float(bx - cx)) % TWO_PI

    @property
    def area(self) -> Fraction:
        a, c, b = self.vertices
        return abs(_cross(_sub(c, a), _sub(b, a))) / 2

    def side_lengths(self) -> tuple[float, float, float]:
        a, c, b = self.vertices
        return (math.sqrt(float(_dot(_sub(c, a), _sub(c, a)))),
                math.sqrt(float(_dot(_sub(b, a), _sub(b, a)))),
                math.sqrt(float(_dot(_sub(b, c), _sub(b, c)))))

    def centroid(self) -> Point:
        a, c, b = self.vertices
        return ((a[0] + b[0] + c[0]) / 3, (a[1] + b[1] + c[1]) / 3)

    def frame(self, x, y) -> Point:
        """Image of canonical ``(x, y)``."""
        a, c, b = self.vertices
        return (a[0] + x * (b[0] - a[0]) / 2 + y * (c[0] - a[0]),
                a[1] + x * (b[1] - a[1]) / 2 + y * (c[1] - a[1]))

    def edges(self):
        a, c, b = self.vertices
        return ((a, c), (a, b), (c, b))

    def _oriented(self):
        a, c, b = self.vertices
        return (a, c, b) if _cross(_sub(c, a), _sub(b, a)) > 0 else (a, b, c)

    def contains(self, p) -> bool:
        """Closed containment, exact."""
        p = _pt(p)
        v = self._oriented()
        return all(_cross(_sub(v[(i + 1) % 3], v[i]), _sub(p, v[i])) >= 0 for i in range(3))

    def edge_clearance(self, p) -> float:
        """Signed distance from ``p`` to the nearest side line (positive inside)."""
        v = self._oriented()
        best = math.inf
        for i in range(3):
            e = _sub(v[(i + 1) % 3], v[i])
            d = float(_cross(e, _sub(_pt(p), v[i]))) / math.sqrt(float(_dot(e, e)))
            best = min(best, d)
        return best

    def meets_rect(self, rect: Rect) -> bool:
        """Closed intersection with an axis-aligned rectangle (separating axes, exact)."""
        xs = [p[0] for p in self.vertices]
        ys = [p[1] for p in self.vertices]
        if max(xs) < rect.x0 or min(xs) > rect.x1 or max(ys) < rect.y0 or min(ys) > rect.y1:
            return False
        corners = [(rect.x0, rect.y0), (rect.x1, rect.y0), (rect.x0, rect.y1), (rect.x1, rect.y1)]
        v = self._oriented()
        for i in range(3):
            e = _sub(v[(i + 1) % 3], v[i])
            if all(_cross(e, _sub(q, v[i])) < 0 for q in corners):
                return False
        return True

    def float_vertices(self) -> np.ndarray:
        return np.array([[float(x), float(y)] for x, y in self.vertices])

    def to_dict(self) -> dict:
        return {"vertices": [[str(x), str(y)] for x, y in self.vertices],
                "level": self.level, "chirality": self.chirality}


def subdivide(t: PinwheelTriangle) -> list[PinwheelTriangle]:
    """The five children; index 2 is the central child."""
    return [PinwheelTriangle(tuple(t.frame(*p) for p in ch), t.level - 1) for ch in _CHILDREN]


def parent_of(t: PinwheelTriangle) -> PinwheelTriangle:
    """The triangle whose central child is ``t``."""
    return PinwheelTriangle(tuple(t.frame(*p) for p in _PARENT), t.level + 1)


class Disk(NamedTuple):
    center: tuple
    radius: float


def _covers(t: PinwheelTriangle, window) -> bool:
    if isinstance(window, Disk):
        return t.contains(window.center) and t.edge_clearance(window.center) >= window.radius
    if isinstance(window, Rect):
        pts = [(window.x0, window.y0), (window.x1, window.y0), (window.x0, window.y1), (window.x1, window.y1)]
    else:
        pts = list(window)
    return all(t.contains(p) for p in pts)


def expand_to_cover(seed: PinwheelTriangle, window, max_expansions: int = 200) -> PinwheelTriangle:
    """Smallest ancestor (through central children) containing ``window``.

    ``window`` is a :class:`Rect`, a :class:`Disk` or a sequence of points.
    The number of expansions is ``result.level - seed.level``.
    """
    t = seed
    for _ in range(max_expansions + 1):
        if _covers(t, window):
            return t
        t = parent_of(t)
    raise ResourceLimit(f"window not covered after {max_expansions} expansions")


# --------------------------------------------------------------------------
# orientations


def _float_children(tri: np.ndarray) -> np.ndarray:
    """Vectorised subdivision of ``(N, 3, 2)`` float triangles."""
    a, c, b = tri[:, 0], tri[:, 1], tri[:, 2]
    out = np.empty((len(tri) * 5, 3, 2))
    for k, ch in enumerate(_CHILDREN):
        for m, (x, y) in enumerate(ch):
            out[k::5, m] = a + float(x) * (b - a) / 2 + float(y) * (c - a)
    return out


def angles_of_descendants(t: PinwheelTriangle, k: int, max_k: int = 10) -> np.ndarray:
    """Sorted distinct hypotenuse angles (mod 2 pi) of the 5**k level-(level-k) descendants."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if k > max_k:
        raise ResourceLimit(f"5**{k} descendants exceed the limit 5**{max_k}")
    tri = t.float_vertices()[None]
    for _ in range(k):
        tri = _float_children(tri)
    d = tri[:, 2] - tri[:, 1]
    ang = np.sort(np.mod(np.arctan2(d[:, 1], d[:, 0]), TWO_PI))
    keep = np.ones(len(ang), bool)
    keep[1:] = np.diff(ang) > ANGLE_TOL
    ang = ang[keep]
    if len(ang) > 1 and ang[0] + TWO_PI - ang[-1] <= ANGLE_TOL:
        ang = ang[:-1]
    return ang


def angle_distance(a, b) -> np.ndarray:
    d = np.mod(np.asarray(a) - np.asarray(b), TWO_PI)
    return np.minimum(d, TWO_PI - d)


def progression(theta: float, k: int) -> np.ndarray:
    """``theta + (2t - k) gamma`` for ``t = 0..k``, mod 2 pi."""
    return np.mod(theta + (2 * np.arange(k + 1) - k) * GAMMA, TWO_PI)


def progression_covered(angles: Sequence[float], theta: float, k: int, tol: float = ANGLE_TOL) -> bool:
    angles = np.asarray(angles)
    return all(angle_distance(angles, a).min() <= tol for a in progression(theta, k))


# --------------------------------------------------------------------------
# tiling a window


def tile_window(window: Rect, atomic_scale=25, max_triangles: int = 200_000):
    """Atomic (level 0) triangles meeting ``window`` and the covering ancestor.

    The seed ``A=(0,0), B=(2s,0), C=(0,s)`` is atomic; the window is covered by
    expanding through central children and then subdivided back down, pruning
    triangles that miss the window.
    """
    seed = PinwheelTriangle.seed(atomic_scale)
    top = expand_to_cover(seed, window)
    layer = [top]
    while layer[0].level > 0:
        nxt = []
        for t in layer:
            nxt.extend(c for c in subdivide(t) if c.meets_rect(window))
        if len(nxt) > max_triangles:
            raise ResourceLimit(f"{len(nxt)} triangles at level {nxt[0].level} exceed {max_triangles}")
        layer = nxt
    return layer, top
