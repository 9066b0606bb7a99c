"""Edge-weight laws and i.i.d. sampled weight grids."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from ._rng import stream_key, uniform
from .grid import Axis, EdgeKey, Rect, WeightGrid

_KPOINT, _UNIFORM, _GAMMA, _EXPONENTIAL = 0, 1, 2, 3


@dataclass(frozen=True)
class KPointDistribution:
    """``P(w = values[i]) = probs[i]``."""

    probs: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        p = tuple(float(x) for x in self.probs)
        x = tuple(float(x) for x in self.values)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "values", x)
        if len(p) != len(x) or not p:
            raise ValueError("probs and values must be non-empty and of equal length")
        if any(q < 0 for q in p) or abs(sum(p) - 1.0) > 1e-12:
            raise ValueError(f"probabilities {p} must be non-negative and sum to 1")
        if any(not (v >= 0 and math.isfinite(v)) for v in x):
            raise ValueError(f"values {x} must be finite and non-negative")

    @classmethod
    def from_pairs(cls, pairs) -> "KPointDistribution":
        pairs = list(pairs)
        return cls(tuple(p for p, _ in pairs), tuple(x for _, x in pairs))

    @classmethod
    def two_sided(cls, eps: float) -> "KPointDistribution":
        """Mean-one law putting mass 1/2 on each of ``1 - eps`` and ``1 + eps``."""
        if not 0 <= eps <= 1:
            raise ValueError("eps must lie in [0, 1]")
        return cls((0.5, 0.5), (1.0 - eps, 1.0 + eps))

    @property
    def k(self) -> int:
        return len(self.probs)

    def mean(self) -> float:
        return float(np.dot(self.probs, self.values))

    def scaled(self, factor: float) -> "KPointDistribution":
        return KPointDistribution(self.probs, tuple(factor * x for x in self.values))

    def pairs(self):
        return list(zip(self.probs, self.values))

    def _params(self):
        cum = np.cumsum(self.probs)
        cum[-1] = 1.0
        return _KPOINT, np.concatenate([[self.k], cum, self.values]).astype(np.float64)

    def label(self) -> str:
        return "kpt:" + ",".join(f"{p!r},{x!r}" for p, x in self.pairs())


@dataclass(frozen=True)
class ContinuousDistribution:
    """``uniform(a, b)``, ``gamma(shape, scale)`` or ``exponential(rate)``."""

    variant: str
    params: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(x) for x in self.params))
        p = self.params
        if self.variant == "uniform":
            if len(p) != 2 or not 0 <= p[0] < p[1]:
                raise ValueError(f"uniform needs 0 <= a < b, got {p}")
        elif self.variant == "gamma":
            if len(p) != 2 or not (p[0] > 0 and p[1] > 0):
                raise ValueError(f"gamma needs shape > 0 and scale > 0, got {p}")
        elif self.variant == "exponential":
            if len(p) != 1 or not p[0] > 0:
                raise ValueError(f"exponential needs rate > 0, got {p}")
        else:
            raise ValueError(f"unknown variant {self.variant!r}")

    @classmethod
    def uniform(cls, a=0.0, b=1.0):
        return cls("uniform", (a, b))

    @classmethod
    def gamma(cls, shape, scale):
        return cls("gamma", (shape, scale))

    @classmethod
    def exponential(cls, rate=1.0):
        return cls("exponential", (rate,))

    def mean(self) -> float:
        p = self.params
        if self.variant == "uniform":
            return 0.5 * (p[0] + p[1])
        if self.variant == "gamma":
            return p[0] * p[1]
        return 1.0 / p[0]

    def _params(self):
        code = {"uniform": _UNIFORM, "gamma": _GAMMA, "exponential": _EXPONENTIAL}[self.variant]
        return code, np.asarray(self.params, dtype=np.float64)

    def label(self) -> str:
        return f"{self.variant}:" + ",".join(repr(x) for x in self.params)


D2 = KPointDistribution((0.44273, 0.55727), (0.41401, 4.75309))
D3 = KPointDistribution((0.34809, 0.25735, 0.39456), (0.20647, 2.51586, 9.32215))


def parse_distribution(text: str):
    """Parse ``2pt:p1,x1,p2,x2`` / ``kpt:...`` / ``uniform:a,b`` / ``gamma:k,theta`` / ``exp:rate``."""
    name, _, rest = text.partition(":")
    nums = [float(t) for t in rest.split(",")] if rest else []
    name = name.strip().lower()
    if name.endswith("pt"):
        if len(nums) % 2:
            raise ValueError(f"k-point law needs (p, x) pairs: {text!r}")
        if name[:-2].isdigit() and int(name[:-2]) != len(nums) // 2:
            raise ValueError(f"{text!r}: support size does not match the pair count")
        probs = nums[0::2]
        s = sum(probs)
        if abs(s - 1.0) > 1e-9:
            raise ValueError(f"probabilities in {text!r} sum to {s}")
        if abs(s - 1.0) > 1e-12:
            probs[-1] = 1.0 - sum(probs[:-1])
        return KPointDistribution(tuple(probs), tuple(nums[1::2]))
    if name == "uniform":
        return ContinuousDistribution.uniform(*nums)
    if name == "gamma":
        return ContinuousDistribution.gamma(*nums)
    if name in ("exp", "exponential"):
        return ContinuousDistribution.exponential(*nums)
    raise ValueError(f"unknown distribution {text!r}")


# --------------------------------------------------------------------------
# counter-based sampling kernels


@njit(cache=True, inline="always")
def _normal(key, x, y, word):
    u1 = uniform(key, x, y, word)
    u2 = uniform(key, x, y, word + 1)
    return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2)


@njit(cache=True)
def _gamma_draw(key, x, y, base, shape, scale):
    # Marsaglia-Tsang; shape < 1 boosted through shape + 1
    boost = 1.0
    a = shape
    word = base
    if shape < 1.0:
        boost = uniform(key, x, y, word) ** (1.0 / shape)
        word += 1
        a = shape + 1.0
    d = a - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    while True:
        z = _normal(key, x, y, word)
        u = uniform(key, x, y, word + 2)
        word += 3
        t = 1.0 + c * z
        if t <= 0.0:
            continue
        t = t * t * t
        if u > 0.0 and math.log(u) < 0.5 * z * z + d - d * t + d * math.log(t):
            return d * t * scale * boost


@njit(cache=True, inline="always")
def _draw(key, x, y, axis, kind, params):
    base = axis * 1000003
    if kind == 0:
        k = int(params[0])
        u = uniform(key, x, y, base)
        for i in range(k):
            if u < params[1 + i]:
                return params[1 + k + i]
        return params[2 * k]
    if kind == 1:
        u = uniform(key, x, y, base)
        return params[0] + (params[1] - params[0]) * u
    if kind == 2:
        return _gamma_draw(key, x, y, base, params[0], params[1])
    u = uniform(key, x, y, base)
    return -math.log(1.0 - u) / params[0]


@njit(cache=True, nogil=True)
def _sample_block(key, x0, y0, W, H, kind, params):
    h = np.empty((W - 1, H))
    v = np.empty((W, H - 1))
    for i in range(W - 1):
        for j in range(H):
            h[i, j] = _draw(key, x0 + i, y0 + j, 0, kind, params)
    for i in range(W):
        for j in range(H - 1):
            v[i, j] = _draw(key, x0 + i, y0 + j, 1, kind, params)
    return h, v


class SampledWeights(WeightGrid):
    """i.i.d. weights; the weight of an edge is a pure function of (key, EdgeKey)."""

    def __init__(self, law, window: Rect, key):
        super().__init__(window, math.nan)
        self.law = law
        self.key = np.uint64(key)
        self._kind, self._params = law._params()

    def weight(self, key: EdgeKey) -> float:
        self._check_key(key)
        h, v = _sample_block(self.key, key.base.x, key.base.y, 2, 2, self._kind, self._params)
        return float(h[0, 0] if key.axis == Axis.H else v[0, 0])

    def _block(self, rect: Rect):
        return _sample_block(self.key, rect.x0, rect.y0, rect.width, rect.height,
                             self._kind, self._params)


def sample_weight_grid(law, window: Rect, seed, *stream) -> SampledWeights:
    """i.i.d. weights from ``law`` over ``window``, reproducible from ``seed``.

    Extra ``stream`` words (e.g. ``"trial", 3``) select an independent sub-stream.
    """
    if not isinstance(law, (KPointDistribution, ContinuousDistribution)):
        raise TypeError(f"not a distribution: {law!r}")
    return SampledWeights(law, Rect(*window), stream_key(seed, "weights", *stream))
