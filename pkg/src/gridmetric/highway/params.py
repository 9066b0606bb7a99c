"""Level parameters of the hierarchical highway construction."""
from __future__ import annotations

import math
from dataclasses import dataclass


def iroot(n: int, r: int) -> int:
    """Largest integer ``k`` with ``k**r <= n``."""
    if n < 0:
        raise ValueError("negative radicand")
    k = int(round(n ** (1.0 / r)))
    while k**r > n:
        k -= 1
    while (k + 1) ** r <= n:
        k += 1
    return k


@dataclass(frozen=True)
class LevelParams:
    levels: tuple[int, ...]
    n: int

    def __post_init__(self):
        lv = tuple(int(k) for k in self.levels)
        object.__setattr__(self, "levels", lv)
        if not lv or any(k < 1 for k in lv):
            raise ValueError(f"levels must be positive integers, got {lv}")
        if any(a <= b for a, b in zip(lv, lv[1:])):
            raise ValueError(f"levels must be strictly decreasing, got {lv}")

    @property
    def m(self) -> int:
        return len(self.levels)

    def spacing(self, i: int) -> int:
        """Distance between parallel lines at level ``i`` (0-based)."""
        return self.levels[i] ** 4

    def angles(self, i: int):
        k = self.levels[i]
        return [math.pi * j / k for j in range(k)]


def build_level_params(n: int) -> LevelParams:
    """``k1 = floor(n^(1/5))``, ``k_{i+1} = floor(sqrt(k_i))``, stopping at the first ``k < 100``."""
    n = int(n)
    if n < 2:
        raise ValueError("n must be at least 2")
    ks = [iroot(n, 5)]
    while ks[-1] >= 100:
        ks.append(math.isqrt(ks[-1]))
    return LevelParams(tuple(ks), n)
