"""Small shared numerics/formatting helpers."""

from __future__ import annotations

import math


class CompensatedAccumulator:
    """Streaming Neumaier accumulator for long scalar reductions."""

    __slots__ = ("s", "c")

    def __init__(self, start: float = 0.0):
        self.s = float(start)
        self.c = 0.0

    def add(self, v: float) -> None:
        t = self.s + v
        if abs(self.s) >= abs(v):
            self.c += (self.s - t) + v
        else:
            self.c += (v - t) + self.s
        self.s = t

    def total(self) -> float:
        return self.s + self.c


def fmt18(x) -> str:
    """Format a number with 18 significant decimal digits."""
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return str(x)
    return f"{x:.17e}"
