"""Gaussian density, cell geometry, and the collage budget schedule.

The collage construction splits R^d into integer-shifted cells k + I^d and
assigns cell k a node budget

    n_k = rho * n * exp(-delta * |k|^2 / (2a))   for |k| < xi_n,  else 0,

with xi_n = sqrt(2a log(n) / delta) and rho = 2^-d (1 - exp(-delta/(2a)))^d.
This normalization guarantees sum_k n_k <= n, so the assembled rule never
exceeds the requested total budget.  The decay constant delta must satisfy
an admissibility condition tying it to the integrability exponent p; that
check lives in :func:`check_delta`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "gaussian_density",
    "RateParams",
    "Cell",
    "DeltaCheck",
    "check_delta",
    "default_delta",
    "BudgetSchedule",
    "budget_schedule",
]


def gaussian_density(x) -> float | np.ndarray:
    """Density of the standard Gaussian measure on R^d.

    Parameters
    ----------
    x : array_like
        A single point of shape ``(d,)`` (or a scalar for d=1), or a batch
        of points of shape ``(npoints, d)``.

    Returns
    -------
    float or ndarray
        ``(2 pi)^(-d/2) exp(-|x|^2 / 2)``, evaluated per point.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim == 1:
        d = arr.shape[0]
        return float((2.0 * np.pi) ** (-d / 2.0) * np.exp(-0.5 * np.dot(arr, arr)))
    if arr.ndim == 2:
        d = arr.shape[1]
        return (2.0 * np.pi) ** (-d / 2.0) * np.exp(-0.5 * np.einsum("ij,ij->i", arr, arr))
    raise ValueError("x must be a point or a 2-d batch of points")


@dataclass(frozen=True)
class RateParams:
    """Smoothness/rate parameters of a base cube quadrature family.

    ``a`` and ``b`` are the main and logarithmic exponents of the base
    family's convergence rate m^-a (log m)^b on the cube; ``alpha`` is the
    mixed smoothness order and ``p`` the integrability exponent of the
    target class.
    """

    alpha: int
    p: float
    a: float
    b: float
    d: int

    def __post_init__(self):
        if self.alpha < 1 or int(self.alpha) != self.alpha:
            raise ValueError("alpha must be a positive integer")
        if not (1.0 < self.p < math.inf):
            raise ValueError("p must lie in (1, inf)")
        if self.a <= 0:
            raise ValueError("a must be positive")
        if self.b < 0:
            raise ValueError("b must be nonnegative")
        if self.d < 1:
            raise ValueError("d must be >= 1")


@dataclass(frozen=True)
class Cell:
    """An integer-shifted, theta-dilated cube cell k + [-theta/2, theta/2]^d."""

    k: tuple
    theta: float = 1.0

    def __post_init__(self):
        if not (1.0 <= self.theta < 2.0):
            raise ValueError("theta must lie in [1, 2)")

    @property
    def d(self) -> int:
        return len(self.k)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        k = np.asarray(self.k, dtype=float)
        h = self.theta / 2.0
        return k - h, k + h


class DeltaCheck(NamedTuple):
    ok: bool
    constant: float | None
    tau: float | None


def default_delta(p: float) -> float:
    """Reproducible default decay constant for a given p.

    1/6 for p = 2; otherwise 60% of the admissibility ceiling (1 - 1/p)/2.
    """
    if p == 2.0:
        return 1.0 / 6.0
    return 0.6 * (1.0 - 1.0 / p) / 2.0


def check_delta(delta: float, p: float, theta: float = 1.0, kmax: int = 50) -> DeltaCheck:
    """Check admissibility of the budget decay constant ``delta``.

    The cell-wise restriction/multiplication estimates require, for some
    tau in (1, p) and a finite C > 0,

        exp(-(1 - 1/p)/2 * |k - s theta/2|^2)          <= C exp(-delta k^2)
        exp(|k + s theta/2|^2 / (2p) - k^2 / (2 tau))  <= C exp(-delta k^2)

    for all integers k (s = sign k, with sign 0 = +1).  Both bounds hold
    with a uniform C over all of Z iff delta stays strictly below the
    quadratic-coefficient ceilings (1 - 1/p)/2 and 1/(2 tau) - 1/(2p); the
    coordinatewise bound extends to Z^d with constant C^d.

    Parameters
    ----------
    delta, p, theta : float
        Candidate decay constant, integrability exponent, cell dilation.
    kmax : int
        Range of the finite scan used to extract the witness constant.

    Returns
    -------
    DeltaCheck
        ``(ok, constant, tau)`` where ``constant`` is the smallest C
        verified over the tau search grid on ``|k| <= kmax``.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if not (1.0 < p < math.inf):
        raise ValueError("p must lie in (1, inf)")
    if not (1.0 <= theta < 2.0):
        raise ValueError("theta must lie in [1, 2)")
    if kmax < 1:
        raise ValueError("kmax must be >= 1")

    ceiling = (1.0 - 1.0 / p) / 2.0
    if delta >= ceiling:
        return DeltaCheck(False, None, None)

    # tau fixed by the theory only as "some tau in (1, p)": scan a grid.
    taus = np.geomspace(1.0 + 1e-3, p - 1e-3, 32)
    ks = np.arange(-kmax, kmax + 1, dtype=float)
    sgn = np.where(ks >= 0, 1.0, -1.0)
    half = theta / 2.0

    exp1 = -0.5 * (1.0 - 1.0 / p) * (ks - sgn * half) ** 2 + delta * ks**2
    best_c = None
    best_tau = None
    for tau in taus:
        if delta >= 1.0 / (2.0 * tau) - 1.0 / (2.0 * p):
            continue
        exp2 = (ks + sgn * half) ** 2 / (2.0 * p) - ks**2 / (2.0 * tau) + delta * ks**2
        c = math.exp(max(exp1.max(), exp2.max()))
        if best_c is None or c < best_c:
            best_c = c
            best_tau = float(tau)
    if best_c is None:
        return DeltaCheck(False, None, None)
    return DeltaCheck(True, best_c, best_tau)


@dataclass(frozen=True, eq=False)
class BudgetSchedule:
    """Per-cell node budgets of the collage construction.

    ``cells`` holds the multi-indices k with |k| < xi in lexicographic
    order; ``budgets`` the matching real values n_k (flooring is deferred
    to rule construction so the schedule keeps its monotonicity).
    """

    n: float
    a: float
    delta: float
    d: int
    xi: float
    rho: float
    cells: np.ndarray     # (ncells, d) int64, lexicographic
    budgets: np.ndarray   # (ncells,) float

    def __post_init__(self):
        self.cells.flags.writeable = False
        self.budgets.flags.writeable = False

    def __len__(self) -> int:
        return self.cells.shape[0]

    def __iter__(self):
        for k, b in zip(self.cells, self.budgets):
            yield tuple(int(v) for v in k), float(b)

    def budget(self, k) -> float:
        """Budget n_k of cell k (0 for cells outside the schedule)."""
        k = np.asarray(k, dtype=float)
        r2 = float(np.dot(k, k))
        if r2 >= self.xi * self.xi:
            return 0.0
        return self.rho * self.n * math.exp(-self.delta * r2 / (2.0 * self.a))

    def total(self) -> float:
        """Sum of the real budgets (bounded by n)."""
        return math.fsum(self.budgets.tolist())

    def floor_total(self) -> int:
        """Total node count after per-cell flooring."""
        return int(np.floor(self.budgets).sum())

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "a": self.a,
            "delta": self.delta,
            "d": self.d,
            "xi": self.xi,
            "cells": [
                {"k": [int(v) for v in k], "budget": float(b)}
                for k, b in zip(self.cells, self.budgets)
            ],
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)
            fh.write("\n")


def budget_schedule(n: float, a: float, delta: float, d: int) -> BudgetSchedule:
    """Build the per-cell budget schedule for total budget ``n``.

    Cells are enumerated lexicographically; budgets decay as
    exp(-delta |k|^2 / (2a)) inside the ball |k| < xi_n and vanish outside.
    The floored budgets always sum to at most n.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if a <= 0:
        raise ValueError("a must be positive")
    if delta <= 0:
        raise ValueError("delta must be positive")
    if d < 1:
        raise ValueError("d must be >= 1")

    xi = math.sqrt(2.0 * a * math.log(n) / delta)
    rho = ((1.0 - math.exp(-delta / (2.0 * a))) / 2.0) ** d

    kmax = int(math.floor(xi))
    if xi == 0.0 or kmax < 0:
        cells = np.empty((0, d), dtype=np.int64)
        budgets = np.empty((0,), dtype=float)
        return BudgetSchedule(float(n), float(a), float(delta), int(d), xi, rho, cells, budgets)

    axes = [np.arange(-kmax, kmax + 1, dtype=np.int64)] * d
    mesh = np.meshgrid(*axes, indexing="ij")
    cells = np.stack([m.reshape(-1) for m in mesh], axis=1)  # already lexicographic
    r2 = (cells.astype(float) ** 2).sum(axis=1)
    mask = r2 < xi * xi
    cells = np.ascontiguousarray(cells[mask])
    budgets = rho * n * np.exp(-delta * r2[mask] / (2.0 * a))
    return BudgetSchedule(float(n), float(a), float(delta), int(d), xi, rho, cells, budgets)
