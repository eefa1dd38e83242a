"""Assembly of full-space Gaussian quadrature rules from cube rules.

A base rule on the unit cube is copied into every cell of the budget
schedule: nodes are shifted by the cell index k and weights are multiplied
by the Gaussian density (direct variant), or the base rule is first
dilated by theta and additionally weighted by a smooth partition of unity
subordinate to the theta-dilated cells (partition variant).  Either way
the assembled rule has at most n nodes, all inside a ball of radius
theta sqrt(d)/2 + xi_n.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._util import CompensatedAccumulator, fmt18
from .core import BudgetSchedule, RateParams, budget_schedule, gaussian_density
from .cube_rules import DOMAIN_GAUSSIAN, DOMAIN_UNIT_CUBE, QuadratureRule

__all__ = [
    "UnitPartition",
    "bump_partition",
    "CollageRule",
    "collage_direct",
    "collage_partition",
    "integrate",
    "IntegrationError",
]


# ---------------------------------------------------------------------------
# Smooth partition of unity on theta-dilated cells
# ---------------------------------------------------------------------------


def _bump(t2: float) -> float:
    # exp(-1/(1-t^2)) for t^2 < 1, else 0; underflows to exactly 0.0 near the edge
    if t2 >= 1.0:
        return 0.0
    return math.exp(-1.0 / (1.0 - t2))


@dataclass(frozen=True)
class UnitPartition:
    """Evaluable smooth partition of unity {phi_k} subordinate to k + [-theta/2, theta/2]^d.

    phi_k(x) = B(x - k) / sum_j B(x - j) with the product mollifier
    B(y) = prod_i exp(-1/(1 - (2 y_i / theta)^2)) on its open support.  At
    any x at most 2^d neighbor terms are nonzero, and at least one is
    (theta > 1), so the normalizing sum never vanishes.
    """

    theta: float
    d: int

    def __post_init__(self):
        if not (1.0 < self.theta < 2.0):
            raise ValueError("theta must lie in (1, 2)")
        if self.d < 1:
            raise ValueError("d must be >= 1")

    def bump(self, y: np.ndarray) -> float:
        """Product mollifier B(y); support check is done on 2|y_i| >= theta exactly."""
        val = 1.0
        for yi in y:
            twice = 2.0 * abs(float(yi))
            if twice >= self.theta:
                return 0.0
            val *= _bump((twice / self.theta) ** 2)
            if val == 0.0:
                return 0.0
        return val

    def _neighbors(self, x: np.ndarray):
        half = self.theta / 2.0
        ranges = []
        for xi in x:
            lo = math.ceil(xi - half)
            hi = math.floor(xi + half)
            ranges.append(range(lo, hi + 1))
        return itertools.product(*ranges)

    def phi(self, k, x) -> float:
        """Value of phi_k at x, in [0, 1]."""
        k = np.asarray(k, dtype=float).reshape(-1)
        x = np.asarray(x, dtype=float).reshape(-1)
        if k.shape != (self.d,) or x.shape != (self.d,):
            raise ValueError(f"k and x must have length {self.d}")
        num = self.bump(x - k)
        if num == 0.0:
            return 0.0
        den = math.fsum(self.bump(x - np.asarray(j, dtype=float)) for j in self._neighbors(x))
        return num / den

    def sum_at(self, x) -> float:
        """sum_k phi_k(x); identically 1 by construction, exposed for checking."""
        x = np.asarray(x, dtype=float).reshape(-1)
        terms = [self.bump(x - np.asarray(j, dtype=float)) for j in self._neighbors(x)]
        den = math.fsum(terms)
        return math.fsum(t / den for t in terms)


def bump_partition(theta: float, d: int) -> UnitPartition:
    """Construct the mollifier partition of unity for dilation theta in (1, 2)."""
    return UnitPartition(theta, d)


# ---------------------------------------------------------------------------
# Collage rules
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class CollageRule:
    """A full-space rule plus per-node provenance and the schedule that shaped it."""

    rule: QuadratureRule
    cells: np.ndarray        # (n, d) int64: cell index of each node
    base_index: np.ndarray   # (n,) int64: node index within the cell's base rule
    schedule: BudgetSchedule
    variant: str             # "direct" | "partition"
    theta: float = 1.0

    def __post_init__(self):
        self.cells = np.ascontiguousarray(np.asarray(self.cells, dtype=np.int64))
        self.base_index = np.ascontiguousarray(np.asarray(self.base_index, dtype=np.int64))
        self.cells.flags.writeable = False
        self.base_index.flags.writeable = False

    def __len__(self) -> int:
        return len(self.rule)

    @property
    def d(self) -> int:
        return self.rule.d

    @property
    def nodes(self) -> np.ndarray:
        return self.rule.nodes

    @property
    def weights(self) -> np.ndarray:
        return self.rule.weights

    def weight_sum(self) -> float:
        return self.rule.weight_sum()

    def ball_radius_bound(self) -> float:
        """Radius theta sqrt(d)/2 + xi_n containing every node."""
        return self.theta * math.sqrt(self.d) / 2.0 + self.schedule.xi

    def max_node_radius(self) -> float:
        if len(self) == 0:
            return 0.0
        return float(np.sqrt((self.nodes**2).sum(axis=1)).max())

    def to_json_dict(self) -> dict:
        data = self.rule.to_json_dict()
        data["variant"] = self.variant
        data["theta"] = self.theta
        data["cells"] = [[int(v) for v in row] for row in self.cells]
        data["base_index"] = [int(v) for v in self.base_index]
        data["schedule"] = self.schedule.to_json_dict()
        return data

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)
            fh.write("\n")

    def to_csv(self, path) -> None:
        import csv as _csv

        with open(path, "w", newline="") as fh:
            writer = _csv.writer(fh)
            header = [f"x{i+1}" for i in range(self.d)] + ["weight"]
            header += [f"cell_k{i+1}" for i in range(self.d)] + ["base_index"]
            writer.writerow(header)
            for row, w, cell, bi in zip(self.nodes, self.weights, self.cells, self.base_index):
                writer.writerow(
                    [fmt18(v) for v in row]
                    + [fmt18(w)]
                    + [str(int(c)) for c in cell]
                    + [str(int(bi))]
                )


def _empty_collage(schedule: BudgetSchedule, variant: str, theta: float, n: float) -> CollageRule:
    d = schedule.d
    rule = QuadratureRule(
        d,
        DOMAIN_GAUSSIAN,
        np.empty((0, d)),
        np.empty((0,)),
        f"collage({variant})",
        float(n),
        theta=theta,
    )
    return CollageRule(
        rule,
        np.empty((0, d), dtype=np.int64),
        np.empty((0,), dtype=np.int64),
        schedule,
        variant,
        theta,
    )


def _check_base(base: QuadratureRule, d: int, m: int) -> None:
    if base.domain != DOMAIN_UNIT_CUBE:
        raise ValueError(f"base family produced a rule on {base.domain!r}, expected unit cube")
    if base.d != d:
        raise ValueError(f"base family produced a rule in dimension {base.d}, expected {d}")
    if len(base) > m:
        raise ValueError(f"base family produced {len(base)} nodes for budget {m}")


def collage_direct(
    base_family: Callable[[int], QuadratureRule],
    n: float,
    params: RateParams,
    delta: float,
) -> CollageRule:
    """Assemble a Gaussian-measure rule by shifting a cube rule into every cell.

    For each cell k with floor(n_k) >= 1 the base rule with budget
    floor(n_k) is shifted by k and reweighted by the Gaussian density:
    node x_j + k carries weight lambda_j g(x_j + k).  The base family
    must return rules valid for general mixed-smoothness integrands on
    the cube (e.g. a sparse-grid rule, or a boundary-supported rule
    pushed through the change of variable).

    Parameters
    ----------
    base_family : callable
        Map m -> QuadratureRule on the unit cube with at most m nodes.
    n : float
        Total node budget (>= 1).
    params : RateParams
        Rate parameters of the base family; ``params.a`` scales the
        budget decay and ``params.d`` fixes the dimension.
    delta : float
        Budget decay constant.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    schedule = budget_schedule(n, params.a, delta, params.d)
    d = params.d

    cache: dict[int, QuadratureRule] = {}
    node_blocks = []
    weight_blocks = []
    cell_blocks = []
    index_blocks = []
    for k, nk in schedule:
        m = int(math.floor(nk))
        if m < 1:
            continue
        base = cache.get(m)
        if base is None:
            base = base_family(m)
            _check_base(base, d, m)
            cache[m] = base
        karr = np.asarray(k, dtype=float)
        shifted = base.nodes + karr
        node_blocks.append(shifted)
        weight_blocks.append(base.weights * gaussian_density(shifted))
        cell_blocks.append(np.tile(np.asarray(k, dtype=np.int64), (len(base), 1)))
        index_blocks.append(np.arange(len(base), dtype=np.int64))

    if not node_blocks:
        return _empty_collage(schedule, "direct", 1.0, n)

    rule = QuadratureRule(
        d,
        DOMAIN_GAUSSIAN,
        np.concatenate(node_blocks),
        np.concatenate(weight_blocks),
        "collage(direct)",
        float(n),
        theta=1.0,
    )
    return CollageRule(
        rule,
        np.concatenate(cell_blocks),
        np.concatenate(index_blocks),
        schedule,
        "direct",
        1.0,
    )


def collage_partition(
    base_family: Callable[[int], QuadratureRule],
    n: float,
    theta: float,
    params: RateParams,
    delta: float,
) -> CollageRule:
    """Assemble a Gaussian-measure rule through theta-dilated cells and a unit partition.

    Base nodes are dilated by theta (weights pick up the Jacobian theta^d),
    shifted by the cell index, and weighted by the Gaussian density times
    the partition function phi_k at the node.  The base family should be
    valid for integrands supported in the open cube.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not (1.0 < theta < 2.0):
        raise ValueError("theta must lie in (1, 2)")
    schedule = budget_schedule(n, params.a, delta, params.d)
    d = params.d
    partition = bump_partition(theta, d)

    cache: dict[int, QuadratureRule] = {}
    node_blocks = []
    weight_blocks = []
    cell_blocks = []
    index_blocks = []
    for k, nk in schedule:
        m = int(math.floor(nk))
        if m < 1:
            continue
        base = cache.get(m)
        if base is None:
            base = base_family(m)
            _check_base(base, d, m)
            cache[m] = base
        karr = np.asarray(k, dtype=float)
        dilated = theta * base.nodes
        shifted = dilated + karr
        phis = np.array([partition.phi(karr, x) for x in shifted])
        w = (theta**d) * base.weights * gaussian_density(shifted) * phis
        node_blocks.append(shifted)
        weight_blocks.append(w)
        cell_blocks.append(np.tile(np.asarray(k, dtype=np.int64), (len(base), 1)))
        index_blocks.append(np.arange(len(base), dtype=np.int64))

    if not node_blocks:
        return _empty_collage(schedule, "partition", theta, n)

    rule = QuadratureRule(
        d,
        DOMAIN_GAUSSIAN,
        np.concatenate(node_blocks),
        np.concatenate(weight_blocks),
        "collage(partition)",
        float(n),
        theta=theta,
    )
    return CollageRule(
        rule,
        np.concatenate(cell_blocks),
        np.concatenate(index_blocks),
        schedule,
        "partition",
        theta,
    )


# ---------------------------------------------------------------------------
# Rule application
# ---------------------------------------------------------------------------


class IntegrationError(RuntimeError):
    """Raised when the integrand fails at a specific node."""

    def __init__(self, index: int, node: np.ndarray, cause: BaseException):
        self.index = index
        self.node = np.array(node, dtype=float)
        super().__init__(f"integrand evaluation failed at node {index}, x = {self.node.tolist()}: {cause}")


def integrate(rule, f) -> float:
    """Apply a quadrature rule: sum_i lambda_i f(x_i).

    Nodes are visited in their stored (deterministic) order and the sum is
    compensated, so results are bitwise reproducible.  ``f`` receives each
    node as a shape-(d,) array; evaluation failures are re-raised as
    :class:`IntegrationError` naming the offending node.
    """
    nodes = rule.nodes
    weights = rule.weights
    acc = CompensatedAccumulator()
    for i in range(len(weights)):
        x = nodes[i]
        try:
            val = float(f(x))
        except IntegrationError:
            raise
        except Exception as exc:
            raise IntegrationError(i, x, exc) from exc
        acc.add(weights[i] * val)
    return acc.total()
