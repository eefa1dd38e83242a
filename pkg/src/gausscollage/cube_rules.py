"""Base quadrature rules on the centered unit cube I^d = [-1/2, 1/2]^d.

Three families are provided: the two-dimensional Fibonacci lattice rule,
interpolatory-spline rules on sparse dyadic (Smolyak) grids, and Frolov
rules on scaled admissible algebraic lattices.  A polynomial change of
variable flattens derivatives at the cube boundary so that rules designed
for boundary-supported integrands apply to general mixed-smoothness
functions.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import BSpline, make_interp_spline
from scipy.sparse.linalg import spsolve

from ._util import fmt18

__all__ = [
    "QuadratureRule",
    "PsiMap",
    "fibonacci_numbers",
    "fibonacci_index_for_budget",
    "fibonacci_rule",
    "smolyak_grid",
    "smolyak_grid_size",
    "smolyak_rule",
    "frolov_generator",
    "frolov_rule",
    "psi_eval",
    "psi_deriv",
    "change_of_variable_rule",
]

NODE_CAP = 10**7

DOMAIN_UNIT_CUBE = "unit-cube"
DOMAIN_THETA_CUBE = "theta-cube"
DOMAIN_GAUSSIAN = "gaussian-Rd"


@dataclass(eq=False)
class QuadratureRule:
    """A finite list of nodes and weights on a stated domain.

    ``family`` records provenance (e.g. ``fibonacci``, ``smolyak``,
    ``psi-transformed(3, smolyak)``, ``collage(direct)``) and ``m`` the
    requested budget.  Immutable after construction.
    """

    d: int
    domain: str
    nodes: np.ndarray    # (n, d)
    weights: np.ndarray  # (n,)
    family: str
    m: float
    theta: float | None = None

    def __post_init__(self):
        self.nodes = np.ascontiguousarray(np.asarray(self.nodes, dtype=float).reshape(-1, self.d))
        self.weights = np.ascontiguousarray(np.asarray(self.weights, dtype=float).reshape(-1))
        if self.nodes.shape[0] != self.weights.shape[0]:
            raise ValueError("nodes and weights must have the same length")
        self.nodes.flags.writeable = False
        self.weights.flags.writeable = False

    def __len__(self) -> int:
        return self.weights.shape[0]

    def weight_sum(self) -> float:
        return math.fsum(self.weights.tolist())

    def to_json_dict(self) -> dict:
        return {
            "d": self.d,
            "domain": self.domain,
            "theta": self.theta,
            "family": self.family,
            "m": self.m,
            "nodes": [[float(v) for v in row] for row in self.nodes],
            "weights": [float(w) for w in self.weights],
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)
            fh.write("\n")

    @classmethod
    def from_json_dict(cls, data: dict) -> "QuadratureRule":
        return cls(
            d=int(data["d"]),
            domain=data["domain"],
            nodes=np.asarray(data["nodes"], dtype=float).reshape(-1, int(data["d"])),
            weights=np.asarray(data["weights"], dtype=float),
            family=data.get("family", "unknown"),
            m=float(data.get("m", len(data["weights"]))),
            theta=data.get("theta"),
        )

    @classmethod
    def from_json(cls, path) -> "QuadratureRule":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"x{i+1}" for i in range(self.d)] + ["weight"])
            for row, w in zip(self.nodes, self.weights):
                writer.writerow([fmt18(v) for v in row] + [fmt18(w)])


# ---------------------------------------------------------------------------
# Fibonacci lattice rule (d = 2)
# ---------------------------------------------------------------------------

_FLOAT_EXACT_MAX = 2**53


def fibonacci_numbers(m: int) -> tuple[int, int]:
    """Return (b_m, b_{m-1}) with b_0 = b_1 = 1."""
    if m < 1:
        raise ValueError("m must be >= 1")
    prev, cur = 1, 1  # b_0, b_1
    for _ in range(m - 1):
        prev, cur = cur, prev + cur
    return cur, prev


def fibonacci_index_for_budget(budget: float) -> int:
    """Largest index m with b_m <= budget (the rule is indexed by Fibonacci numbers)."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    m = 1
    while fibonacci_numbers(m + 1)[0] <= budget:
        m += 1
    return m


def fibonacci_rule(m: int) -> QuadratureRule:
    """Two-dimensional Fibonacci lattice rule with b_m equal-weight nodes.

    Node i is ({i/b_m} - 1/2, {i b_{m-1}/b_m} - 1/2) for i = 1..b_m, each
    with weight 1/b_m.  Fractional parts are computed with integer
    arithmetic, so the lattice structure is exact.
    """
    b, bprev = fibonacci_numbers(m)
    if b > _FLOAT_EXACT_MAX:
        raise ValueError(f"Fibonacci index {m} exceeds the exact integer range of doubles")
    i = np.arange(1, b + 1, dtype=np.int64)
    x1 = (i % b).astype(float) / b - 0.5
    x2 = ((i * bprev) % b).astype(float) / b - 0.5
    nodes = np.stack([x1, x2], axis=1)
    weights = np.full(b, 1.0 / b)
    return QuadratureRule(2, DOMAIN_UNIT_CUBE, nodes, weights, "fibonacci", float(m))


# ---------------------------------------------------------------------------
# Sparse dyadic (Smolyak) grid and interpolatory-spline rule
# ---------------------------------------------------------------------------


def _new_points_1d(level: int) -> list[Fraction]:
    """Dyadic points of [-1/2, 1/2] whose minimal level is ``level``."""
    if level == 0:
        return [Fraction(0)]
    if level == 1:
        return [Fraction(-1, 2), Fraction(1, 2)]
    denom = 2**level
    return [Fraction(s, denom) for s in range(-(denom // 2) + 1, denom // 2) if s % 2 != 0]


def _new_point_counts(max_level: int) -> list[int]:
    return [len(_new_points_1d(l)) for l in range(max_level + 1)]


def smolyak_grid_size(xi: float, d: int) -> int:
    """Cardinality of the sparse grid SG(xi) without enumerating it."""
    if xi < 0:
        raise ValueError("xi must be >= 0")
    level = int(math.floor(xi))
    counts = _new_point_counts(level)
    # dp[l] = number of points with minimal-level profile summing to l
    dp = [0] * (level + 1)
    dp[0] = 1
    for _ in range(d):
        new = [0] * (level + 1)
        for l in range(level + 1):
            if dp[l] == 0:
                continue
            for ll in range(level + 1 - l):
                new[l + ll] += dp[l] * counts[ll]
        dp = new
    return sum(dp)


def _smolyak_points_exact(level: int, d: int) -> list[tuple[Fraction, ...]]:
    pts_by_level = [_new_points_1d(l) for l in range(level + 1)]

    out: list[tuple[Fraction, ...]] = []

    def rec(prefix: tuple, remaining: int, dims_left: int):
        if dims_left == 0:
            out.append(prefix)
            return
        for l in range(remaining + 1):
            for p in pts_by_level[l]:
                rec(prefix + (p,), remaining - l, dims_left - 1)

    rec((), level, d)
    out.sort()
    return out


def smolyak_grid(xi: float, d: int, cap: int = NODE_CAP) -> np.ndarray:
    """Enumerate the sparse grid SG(xi) = {2^-k s : |k|_1 <= xi, |s_i| <= 2^(k_i - 1)}.

    Points are de-duplicated exactly (dyadic rational arithmetic) and
    returned in lexicographic order as a ``(npoints, d)`` float array.
    """
    if xi < 0:
        raise ValueError("xi must be >= 0")
    if d < 1:
        raise ValueError("d must be >= 1")
    size = smolyak_grid_size(xi, d)
    if size > cap:
        raise ValueError(f"SG(xi) would contain {size} > {cap} nodes")
    pts = _smolyak_points_exact(int(math.floor(xi)), d)
    return np.array([[float(c) for c in p] for p in pts], dtype=float).reshape(len(pts), d)


@lru_cache(maxsize=None)
def _univariate_level_rule(level: int, order: int) -> tuple[tuple[Fraction, ...], tuple[float, ...]]:
    """Nodes and interpolatory-spline weights of the level-``level`` dyadic rule.

    Weights are the integrals over [-1/2, 1/2] of the nodal interpolatory
    spline of the given order (degree order-1, clamped to the point count)
    on the full dyadic grid of the level; obtained by one banded
    collocation solve  A^T w = integrals(B-splines).
    """
    if level == 0:
        return (Fraction(0),), (1.0,)
    denom = 2**level
    nodes = tuple(Fraction(s, denom) for s in range(-(denom // 2), denom // 2 + 1))
    x = np.array([float(v) for v in nodes])
    degree = min(order - 1, len(x) - 1)
    if degree == 0:
        return nodes, tuple(np.full(len(x), 1.0 / len(x)))
    knots = make_interp_spline(x, np.zeros_like(x), k=degree).t
    design = BSpline.design_matrix(x, knots, degree)
    integrals = (knots[degree + 1:] - knots[:-(degree + 1)]) / (degree + 1)
    w = spsolve(sp.csc_matrix(design.T), integrals)
    return nodes, tuple(float(v) for v in w)


def smolyak_rule(m: float, d: int, alpha: int, cap: int = NODE_CAP) -> QuadratureRule:
    """Sparse-grid rule with at most ``m`` nodes on the unit cube.

    Selects the largest xi with |SG(xi)| <= m, then combines univariate
    interpolatory-spline rules (order min(alpha+1, 4)) on the dyadic level
    grids through the standard telescoping tensor combination over
    |k|_1 <= xi.

    Parameters
    ----------
    m : float
        Node budget (>= 1).
    d : int
        Dimension.
    alpha : int
        Mixed smoothness order; fixes the spline order of the weights.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if d < 1:
        raise ValueError("d must be >= 1")
    if alpha < 1:
        raise ValueError("alpha must be >= 1")

    level = 0
    while smolyak_grid_size(level + 1, d) <= m:
        level += 1
    size = smolyak_grid_size(level, d)
    if size > cap:
        raise ValueError(f"rule would contain {size} > {cap} nodes")

    order = min(alpha + 1, 4)
    acc: dict[tuple[Fraction, ...], float] = {}

    qlo = max(0, level - d + 1)
    for q in range(qlo, level + 1):
        coef = (-1.0) ** (level - q) * math.comb(d - 1, level - q)
        for ks in _compositions(q, d):
            axes = [_univariate_level_rule(k, order) for k in ks]
            _accumulate_tensor(acc, axes, coef)

    keys = sorted(acc.keys())
    nodes = np.array([[float(c) for c in key] for key in keys], dtype=float).reshape(len(keys), d)
    weights = np.array([acc[key] for key in keys], dtype=float)
    return QuadratureRule(d, DOMAIN_UNIT_CUBE, nodes, weights, "smolyak", float(m))


def _compositions(total: int, parts: int):
    """All tuples of ``parts`` nonnegative integers summing to ``total``."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _accumulate_tensor(acc, axes, coef):
    def rec(idx, key, w):
        if idx == len(axes):
            acc[key] = acc.get(key, 0.0) + coef * w
            return
        nodes, weights = axes[idx]
        for node, wt in zip(nodes, weights):
            rec(idx + 1, key + (node,), w * wt)

    rec(0, (), 1.0)


# ---------------------------------------------------------------------------
# Frolov rule on a scaled admissible algebraic lattice
# ---------------------------------------------------------------------------

_FROLOV_MAX_D = 6


def frolov_generator(d: int) -> tuple[np.ndarray, float]:
    """Generator matrix of the admissible lattice for dimension d <= 6.

    Uses the polynomial prod_{j=1..d} (x - (2j - 1)) - 1, which has d
    distinct real roots; the generator is the Vandermonde matrix of the
    roots, whose lattice has nonzero coordinate products (unit norm of an
    algebraic integer), hence admissibility.
    """
    if not (1 <= d <= _FROLOV_MAX_D):
        raise ValueError(f"d must lie in 1..{_FROLOV_MAX_D}")
    coeffs = np.poly(np.arange(1, 2 * d, 2, dtype=float))
    coeffs[-1] -= 1.0
    roots = np.roots(coeffs)
    if np.max(np.abs(roots.imag)) > 1e-9:
        raise ArithmeticError("generator polynomial produced complex roots")
    roots = np.sort(roots.real)
    gen = np.vander(roots, increasing=True)
    det = float(np.linalg.det(gen))
    return gen, det


def _lattice_nodes(gen: np.ndarray, a: float) -> np.ndarray:
    """Lattice points a^-1 gen z strictly inside the open unit cube."""
    d = gen.shape[0]
    inv = np.linalg.inv(gen)
    zmax = int(math.ceil(np.abs(inv).sum(axis=1).max() * a / 2.0)) + 1
    axes = [np.arange(-zmax, zmax + 1, dtype=np.int64)] * d
    mesh = np.meshgrid(*axes, indexing="ij")
    z = np.stack([mm.reshape(-1) for mm in mesh], axis=1).astype(float)
    pts = z @ gen.T / a
    inside = np.all(np.abs(pts) < 0.5, axis=1)
    return pts[inside]


def frolov_rule(m: float, d: int) -> QuadratureRule:
    """Equal-weight rule on the scaled admissible lattice, for supported integrands.

    The scale a is pushed as high as possible (bisection on the node
    count) subject to at most ``m`` lattice points falling strictly inside
    the open cube; each node carries the lattice covolume |det T| / a^d.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    gen, det = frolov_generator(d)

    def count(a: float) -> int:
        return _lattice_nodes(gen, a).shape[0]

    lo = 1e-3
    while count(lo) > m:
        lo /= 2.0
    hi = lo
    while count(hi) <= m:
        hi *= 2.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if count(mid) <= m:
            lo = mid
        else:
            hi = mid

    a = lo
    nodes = _lattice_nodes(gen, a)
    order = np.lexsort(tuple(nodes[:, j] for j in range(d - 1, -1, -1)))
    nodes = np.ascontiguousarray(nodes[order])
    weights = np.full(nodes.shape[0], abs(det) / a**d)
    return QuadratureRule(d, DOMAIN_UNIT_CUBE, nodes, weights, "frolov", float(m))


# ---------------------------------------------------------------------------
# Boundary-flattening change of variable
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PsiMap:
    """The smoothing reparametrization psi_k of [0, 1].

    psi_k(t) = C_k int_0^t u^k (1-u)^k du with C_k = (2k+1)!/(k!)^2, so
    psi_k(0) = 0, psi_k(1) = 1 and the first k derivatives vanish at both
    endpoints.  Evaluated in closed form through the binomial expansion.
    """

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")

    @property
    def Ck(self) -> float:
        return float(math.factorial(2 * self.k + 1) // (math.factorial(self.k) ** 2))

    def _poly_coeffs(self) -> np.ndarray:
        # psi_k(t) = C_k sum_j (-1)^j C(k,j) t^(k+j+1) / (k+j+1), highest power first
        k = self.k
        ck = Fraction(math.factorial(2 * k + 1), math.factorial(k) ** 2)
        coeffs = [Fraction(0)] * (2 * k + 2)
        for j in range(k + 1):
            power = k + j + 1
            coeffs[2 * k + 1 - power] = ck * Fraction((-1) ** j * math.comb(k, j), power)
        return np.array([float(c) for c in coeffs])


def psi_eval(psi: PsiMap, t: float) -> float:
    """psi_k(t), clamped to 0 below 0 and to 1 above 1."""
    t = float(t)
    if t <= 0.0:
        return 0.0
    if t >= 1.0:
        return 1.0
    return float(np.polyval(psi._poly_coeffs(), t))


def psi_deriv(psi: PsiMap, t: float) -> float:
    """psi_k'(t) = C_k t^k (1-t)^k on [0, 1], zero outside."""
    t = float(t)
    if t < 0.0 or t > 1.0:
        return 0.0
    return psi.Ck * t**psi.k * (1.0 - t) ** psi.k


def _psi_eval_array(psi: PsiMap, t: np.ndarray) -> np.ndarray:
    out = np.clip(np.polyval(psi._poly_coeffs(), t), 0.0, 1.0)
    out = np.where(t <= 0.0, 0.0, out)
    return np.where(t >= 1.0, 1.0, out)


def _psi_deriv_array(psi: PsiMap, t: np.ndarray) -> np.ndarray:
    inside = (t >= 0.0) & (t <= 1.0)
    tt = np.clip(t, 0.0, 1.0)
    return np.where(inside, psi.Ck * tt**psi.k * (1.0 - tt) ** psi.k, 0.0)


def change_of_variable_rule(base: QuadratureRule, k: int) -> QuadratureRule:
    """Push a unit-cube rule through the psi_k change of variable.

    Nodes move to psi_k applied coordinatewise (after shifting the cube to
    [0, 1]^d and back) and weights pick up the Jacobian factor
    prod_i psi_k'(t_i); boundary nodes therefore get weight zero.  The
    resulting rule applies to general mixed-smoothness integrands on the
    cube, not only boundary-supported ones.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if base.domain != DOMAIN_UNIT_CUBE:
        raise ValueError("base rule must live on the unit cube")
    psi = PsiMap(k)
    t = base.nodes + 0.5
    new_nodes = _psi_eval_array(psi, t) - 0.5
    multipliers = np.prod(_psi_deriv_array(psi, t), axis=1)
    return QuadratureRule(
        base.d,
        DOMAIN_UNIT_CUBE,
        new_nodes,
        base.weights * multipliers,
        f"psi-transformed({k}, {base.family})",
        base.m,
    )
