"""Exact worst-case error of one-dimensional Gaussian quadrature rules.

Over the unit ball of the Hermite-weighted space with weights
rho_{alpha,k} = (k+1)^alpha, the worst-case error of a rule with nodes
x_i and weights lambda_i has the spectral form

    err^2 = (1 - sum_i lambda_i)^2
            + sum_{k>=1} (k+1)^(-alpha) (sum_i lambda_i H_k(x_i))^2,

truncated at k = m for computation.  An independent Gram/kernel expansion
of the same representer norm serves as a cross-check, and a sweep driver
certifies whole budget grids and fits log-log convergence slopes.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import zeta

from ._util import CompensatedAccumulator, fmt18
from .collage import collage_direct
from .core import RateParams
from .cube_rules import change_of_variable_rule, fibonacci_rule, fibonacci_index_for_budget, smolyak_rule

__all__ = [
    "WceReport",
    "wce_spectral",
    "wce_gram",
    "SweepConfig",
    "SweepRow",
    "convergence_sweep",
    "slope_fit",
    "sweep_rows_to_csv",
    "sweep_summary_json",
]

DEFAULT_TRUNCATION = 10**5
DEFAULT_GRAM_TRUNCATION = 10**4


@dataclass(frozen=True)
class WceReport:
    """Certified worst-case error of a rule, with truncation diagnostics."""

    n: int
    m: int
    alpha: int
    err_m: float
    weight_defect: float
    tail_estimate: float

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "alpha": self.alpha,
            "err_m": self.err_m,
            "weight_defect": self.weight_defect,
            "tail_estimate": self.tail_estimate,
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)
            fh.write("\n")


def _rule_arrays(rule) -> tuple[np.ndarray, np.ndarray, int, int]:
    nodes = np.asarray(rule.nodes, dtype=float)
    weights = np.asarray(rule.weights, dtype=float)
    if nodes.ndim == 2:
        if nodes.shape[1] != 1:
            raise ValueError("worst-case-error certification requires d = 1")
        nodes = nodes[:, 0]
    d = getattr(rule, "d", 1)
    if d != 1:
        raise ValueError("worst-case-error certification requires d = 1")
    total = weights.shape[0]
    live = weights != 0.0
    return nodes[live], weights[live], total, int(live.sum())


def wce_spectral(rule, alpha: int, m: int = DEFAULT_TRUNCATION) -> WceReport:
    """Worst-case error via the truncated spectral sum.

    Hermite values are streamed by the three-term recurrence over all
    nodes simultaneously (O(n) memory) and the k-sum is compensated.  The
    reported ``tail_estimate`` bounds the discarded k > m contribution by
    zeta(alpha, m+2) (sum_i |lambda_i| max_{k<=2m} |H_k(x_i)|)^2 for
    alpha >= 2 (the crude envelope is observed numerically up to 2m); it
    is infinite for alpha = 1.
    """
    if alpha < 1 or int(alpha) != alpha:
        raise ValueError("alpha must be a positive integer")
    if m < 1:
        raise ValueError("m must be >= 1")
    x, lam, n_total, _ = _rule_arrays(rule)

    weight_sum = math.fsum(lam.tolist())
    defect = 1.0 - weight_sum
    acc = CompensatedAccumulator(defect * defect)

    envelope = 0.0
    scan_to = 2 * m if alpha >= 2 else m
    if len(lam) > 0:
        prev = np.ones_like(x)
        cur = x.copy()
        for k in range(1, scan_to + 1):
            # on entry cur holds H_k
            if k <= m:
                s = float(lam @ cur)
                acc.add((k + 1.0) ** (-float(alpha)) * s * s)
            peak = float(np.abs(cur).max())
            if peak > envelope:
                envelope = peak
            if not math.isfinite(peak):
                raise OverflowError(f"Hermite recurrence overflowed at degree {k}")
            prev, cur = cur, (x * cur - math.sqrt(k) * prev) / math.sqrt(k + 1)

    err2 = acc.total()
    err_m = math.sqrt(max(err2, 0.0))

    if alpha >= 2 and len(lam) > 0:
        tail = float(zeta(float(alpha), m + 2)) * (math.fsum(np.abs(lam).tolist()) * envelope) ** 2
    elif len(lam) == 0:
        tail = 0.0
    else:
        tail = math.inf
    return WceReport(n=n_total, m=int(m), alpha=int(alpha), err_m=err_m,
                     weight_defect=defect, tail_estimate=tail)


def wce_gram(rule, alpha: float, m: int = DEFAULT_GRAM_TRUNCATION) -> float:
    """Worst-case error via the kernel Gram matrix (independent expansion).

    err^2 = 1 - 2 sum_i lambda_i + sum_{i,j} lambda_i lambda_j K_m(x_i, x_j)
    with the m-truncated reproducing kernel; uses that the kernel's
    Gaussian mean and double integral are both 1 (orthonormality).  Only
    defined for alpha > 1.  Cost is O(n^2 m); a radicand below -1e-12 is
    treated as an error (kernel truncation too small), small negatives
    clamp to zero.
    """
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")
    if m < 1:
        raise ValueError("m must be >= 1")
    x, lam, _, nlive = _rule_arrays(rule)

    if nlive == 0:
        return 1.0

    gram = np.zeros((nlive, nlive))
    prev = np.ones_like(x)
    cur = x.copy()
    gram += np.outer(prev, prev)  # k = 0 term, weight 1
    for k in range(1, m + 1):
        gram += (k + 1.0) ** (-float(alpha)) * np.outer(cur, cur)
        prev, cur = cur, (x * cur - math.sqrt(k) * prev) / math.sqrt(k + 1)

    weight_sum = math.fsum(lam.tolist())
    radicand = 1.0 - 2.0 * weight_sum + float(lam @ gram @ lam)
    if radicand < -1e-12:
        raise ArithmeticError(f"negative squared error {radicand}: kernel truncation too small")
    return math.sqrt(max(radicand, 0.0))


# ---------------------------------------------------------------------------
# Convergence sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepConfig:
    """Configuration of the d = 1 certification pipeline."""

    delta: float = 1.0 / 6.0
    psi_order: int = 3
    base_family: str = "smolyak"
    m: int = DEFAULT_TRUNCATION

    def to_json_dict(self) -> dict:
        return {
            "delta": self.delta,
            "psi_order": self.psi_order,
            "base_family": self.base_family,
            "m": self.m,
        }


@dataclass
class SweepRow:
    alpha: int
    n_requested: float
    n_actual: int
    err_m: float
    m: int
    seconds: float
    error: str = ""


@lru_cache(maxsize=4096)
def _base_rule_cached(family: str, m: int, d: int, alpha: int, psi_order: int):
    if family == "smolyak":
        base = smolyak_rule(m, d, alpha)
    elif family == "fibonacci":
        if d != 2:
            raise ValueError("the fibonacci family is two-dimensional")
        base = fibonacci_rule(fibonacci_index_for_budget(m))
    else:
        raise ValueError(f"unknown base family {family!r}")
    if psi_order > 0:
        base = change_of_variable_rule(base, psi_order)
    return base


def base_family_factory(family: str, d: int, alpha: int, psi_order: int):
    """Memoized m -> rule map for the collage constructors."""

    def build(m: int):
        return _base_rule_cached(family, int(m), d, alpha, psi_order)

    return build


def certified_collage_error(alpha: int, n: float, config: SweepConfig) -> tuple[int, float]:
    """Build the d = 1 collaged rule for (alpha, n) and certify it.

    Pipeline: dyadic sparse-grid base rule -> psi change of variable ->
    direct collage with a = alpha -> spectral worst-case error.
    Returns (actual node count, err_m).
    """
    params = RateParams(alpha=alpha, p=2.0, a=float(alpha), b=0.0, d=1)
    family = base_family_factory(config.base_family, 1, alpha, config.psi_order)
    rule = collage_direct(family, n, params, config.delta)
    report = wce_spectral(rule, alpha, config.m)
    return len(rule), report.err_m


def convergence_sweep(alphas, n_list, config: SweepConfig | None = None,
                      workers: int = 1) -> list[SweepRow]:
    """Certify the collage pipeline over a grid of (alpha, n) budgets.

    One row per combination, in grid order regardless of worker
    completion order; per-row failures are recorded in the row's
    ``error`` field instead of aborting the sweep.
    """
    config = config or SweepConfig()
    jobs = [(int(a), float(n)) for a in alphas for n in n_list]

    def run(job):
        a, n = job
        t0 = time.perf_counter()
        try:
            n_actual, err = certified_collage_error(a, n, config)
            return SweepRow(a, n, n_actual, err, config.m, time.perf_counter() - t0)
        except Exception as exc:
            return SweepRow(a, n, 0, math.nan, config.m, time.perf_counter() - t0, str(exc))

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run, jobs))
    else:
        rows = [run(job) for job in jobs]
    return rows


def slope_fit(rows) -> float:
    """Least-squares slope of log(err_m) against log(actual node count).

    Rows with nonpositive error or zero node count are excluded; fewer
    than 3 usable rows is an error.
    """
    pts = [
        (math.log(r.n_actual), math.log(r.err_m))
        for r in rows
        if r.n_actual > 0 and r.err_m > 0 and not r.error
    ]
    if len(pts) < 3:
        raise ValueError("slope fit needs at least 3 usable rows")
    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    return float(np.polyfit(xs, ys, 1)[0])


def sweep_rows_to_csv(rows, path, timings: bool = False) -> None:
    """Write sweep rows as CSV.

    The ``seconds`` column is left empty unless ``timings`` is requested:
    wall time varies run to run, and output files are contracted to be
    byte-identical for identical configurations.
    """
    import csv as _csv

    with open(path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["alpha", "n_requested", "n_actual", "err_m", "m", "seconds", "error"])
        for r in rows:
            writer.writerow([
                r.alpha,
                fmt18(r.n_requested),
                r.n_actual,
                fmt18(r.err_m) if math.isfinite(r.err_m) else "nan",
                r.m,
                fmt18(r.seconds) if timings else "",
                r.error,
            ])


def sweep_summary_json(rows, config: SweepConfig, path) -> dict:
    """Write the JSON summary with fitted slopes per alpha; returns the dict."""
    alphas = sorted({r.alpha for r in rows})
    slopes = {}
    for a in alphas:
        sub = [r for r in rows if r.alpha == a]
        try:
            slopes[str(a)] = slope_fit(sub)
        except ValueError:
            slopes[str(a)] = None
    summary = {"config": config.to_json_dict(), "slopes": slopes}
    with open(path, "w") as fh:
        json.dump(summary, fh)
        fh.write("\n")
    return summary
