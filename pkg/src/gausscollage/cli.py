"""Command-line surface: build rules, certify them, run sweeps, dump grids.

Commands
--------
build            assemble a full-space rule and write JSON/CSV (+PNG for d<=2)
certify          worst-case error of a saved d=1 rule
sweep            certify a budget grid, write CSV/JSON/PNG with fitted slopes
grid             dump a sparse grid SG(xi) or hyperbolic cross G(xi)
partition-check  sample the partition-of-unity sum at random points

Numeric stdout uses 18 significant digits.  Option precedence is
flags > config file (--config, JSON) > defaults.  Output files are
byte-identical across runs with the same configuration; wall-clock
timings go to stdout (and into the sweep CSV only with --timings).
The environment variable GAUSS_COLLAGE_THREADS caps sweep workers.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from ._util import fmt18
from .collage import bump_partition, collage_direct, collage_partition
from .core import RateParams, check_delta, default_delta
from .cube_rules import QuadratureRule, smolyak_grid
from .hermite import hyperbolic_cross
from .wce import (
    SweepConfig,
    base_family_factory,
    convergence_sweep,
    sweep_rows_to_csv,
    sweep_summary_json,
    wce_spectral,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CONSTRUCTION = 3


class ValidationFailure(Exception):
    pass


def _fail_validation(param: str, message: str) -> None:
    raise ValidationFailure(f"{param}: {message}")


def _resolve(args: argparse.Namespace, config: dict, key: str, default):
    value = getattr(args, key.replace("-", "_"), None)
    if value is not None:
        return value
    if key in config:
        return config[key]
    return default


def _load_config(args: argparse.Namespace) -> dict:
    path = getattr(args, "config", None)
    if not path:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        _fail_validation("config", f"cannot read config file: {exc}")
    if not isinstance(data, dict):
        _fail_validation("config", "config file must hold a JSON object")
    return data


def _parse_budget_list(text: str) -> list[float]:
    """Parse '32..2048x2' (geometric grid) or a comma list of budgets."""
    text = str(text).strip()
    if ".." in text:
        head, _, tail = text.partition("..")
        stop_s, _, factor_s = tail.partition("x")
        try:
            start, stop = float(head), float(stop_s)
            factor = float(factor_s) if factor_s else 2.0
        except ValueError:
            raise ValueError(f"bad budget range {text!r}; expected a..bxk")
        if start < 1 or stop < start or factor <= 1:
            raise ValueError(f"bad budget range {text!r}")
        out = []
        value = start
        while value <= stop * (1 + 1e-12):
            out.append(value)
            value *= factor
        return out
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ValueError(f"bad budget list {text!r}")


def _workers_from_env() -> int:
    raw = os.environ.get("GAUSS_COLLAGE_THREADS", "")
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_build(args: argparse.Namespace) -> int:
    config = _load_config(args)
    d = int(_resolve(args, config, "d", 1))
    alpha = int(_resolve(args, config, "alpha", 2))
    n = _resolve(args, config, "n", None)
    p = float(_resolve(args, config, "p", 2.0))
    base = str(_resolve(args, config, "base", "smolyak"))
    variant = str(_resolve(args, config, "variant", "direct"))
    theta = float(_resolve(args, config, "theta", 1.5))
    delta = _resolve(args, config, "delta", None)
    a = _resolve(args, config, "a", None)
    psi = _resolve(args, config, "psi", None)
    out = _resolve(args, config, "out", "rule")

    if n is None:
        _fail_validation("n", "a total budget is required")
    n = float(n)
    if n < 1:
        _fail_validation("n", "must be >= 1")
    if d < 1:
        _fail_validation("d", "must be >= 1")
    if alpha < 1:
        _fail_validation("alpha", "must be >= 1")
    if not (1.0 < p < math.inf):
        _fail_validation("p", "must lie in (1, inf)")
    if variant not in ("direct", "partition"):
        _fail_validation("variant", "must be 'direct' or 'partition'")
    if variant == "partition" and not (1.0 < theta < 2.0):
        _fail_validation("theta", "must lie in (1, 2)")
    if base not in ("smolyak", "fibonacci"):
        _fail_validation("base", "must be 'smolyak' or 'fibonacci'")
    if base == "fibonacci" and d != 2:
        _fail_validation("base", "the fibonacci family requires d = 2")

    delta = float(delta) if delta is not None else default_delta(p)
    if delta <= 0:
        _fail_validation("delta", "must be positive")
    psi = int(psi) if psi is not None else alpha + 2
    if psi < 0:
        _fail_validation("psi", "must be >= 0 (0 disables the change of variable)")
    a = float(a) if a is not None else float(alpha)
    if a <= 0:
        _fail_validation("a", "must be positive")

    ok, _, _ = check_delta(delta, p, theta if variant == "partition" else 1.0)
    if not ok:
        print(f"warning: delta={delta} fails the admissibility check for p={p}", file=sys.stderr)

    params = RateParams(alpha=alpha, p=p, a=a, b=0.0, d=d)
    family = base_family_factory(base, d, alpha, psi)
    try:
        if variant == "direct":
            rule = collage_direct(family, n, params, delta)
        else:
            rule = collage_partition(family, n, theta, params, delta)
    except ValidationFailure:
        raise
    except Exception as exc:
        print(f"error: construction failed: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION

    if len(rule) == 0:
        print("warning: empty rule (all cell budgets floored to zero)", file=sys.stderr)

    rule.to_json(f"{out}.json")
    rule.to_csv(f"{out}.csv")
    figure = None
    if d <= 2:
        from .plotting import save_rule_figure

        if save_rule_figure(rule, f"{out}.png"):
            figure = f"{out}.png"

    print(f"nodes {len(rule)}")
    print(f"ball_radius_bound {fmt18(rule.ball_radius_bound())}")
    print(f"max_node_radius {fmt18(rule.max_node_radius())}")
    print(f"weight_sum {fmt18(rule.weight_sum())}")
    print(f"wrote {out}.json {out}.csv" + (f" {figure}" if figure else ""))
    return EXIT_OK


def cmd_certify(args: argparse.Namespace) -> int:
    config = _load_config(args)
    rule_path = _resolve(args, config, "rule", None)
    alpha = int(_resolve(args, config, "alpha", 2))
    m = int(_resolve(args, config, "m", 10**5))
    out = _resolve(args, config, "out", "wce")

    if rule_path is None:
        _fail_validation("rule", "a rule file is required")
    if not os.path.exists(rule_path):
        _fail_validation("rule", f"no such file: {rule_path}")
    if alpha < 1:
        _fail_validation("alpha", "must be >= 1")
    if m < 1:
        _fail_validation("m", "must be >= 1")

    try:
        rule = QuadratureRule.from_json(rule_path)
    except Exception as exc:
        _fail_validation("rule", f"cannot parse rule file: {exc}")
    if rule.d != 1:
        _fail_validation("rule", "certification requires a d = 1 rule")

    try:
        report = wce_spectral(rule, alpha, m)
    except Exception as exc:
        print(f"error: certification failed: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION

    report.to_json(f"{out}.json")
    print(f"err_m {fmt18(report.err_m)}")
    print(f"weight_defect {fmt18(report.weight_defect)}")
    print(f"tail_estimate {fmt18(report.tail_estimate)}")
    print(f"wrote {out}.json")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _load_config(args)
    alphas_raw = _resolve(args, config, "alphas", "1,2,3")
    n_grid = _resolve(args, config, "n", "32..2048x2")
    delta = float(_resolve(args, config, "delta", default_delta(2.0)))
    psi = int(_resolve(args, config, "psi", 3))
    base = str(_resolve(args, config, "base", "smolyak"))
    m = int(_resolve(args, config, "m", 10**5))
    out = _resolve(args, config, "out", "sweep")
    timings = bool(getattr(args, "timings", False) or config.get("timings", False))

    try:
        alphas = [int(tok) for tok in str(alphas_raw).split(",") if tok.strip()]
    except ValueError:
        _fail_validation("alphas", f"bad alpha list {alphas_raw!r}")
    if not alphas or any(a < 1 for a in alphas):
        _fail_validation("alphas", "alphas must be positive integers")
    try:
        n_list = _parse_budget_list(n_grid)
    except ValueError as exc:
        _fail_validation("n", str(exc))
    if not n_list:
        _fail_validation("n", "empty budget grid")
    if delta <= 0:
        _fail_validation("delta", "must be positive")
    if m < 1:
        _fail_validation("m", "must be >= 1")
    if psi < 0:
        _fail_validation("psi", "must be >= 0")

    sweep_config = SweepConfig(delta=delta, psi_order=psi, base_family=base, m=m)
    rows = convergence_sweep(alphas, n_list, sweep_config, workers=_workers_from_env())

    sweep_rows_to_csv(rows, f"{out}.csv", timings=timings)
    summary = sweep_summary_json(rows, sweep_config, f"{out}.json")
    from .plotting import save_sweep_figure

    figure = save_sweep_figure(rows, summary["slopes"], f"{out}.png")

    for r in rows:
        status = r.error if r.error else "ok"
        print(
            f"alpha {r.alpha} n {fmt18(r.n_requested)} nodes {r.n_actual} "
            f"err_m {fmt18(r.err_m)} seconds {r.seconds:.3f} {status}"
        )
    for a, slope in summary["slopes"].items():
        print(f"slope alpha={a} " + (fmt18(slope) if slope is not None else "nan"))
    print(f"wrote {out}.csv {out}.json" + (f" {out}.png" if figure else ""))
    failures = [r for r in rows if r.error]
    return EXIT_OK if not failures else EXIT_CONSTRUCTION


def cmd_grid(args: argparse.Namespace) -> int:
    config = _load_config(args)
    kind = str(_resolve(args, config, "kind", "sg"))
    xi = float(_resolve(args, config, "xi", 2.0))
    d = int(_resolve(args, config, "d", 2))
    out = _resolve(args, config, "out", "grid.csv")

    if kind not in ("sg", "hc"):
        _fail_validation("kind", "must be 'sg' (sparse grid) or 'hc' (hyperbolic cross)")
    if d < 1:
        _fail_validation("d", "must be >= 1")

    import csv as _csv

    if kind == "sg":
        if xi < 0:
            _fail_validation("xi", "must be >= 0")
        pts = smolyak_grid(xi, d)
        with open(out, "w", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow([f"x{i+1}" for i in range(d)])
            for row in pts:
                writer.writerow([fmt18(v) for v in row])
        print(f"cardinality {pts.shape[0]}")
    else:
        if xi < 1:
            _fail_validation("xi", "must be >= 1")
        cross = hyperbolic_cross(xi, d)
        with open(out, "w", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow([f"k{i+1}" for i in range(d)])
            for row in cross.indices:
                writer.writerow([str(int(v)) for v in row])
        print(f"cardinality {len(cross)}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_partition_check(args: argparse.Namespace) -> int:
    config = _load_config(args)
    theta = float(_resolve(args, config, "theta", 1.5))
    d = int(_resolve(args, config, "d", 2))
    samples = int(_resolve(args, config, "samples", 1000))
    seed = int(_resolve(args, config, "seed", 0))
    out = _resolve(args, config, "out", "partition.json")

    if not (1.0 < theta < 2.0):
        _fail_validation("theta", "must lie in (1, 2)")
    if d < 1:
        _fail_validation("d", "must be >= 1")
    if samples < 1:
        _fail_validation("samples", "must be >= 1")

    partition = bump_partition(theta, d)
    rng = np.random.RandomState(seed)
    points = rng.uniform(-3.0, 3.0, size=(samples, d))
    deviations = np.array([abs(partition.sum_at(x) - 1.0) for x in points])
    worst = float(deviations.max())

    payload = {
        "theta": theta,
        "d": d,
        "samples": samples,
        "seed": seed,
        "max_deviation": worst,
    }
    with open(out, "w") as fh:
        json.dump(payload, fh)
        fh.write("\n")
    print(f"max_deviation {fmt18(worst)}")
    print(f"wrote {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gauss-collage",
        description="Collaged quadrature rules for the standard Gaussian measure",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--config", help="JSON config file (flags take precedence)")
        sp.add_argument("--out", help="output path prefix (or file for grid/partition-check)")

    sp = sub.add_parser("build", help="build a full-space collage rule")
    add_common(sp)
    sp.add_argument("--d", type=int)
    sp.add_argument("--alpha", type=int)
    sp.add_argument("--n", type=float)
    sp.add_argument("--p", type=float)
    sp.add_argument("--a", type=float)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--theta", type=float)
    sp.add_argument("--base", choices=["smolyak", "fibonacci"])
    sp.add_argument("--psi", type=int, help="change-of-variable order (0 disables)")
    sp.add_argument("--variant", choices=["direct", "partition"])
    sp.set_defaults(func=cmd_build)

    sp = sub.add_parser("certify", help="worst-case error of a saved d=1 rule")
    add_common(sp)
    sp.add_argument("--rule", help="rule JSON file")
    sp.add_argument("--alpha", type=int)
    sp.add_argument("--m", type=int)
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("sweep", help="certify a grid of budgets and fit slopes")
    add_common(sp)
    sp.add_argument("--alphas", help="comma list, e.g. 1,2,3")
    sp.add_argument("--n", help="budget grid: comma list or a..bxk")
    sp.add_argument("--delta", type=float)
    sp.add_argument("--psi", type=int)
    sp.add_argument("--base", choices=["smolyak", "fibonacci"])
    sp.add_argument("--m", type=int)
    sp.add_argument("--timings", action="store_true",
                    help="record wall time in the CSV (breaks byte-identity)")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("grid", help="dump SG(xi) or G(xi)")
    add_common(sp)
    sp.add_argument("--kind", choices=["sg", "hc"])
    sp.add_argument("--xi", type=float)
    sp.add_argument("--d", type=int)
    sp.set_defaults(func=cmd_grid)

    sp = sub.add_parser("partition-check", help="sample the partition-of-unity sum")
    add_common(sp)
    sp.add_argument("--theta", type=float)
    sp.add_argument("--d", type=int)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_partition_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code = args.func(args)
    except ValidationFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_VALIDATION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_VALIDATION
    except Exception as exc:  # construction-stage failures
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_CONSTRUCTION
    return code


if __name__ == "__main__":
    sys.exit(main())
