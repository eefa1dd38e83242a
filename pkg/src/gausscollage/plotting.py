"""Figure rendering for the CLI report paths.

Figures accompany the delimited outputs: node layouts for built rules
(d <= 2) and log-log convergence plots for sweeps.  Rendering is
deterministic (Agg backend, fixed metadata), so PNG outputs are
byte-identical across runs.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["save_rule_figure", "save_sweep_figure"]

_PNG_META = {"Software": "gauss-collage"}


def save_rule_figure(rule, path) -> bool:
    """Scatter the nodes of a rule (weight-coded); returns False for d > 2."""
    d = rule.d
    if d > 2 or len(rule) == 0:
        return False
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    if d == 1:
        ax.scatter(rule.nodes[:, 0], rule.weights, s=12, color="#1f5fa8")
        ax.axhline(0.0, color="0.6", lw=0.8)
        ax.set_xlabel("x")
        ax.set_ylabel("weight")
    else:
        w = np.abs(rule.weights)
        wmax = w.max() if w.size else 1.0
        sizes = 4.0 + 40.0 * (w / wmax if wmax > 0 else w)
        ax.scatter(rule.nodes[:, 0], rule.nodes[:, 1], s=sizes, color="#1f5fa8", alpha=0.7)
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
        ax.set_aspect("equal")
    ax.set_title(f"{getattr(rule, 'rule', rule).family}: {len(rule)} nodes")
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata=_PNG_META)
    plt.close(fig)
    return True


def save_sweep_figure(rows, slopes: dict, path) -> bool:
    """Log-log error-vs-nodes plot, one line per alpha, with fitted slopes."""
    alphas = sorted({r.alpha for r in rows})
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    plotted = False
    for a in alphas:
        pts = [(r.n_actual, r.err_m) for r in rows
               if r.alpha == a and not r.error and r.n_actual > 0 and math.isfinite(r.err_m)]
        if not pts:
            continue
        ns = [p[0] for p in pts]
        errs = [p[1] for p in pts]
        slope = slopes.get(str(a))
        label = f"alpha={a}" + (f" (slope {slope:.2f})" if slope is not None else "")
        ax.loglog(ns, errs, "o-", label=label)
        plotted = True
    if not plotted:
        plt.close(fig)
        return False
    ax.set_xlabel("nodes")
    ax.set_ylabel("worst-case error")
    ax.grid(True, which="both", lw=0.3, alpha=0.5)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata=_PNG_META)
    plt.close(fig)
    return True
