"""PNG figures for CLI result rows (``[quantity, parameters, estimate, ci, samples, seed]``)."""

from __future__ import annotations

import os
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _param(params: str, key: str):
    for part in params.split(";"):
        k, _, v = part.partition("=")
        if k == key:
            return v
    return None


def _series(rows, quantity: str, key: str):
    xs, ys, es = [], [], []
    for q, p, est, ci, *_ in rows:
        if q == quantity:
            v = _param(p, key)
            if v is None:
                continue
            xs.append(float(v))
            ys.append(float(est))
            es.append(float(ci))
    return xs, ys, es


def _save(fig, out_dir: str, name: str) -> str:
    path = os.path.join(out_dir, name)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _line_plot(rows, quantity, key, out_dir, name, xlabel, ylabel, hlines=(), logy=False, logx=False):
    xs, ys, es = _series(rows, quantity, key)
    if not xs:
        return None
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.errorbar(xs, ys, yerr=es, marker="o", ms=3, capsize=2, label=quantity)
    for label, y in hlines:
        ax.axhline(y, ls="--", lw=1, color="gray")
        ax.annotate(label, (xs[0], y), fontsize=8, va="bottom")
    if logy:
        ax.set_yscale("log")
    if logx:
        ax.set_xscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return _save(fig, out_dir, name)


def _value(rows, quantity):
    for q, _, est, *_ in rows:
        if q == quantity:
            return float(est)
    return None


def render(experiment: str, rows: list, out_dir: str) -> list[str]:
    """Write the figures for one experiment and return their paths."""
    out = []
    if experiment == "entropy-bracket":
        hl = [(k, v) for k, v in (("target", _value(rows, "target")), ("lower", _value(rows, "prefix_lower")))
              if v is not None]
        out.append(_line_plot(rows, "delta", "t", out_dir, "entropy-bracket.png", "t", "H(X_t) - H(X_{t-1})", hl))
    elif experiment == "irs-sweep":
        hl = [("delta_t", v) for v in [_value(rows, "delta_t")] if v is not None]
        out.append(_line_plot(rows, "h", "p", out_dir, "irs-sweep.png", "p", "entropy rate of core images", hl))
    elif experiment == "nil-decay":
        fig, ax = plt.subplots(figsize=(5, 3.5))
        groups = defaultdict(list)
        for q, p, est, *_ in rows:
            if q.startswith("delta:"):
                groups[q[6:]].append((int(_param(p, "t")), float(est)))
        for name, pts in groups.items():
            ax.plot(*zip(*pts), marker="o", ms=3, label=name)
        ax.set_xlabel("t")
        ax.set_ylabel("entropy increment")
        ax.legend()
        out.append(_save(fig, out_dir, "nil-decay.png"))
    elif experiment == "green":
        out.append(_line_plot(rows, "ball_visits_free", "r", out_dir, "green-ball-visits.png", "r",
                              "expected visits to ball(r)", logx=True, logy=True))
    elif experiment == "prefix-flip":
        out.append(_line_plot(rows, "mismatch_upper95", "n", out_dir, "prefix-flip.png", "n",
                              "upper 95% bound on mismatch"))
    elif experiment == "norm-count":
        counts = [float(est) for q, _, est, *_ in rows if q == "norm"]
        if counts:
            fig, ax = plt.subplots(figsize=(5, 3.5))
            ax.hist(counts, bins=30)
            ax.set_xlabel("truncated norm")
            ax.set_ylabel("words")
            out.append(_save(fig, out_dir, "norm-count.png"))
    else:
        fig, ax = plt.subplots(figsize=(6, 0.3 * max(len(rows), 4)))
        labels = [f"{q} [{p}]"[:60] for q, p, *_ in rows]
        vals = [float(r[2]) for r in rows]
        ax.barh(range(len(vals)), vals)
        ax.set_yticks(range(len(vals)))
        ax.set_yticklabels(labels, fontsize=7)
        ax.invert_yaxis()
        out.append(_save(fig, out_dir, f"{experiment}.png"))
    return [p for p in out if p]
