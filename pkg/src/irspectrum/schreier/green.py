"""Monte Carlo Green functions on Schreier oracles.

``g^{m+}(alpha, B) = sum_{t >= m} P[alpha X_t in B]``.  Walks start at the
source vertex and count visits to the target; for symmetric laws on Cayley
graphs the order of the two arguments does not matter, and on general Schreier
graphs this "start at the source, count visits to the target" convention is the
one used throughout.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from ..walks import StepLaw, WordBatch
from .oracles import FreeOracle, GraphOracle


@dataclass
class GreenEstimate:
    value: float
    se: float
    samples: int
    horizon: int
    m: int
    tail_fraction: float      # share of visits falling in the last quarter of the horizon
    stabilized: bool

    @property
    def ci95(self) -> tuple[float, float]:
        return (self.value - 1.96 * self.se, self.value + 1.96 * self.se)


def _as_predicate(target) -> Callable:
    if callable(target):
        return target
    target = set(target)
    return target.__contains__


def walk_vertices(oracle: GraphOracle, law: StepLaw, rng: np.random.Generator, horizon: int, start=None):
    """Yield ``start X_t`` for ``t = 0..horizon``."""
    v = oracle.root if start is None else start
    yield v
    letters, lengths = law.sample_batch(rng, horizon)
    for t in range(horizon):
        u = [int(x) for x in letters[t, : lengths[t]]]
        for x in u:
            v = oracle.succ(v, x)
        yield v


def visit_counts(oracle: GraphOracle, law: StepLaw, rng: np.random.Generator, samples: int, horizon: int,
                 score: Callable, start=None) -> np.ndarray:
    """``(samples, horizon + 1)`` array of ``score(start X_t)`` values."""
    out = np.zeros((samples, horizon + 1))
    for i in range(samples):
        for t, v in enumerate(walk_vertices(oracle, law, rng, horizon, start)):
            out[i, t] = score(v)
    return out


def green_estimate(oracle: GraphOracle, source, target, m: int, law: StepLaw, samples: int, horizon: int,
                   rng: np.random.Generator, tail_tolerance: float = 0.02) -> GreenEstimate:
    """Expected visits to ``target`` during ``t in [m, horizon]`` starting at ``source``.

    ``target`` is a vertex collection or a predicate.  ``stabilized`` is false
    when more than ``tail_tolerance`` of all visits happen in the last quarter
    of the horizon, which is how a recurrent or slowly escaping walk shows up.
    """
    if m > horizon:
        warnings.warn("m beyond the horizon; estimate is 0", RuntimeWarning, stacklevel=2)
        return GreenEstimate(0.0, 0.0, samples, horizon, m, 0.0, True)
    hit = _as_predicate(target)
    counts = visit_counts(oracle, law, rng, samples, horizon, lambda v: 1.0 if hit(v) else 0.0, source)
    per_walk = counts[:, m:].sum(axis=1)
    tail = counts[:, max(m, horizon - horizon // 4):].sum()
    total = counts[:, m:].sum()
    frac = float(tail / total) if total > 0 else 0.0
    se = float(per_walk.std(ddof=1) / np.sqrt(samples)) if samples > 1 else float("inf")
    return GreenEstimate(float(per_walk.mean()), se, samples, horizon, m, frac, frac <= tail_tolerance)


# -- visits to balls ------------------------------------------------------------


@dataclass
class VisitProfile:
    r_values: np.ndarray
    mean: np.ndarray
    se: np.ndarray
    exponent: float          # least-squares slope of log(mean) against log(r)
    exponent_se: float
    samples: int
    horizon: int
    tail_fraction: np.ndarray


def fit_power(r: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Slope and its standard error of ``log y`` on ``log r``."""
    x = np.log(np.asarray(r, dtype=float))
    z = np.log(np.asarray(y, dtype=float))
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(A, z, rcond=None)
    dof = max(len(x) - 2, 1)
    resid = z - A @ coef
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(A.T @ A)
    return float(coef[0]), float(np.sqrt(cov[0, 0]))


def visit_count_profile(law: StepLaw, oracle: GraphOracle, r_values: Sequence[int], samples: int, horizon: int,
                        rng: np.random.Generator, chunk: int = 20_000) -> VisitProfile:
    """``sum_t P[|X_t| <= r]`` per ``r`` with standard errors and a fitted growth exponent.

    On the free group the walk is simulated directly as reduced words;
    other oracles go through :func:`visit_counts` with their distance.
    """
    r_values = np.asarray(sorted(r_values), dtype=np.int64)
    rmax = int(r_values.max())
    if isinstance(oracle, FreeOracle) or oracle is None:
        per = np.zeros((samples, len(r_values)))
        tail = np.zeros(len(r_values))
        total = np.zeros(len(r_values))
        for start in range(0, samples, chunk):
            k = min(chunk, samples - start)
            batch = WordBatch(k, law.d, capacity=max(64, rmax + 2 * law.max_length))
            acc = np.zeros((k, len(r_values)))
            for t in range(horizon + 1):
                if t:
                    letters, lengths = law.sample_batch(rng, k)
                    batch.apply(letters, lengths)
                inside = batch.length[:, None] <= r_values[None, :]
                acc += inside
                if t >= horizon - horizon // 4:
                    tail += inside.sum(axis=0)
            per[start:start + k] = acc
            total += acc.sum(axis=0)
    else:
        per = np.zeros((samples, len(r_values)))
        tail = np.zeros(len(r_values))
        total = np.zeros(len(r_values))
        for i in range(samples):
            for t, v in enumerate(walk_vertices(oracle, law, rng, horizon)):
                inside = np.array([oracle.within(v, int(r)) for r in r_values])
                per[i] += inside
                if t >= horizon - horizon // 4:
                    tail += inside
        total = per.sum(axis=0)
    mean = per.mean(axis=0)
    se = per.std(axis=0, ddof=1) / np.sqrt(samples)
    fit = (r_values > 0) & (mean > 0)
    expo, expo_se = fit_power(r_values[fit], mean[fit]) if fit.sum() >= 3 else (float("nan"), float("nan"))
    return VisitProfile(r_values, mean, se, expo, expo_se, samples, horizon,
                        np.divide(tail, total, out=np.zeros_like(tail), where=total > 0))
