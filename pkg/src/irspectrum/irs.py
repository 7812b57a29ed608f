"""Intersectional IRS primitives over a finite window of Schreier vertices.

A root ``v`` of the window stands for the conjugate ``K^f`` with ``v = K f``;
``g`` lies in ``K^f`` exactly when ``g`` fixes ``v``.  ``Core_A(K)`` for a
finite set of roots ``A`` is then the set of ``g`` fixing every root in ``A``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .nilquot import nil_identity, nil_project, pi_s
from .schreier.oracles import BFS_CAP, GluedOracle, GraphOracle, LazyRegion, bfs_ball
from .words import Word, format_word, reduce_word


def omega_test(oracle: GraphOracle, v, g: Sequence[int]) -> bool:
    """``g`` belongs to the conjugate of ``K`` rooted at ``v``."""
    return oracle.act(v, g) == v


# -- windows --------------------------------------------------------------------


class Window:
    """BFS window about the root with a lazily extended index for fast actions."""

    def __init__(self, oracle: GraphOracle, R: int, cap: int = BFS_CAP):
        dist = bfs_ball(oracle, oracle.root, R, cap=cap)
        self.oracle = oracle
        self.R = R
        self.lazy = LazyRegion(oracle, dist.keys())
        self.size = len(dist)
        self.dist = np.array(list(dist.values()), dtype=np.int64)
        self.idx = np.arange(self.size, dtype=np.int64)

    @property
    def vertices(self) -> list:
        return self.lazy.vertices[: self.size]

    def moved(self, g: Sequence[int]) -> np.ndarray:
        """Boolean mask over the window: ``act(v, g) != v``."""
        g = reduce_word(g)
        return self.lazy.act(self.idx, g) != self.idx


@dataclass
class NormCount:
    g: Word
    R: int
    count: int
    stabilized: bool
    count_inner: int              # count at radius R - delta
    delta: int
    certified: bool = False       # g in N and in every K_s (moved set provably finite)
    certificate_radius: int | None = None

    def row(self) -> list:
        return [format_word(self.g), self.R, self.count, int(self.stabilized), self.count_inner, self.delta,
                int(self.certified), self.certificate_radius if self.certificate_radius is not None else ""]


def certificate(oracle: GraphOracle, g: Word) -> tuple[bool, int | None]:
    """For glued oracles: whether ``g`` lies in ``N`` and every ``K_s``, and the radius bounding its moved set.

    Such a ``g`` fixes every vertex whose ``|g|``-ball misses the tree and
    the seams, so moved vertices sit within ``n + |g| + 1`` of the root.
    """
    if not isinstance(oracle, GluedOracle) or not g:
        return (not g), (0 if not g else None)
    d = oracle.d
    trivial = nil_project(g, d) == nil_identity(d) and all(pi_s(g, s) == 0 for s in range(1, d + 1))
    return trivial, (oracle.n + len(g) + 1 if trivial else None)


def norm_truncated(oracle: GraphOracle, g: Sequence[int], R: int, delta: int = 2,
                   window: Window | None = None) -> NormCount:
    """Number of window vertices moved by ``g`` at radius ``R``, and whether it matches radius ``R - delta``."""
    g = reduce_word(g)
    window = window if window is not None and window.R >= R else Window(oracle, R)
    mask = window.moved(g)
    count = int(mask[window.dist <= R].sum())
    inner = int(mask[window.dist <= R - delta].sum())
    ok, rad = certificate(oracle, g)
    return NormCount(g, R, count, count == inner, inner, delta, ok, rad)


def write_norm_csv(path, rows: Iterable[NormCount]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["word", "R", "count", "stabilized", "count_inner", "delta", "certified", "certificate_radius"])
        for r in rows:
            w.writerow(r.row())


# -- Bernoulli cores ----------------------------------------------------------------


@dataclass
class CoreWindow:
    oracle: GraphOracle
    included_roots: list
    p: float
    R: int
    seed: int | None = None
    window_size: int = 0


def sample_core_window(oracle: GraphOracle, p: float, R: int, rng: np.random.Generator,
                       seed: int | None = None, window: Window | None = None) -> CoreWindow:
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    window = window if window is not None and window.R == R else Window(oracle, R)
    keep = rng.random(window.size) < p
    roots = [v for v, k in zip(window.vertices, keep) if k]
    return CoreWindow(oracle, roots, p, R, seed, window.size)


def core_contains(window: CoreWindow, g: Sequence[int]) -> bool:
    """``g`` fixes every included root (vacuous for an empty window)."""
    return all(omega_test(window.oracle, v, g) for v in window.included_roots)


def translate_window(window: CoreWindow, gamma: Sequence[int]) -> CoreWindow:
    """Roots moved by ``gamma``: ``Core_{A.gamma}(K) = Core_A(K)^gamma``."""
    roots = [window.oracle.act(v, gamma) for v in window.included_roots]
    return CoreWindow(window.oracle, roots, window.p, window.R, window.seed, window.window_size)


@dataclass
class MarginalCheck:
    g: Word
    p: float
    norm: int
    expected: float
    empirical: float
    sigma: float
    draws: int

    @property
    def z(self) -> float:
        if self.sigma == 0:
            return 0.0 if self.empirical == self.expected else float("inf")
        return (self.empirical - self.expected) / self.sigma

    @property
    def within_3sigma(self) -> bool:
        return abs(self.empirical - self.expected) <= 3 * self.sigma + 1e-15


def core_marginal(window: Window, g: Sequence[int], p: float, draws: int, rng: np.random.Generator,
                  R: int | None = None) -> MarginalCheck:
    """Empirical ``P[g in Core_A]`` over Bernoulli-``p`` windows against ``(1-p)^count``."""
    R = window.R if R is None else R
    inside = window.dist <= R
    moved = window.moved(g)[inside]
    k = int(moved.sum())
    hits = 0
    # each draw: g is in the core iff no moved root was included
    for s in range(0, draws, 512):
        m = min(512, draws - s)
        inc = rng.random((m, k)) < p
        hits += int((~inc.any(axis=1)).sum())
    expected = (1.0 - p) ** k
    emp = hits / draws
    return MarginalCheck(reduce_word(g), p, k, expected, emp, float(np.sqrt(expected * (1 - expected) / draws)), draws)


def stabilized_words(oracle: GraphOracle, candidates: Iterable[Word], R: int, delta: int = 2,
                     window: Window | None = None) -> list[NormCount]:
    """Norm counts of the candidates that stabilize at ``R``, smallest count first."""
    window = window if window is not None and window.R >= R else Window(oracle, R)
    out = []
    for g in candidates:
        nc = norm_truncated(oracle, g, R, delta, window)
        if nc.stabilized and g:
            out.append(nc)
    out.sort(key=lambda c: (c.count, len(c.g), c.g))
    return out


def double_commutator_pool(d: int = 2, max_len: int = 10) -> list[Word]:
    """Reduced words of length ``<= max_len`` lying in ``N = [F, [F, F]]`` and every ``K_s``."""
    from .words import iter_sphere

    out = []
    ident = nil_identity(d)
    for L in range(1, max_len + 1):
        for w in iter_sphere(L, d):
            if nil_project(w, d) == ident:
                out.append(w)
    return out
