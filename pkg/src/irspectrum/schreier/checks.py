"""Verifiers for Schreier oracles: properness, rad, ball signatures, locality, prefixes."""

from __future__ import annotations

import csv
import struct
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from ..nilquot import NilElement, nil_identity, nil_mul_letter
from ..words import Word, ball, ball_size, random_reduced_word
from .oracles import (
    COPY,
    RAY,
    TREE,
    GluedOracle,
    GraphOracle,
    LambdaOracle,
    ZsOracle,
    bfs_ball,
    bfs_geodesic,
)


class ContractError(RuntimeError):
    """An operation was called without its documented precondition."""


# -- properness ---------------------------------------------------------------


@dataclass
class ProperReport:
    passed: bool
    checked: int
    violations: list = field(default_factory=list)  # (vertex, label, which)


def verify_properness(oracle: GraphOracle, window: Iterable, max_violations: int = 20) -> ProperReport:
    """Round-trip ``into(s, out(s, v)) == v`` and ``out(s, into(s, v)) == v`` on a window."""
    violations = []
    checked = 0
    for v in window:
        checked += 1
        for s in range(1, oracle.d + 1):
            try:
                if oracle.into(s, oracle.out(s, v)) != v:
                    violations.append((v, s, "into(out(v)) != v"))
                if oracle.out(s, oracle.into(s, v)) != v:
                    violations.append((v, s, "out(into(v)) != v"))
            except (KeyError, ValueError) as exc:
                violations.append((v, s, f"undefined: {exc}"))
        if len(violations) >= max_violations:
            break
    return ProperReport(not violations, checked, violations)


# -- rad ------------------------------------------------------------------------


@dataclass
class RadReport:
    passed: bool
    n: int
    ball_vertices: int
    expected: int
    collisions: list = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.passed


def verify_rad(oracle: GraphOracle, n: int) -> RadReport:
    """Tree shape of the radius-``n`` root ball.

    Passes iff the BFS ball has ``|ball(n)|`` vertices and the words of
    ``ball(n)`` land on pairwise distinct vertices (so no ``1 <= |g| <= n``
    fixes the root).  On success the oracle is tagged with a rad certificate
    used by :func:`graph_prefix`.
    """
    expected = ball_size(n, oracle.d)
    size = len(bfs_ball(oracle, oracle.root, n, cap=4 * expected + 16))
    seen: dict = {}
    collisions = []
    for g in ball(n, oracle.d):
        v = oracle.act(oracle.root, g)
        if v in seen:
            collisions.append((seen[v], g))
            if len(collisions) >= 10:
                break
        else:
            seen[v] = g
    passed = size == expected and not collisions
    if passed:
        oracle.rad_certificate = max(getattr(oracle, "rad_certificate", 0), n)
    return RadReport(passed, n, size, expected, collisions)


# -- signatures -----------------------------------------------------------------

_OUTSIDE = 0xFFFFFFFF


def ball_signature(oracle: GraphOracle, v, r: int) -> bytes:
    """Canonical encoding of the rooted labeled ball ``B(v, r)``.

    Discovery order comes from BFS expanding labels in the order
    ``a_1, a_1^-1, a_2, ...``; each vertex then lists the discovery index of
    its positive-label successors (``0xFFFFFFFF`` when outside the ball).
    Successor-deterministic graphs make this order canonical.
    """
    order = [v]
    dist = {v: 0}
    queue = deque([v])
    letters = oracle.letters()
    while queue:
        u = queue.popleft()
        if dist[u] == r:
            continue
        for x in letters:
            w = oracle.succ(u, x)
            if w not in dist:
                dist[w] = dist[u] + 1
                order.append(w)
                queue.append(w)
    index = {u: i for i, u in enumerate(order)}
    vals = [oracle.d, r, len(order)]
    for u in order:
        for s in range(1, oracle.d + 1):
            vals.append(index.get(oracle.out(s, u), _OUTSIDE))
    return struct.pack(f"<{len(vals)}I", *vals)


def signature_hex(sig: bytes) -> str:
    return sig.hex()


def reference_signatures(d: int, r: int, seams: GluedOracle | None = None) -> dict[bytes, str]:
    """Signatures of radius-``r`` balls in ``Sch(N_j)``: Lambda and every ``Z_s``.

    Cayley graphs are vertex transitive, so one base vertex each suffices.
    With ``seams`` given, balls at ray starts and at copy vertices next to the
    deleted edge of that glued oracle are added under ``seam:*`` names.
    """
    refs: dict[bytes, str] = {}
    lam = LambdaOracle(d)
    refs.setdefault(ball_signature(lam, lam.root, r), "Lambda")
    for s in range(1, d + 1):
        z = ZsOracle(s, d)
        refs.setdefault(ball_signature(z, 0, r), f"Z{s}")
    if seams is not None:
        for name, v in seam_vertices(seams, r):
            refs.setdefault(ball_signature(seams, v, r), f"seam:{name}")
    return refs


def seam_vertices(g: GluedOracle, r: int) -> list[tuple[str, object]]:
    """Glued vertices whose radius-``r`` ball meets a leaf attachment seam."""
    out = []
    for leaf in _one_leaf_per_kind(g):
        t = leaf[-1]
        for s in range(1, g.d + 1):
            kind = g._kind(t, s)
            if kind == "copy":
                sources = [nil_identity(g.d), nil_mul_letter(nil_identity(g.d), g.a)]
                near = _lambda_ball_from(sources, g.d, r)
                for x in near:
                    out.append((f"copy{len(out)}", (COPY, leaf, x)))
            else:
                ks = range(1, r + 1) if kind == "ray" else [k for k in range(-r, r + 1) if k]
                sign = 1 if t > 0 else -1
                for k in ks:
                    kk = k * sign if kind == "ray" else k
                    out.append((f"{kind}{s}:{kk}", (RAY, leaf, s, kk)))
    return out


def _one_leaf_per_kind(g: GluedOracle) -> list[Word]:
    leaves = []
    for t in g.letters():
        leaf = tuple([t] * g.n)
        leaves.append(leaf)
    return leaves


def _lambda_ball_from(sources, d: int, r: int) -> list[NilElement]:
    dist = {s: 0 for s in sources}
    queue = deque(sources)
    letters = [x for i in range(1, d + 1) for x in (i, -i)]
    while queue:
        u = queue.popleft()
        if dist[u] == r:
            continue
        for x in letters:
            w = nil_mul_letter(u, x)
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    return list(dist)


# -- locality -------------------------------------------------------------------


@dataclass
class LocalityReport:
    passed: bool
    checked: int
    excluded: int
    matched: Counter
    violations: list = field(default_factory=list)  # (vertex, distance)
    smallest_passing_R: int | None = None


def verify_locality(oracle: GraphOracle, r: int, R: int, reference: dict[bytes, str],
                    vertices: Iterable, distance: Callable | None = None,
                    max_violations: int = 20) -> LocalityReport:
    """Every vertex at distance ``> R`` has a radius-``r`` ball isomorphic to a reference ball.

    Seam references count as matches for the pass/fail verdict.  The
    reported ``smallest_passing_R`` ignores them: it is the largest distance
    of a supplied vertex whose ball matches no pure Lambda or ``Z_s`` ball.
    """
    distance = distance or oracle.distance
    matched: Counter = Counter()
    violations = []
    checked = excluded = 0
    worst = -1
    for v in vertices:
        name = reference.get(ball_signature(oracle, v, r))
        far = not oracle.within(v, R)
        if name is None or name.startswith("seam:"):
            worst = max(worst, distance(v))
        if not far:
            excluded += 1
            continue
        checked += 1
        if name is None:
            if len(violations) < max_violations:
                violations.append((v, distance(v)))
        else:
            matched[name] += 1
    return LocalityReport(not violations, checked, excluded, matched, violations,
                          smallest_passing_R=max(worst, 0))


def sample_far_vertices(g: GluedOracle, R: int, count: int, rng: np.random.Generator,
                        max_offset: int = 24) -> list:
    """Random glued vertices at distance ``> R`` from the root, spread over attachments."""
    out = []
    attempts = 0
    while len(out) < count:
        attempts += 1
        if attempts > 100 * count:
            raise RuntimeError("could not sample enough far vertices")
        leaf = random_reduced_word(g.n, g.d, rng)
        t = leaf[-1]
        s = int(rng.integers(1, g.d + 1))
        kind = g._kind(t, s)
        if kind == "copy":
            x = nil_identity(g.d)
            for _ in range(int(rng.integers(R - g.n, R - g.n + max_offset))):
                x = nil_mul_letter(x, int(rng.choice(g.letters())))
            v = (COPY, leaf, x)
        else:
            k = int(rng.integers(max(R - g.n + 1, 1), R - g.n + max_offset + 1))
            if kind == "ray":
                k = k if t > 0 else -k
            else:
                k = k if rng.random() < 0.5 else -k
            v = (RAY, leaf, s, k)
        if not g.within(v, R):
            out.append(v)
    return out


# -- prefixes -------------------------------------------------------------------


def graph_prefix(oracle: GraphOracle, v, r: int) -> Word:
    """The depth-``r`` tree vertex every root path from ``v`` must cross, as a word."""
    if r < 0:
        raise ValueError("prefix radius must be nonnegative")
    if isinstance(oracle, GluedOracle):
        if r > oracle.n:
            raise ContractError(f"rad >= {r} not guaranteed by glued depth {oracle.n}")
        return oracle.prefix(v, r)
    if getattr(oracle, "rad_certificate", -1) < r:
        raise ContractError("graph_prefix needs verify_rad(oracle, n) with n >= r first")
    return bfs_prefix(oracle, v, r)


def bfs_prefix(oracle: GraphOracle, v, r: int, cap_radius: int = 64) -> Word:
    """Prefix by BFS geodesic (generic fallback)."""
    path = bfs_geodesic(oracle, v, cap_radius)
    return tuple(path[:r])


def cuts_every_path(oracle: GraphOracle, v, f: Word, radius: int) -> bool:
    """Whether removing ``act(root, f)`` disconnects ``v`` from the root within a window."""
    cut = oracle.act(oracle.root, f)
    if cut == v or cut == oracle.root:
        return True
    seen = {v}
    queue = deque([v])
    while queue:
        u = queue.popleft()
        for w in oracle.neighbors(u):
            if w == cut or w in seen:
                continue
            if w == oracle.root:
                return False
            if oracle.within(w, radius):
                seen.add(w)
                queue.append(w)
    return True


# -- dumps ----------------------------------------------------------------------


def write_bfs_csv(path, oracle: GraphOracle, center, radius: int) -> None:
    dist = bfs_ball(oracle, center, radius)
    order = list(dist)
    index = {u: i for i, u in enumerate(order)}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "address", "distance"] + [f"succ_{s}" for s in range(1, oracle.d + 1)])
        for i, u in enumerate(order):
            w.writerow([i, repr(u), dist[u]] + [index.get(oracle.out(s, u), -1) for s in range(1, oracle.d + 1)])
