"""Lazy proper rooted S-labeled oriented multigraphs.

Every oracle exposes the two per-label maps of a proper Schreier graph:
``out(s, v)`` (follow the ``s``-edge) and ``into(s, v)`` (the unique vertex whose
``s``-edge points at ``v``), for positive generators ``s``.  Inverse labels are
derived from ``into``; nothing is stored.  ``succ(v, x)`` accepts a signed
letter and ``act(v, g)`` applies a word left to right, so ``act(v, g h) ==
act(act(v, g), h)``.
"""

from __future__ import annotations

from collections import deque
from typing import Hashable, Iterable, Sequence

import numpy as np

from ..nilquot import NilElement, nil_generator, nil_identity, nil_mul_letter
from ..words import ResourceError, Word, cancellation, mul, reduce_word

Vertex = Hashable

BFS_CAP = 3_000_000


class GraphOracle:
    """Base class; subclasses implement ``out`` and ``into``."""

    d: int = 2
    family: str = "generic"

    @property
    def root(self) -> Vertex:
        raise NotImplementedError

    def out(self, s: int, v: Vertex) -> Vertex:
        raise NotImplementedError

    def into(self, s: int, v: Vertex) -> Vertex:
        raise NotImplementedError

    def validate(self, v: Vertex) -> None:
        """Raise ``ValueError`` on a malformed address."""

    def succ(self, v: Vertex, x: int) -> Vertex:
        return self.out(x, v) if x > 0 else self.into(-x, v)

    def act(self, v: Vertex, g: Sequence[int]) -> Vertex:
        self.validate(v)
        for x in g:
            v = self.out(x, v) if x > 0 else self.into(-x, v)
        return v

    def letters(self) -> list[int]:
        out = []
        for i in range(1, self.d + 1):
            out += [i, -i]
        return out

    def neighbors(self, v: Vertex) -> Iterable[Vertex]:
        for x in self.letters():
            yield self.succ(v, x)

    def distance(self, v: Vertex, cap: int = 64) -> int:
        """Graph distance to the root (BFS fallback, bounded by ``cap``)."""
        if v == self.root:
            return 0
        dist = bfs_ball(self, self.root, cap)
        if v not in dist:
            raise ResourceError(f"vertex not within distance {cap} of the root")
        return dist[v]

    def within(self, v: Vertex, k: int) -> bool:
        """Whether ``v`` lies in the ball of radius ``k`` about the root."""
        try:
            return self.distance(v, cap=k) <= k
        except ResourceError:
            return False


def bfs_ball(oracle: GraphOracle, v: Vertex, r: int, cap: int = BFS_CAP) -> dict:
    """Vertex -> distance for the ball of radius ``r`` about ``v``."""
    dist = {v: 0}
    queue = deque([v])
    letters = oracle.letters()
    while queue:
        u = queue.popleft()
        du = dist[u]
        if du == r:
            continue
        for x in letters:
            w = oracle.succ(u, x)
            if w not in dist:
                dist[w] = du + 1
                if len(dist) > cap:
                    raise ResourceError(f"BFS ball exceeds cap {cap}")
                queue.append(w)
    return dist


def bfs_geodesic(oracle: GraphOracle, target: Vertex, cap_radius: int = 64) -> Word:
    """A shortest label word from the root to ``target``."""
    root = oracle.root
    if target == root:
        return ()
    parent: dict = {root: None}
    queue = deque([(root, 0)])
    letters = oracle.letters()
    while queue:
        u, du = queue.popleft()
        if du >= cap_radius:
            continue
        for x in letters:
            w = oracle.succ(u, x)
            if w in parent:
                continue
            parent[w] = (u, x)
            if w == target:
                path = []
                while parent[w] is not None:
                    w, x = parent[w]
                    path.append(x)
                return tuple(reversed(path))
            queue.append((w, du + 1))
    raise ResourceError(f"target not within distance {cap_radius} of the root")


# -- Cayley graphs of quotients ---------------------------------------------


class ZsOracle(GraphOracle):
    """Schreier graph of ``K_s = ker(pi_s)``: Z with loops for the other labels."""

    family = "Zs"

    def __init__(self, s: int, d: int = 2):
        if not 1 <= s <= d:
            raise ValueError("generator index out of range")
        self.s = s
        self.d = d

    @property
    def root(self) -> int:
        return 0

    def validate(self, v) -> None:
        if not isinstance(v, (int, np.integer)):
            raise ValueError(f"Z_s address must be an integer, got {v!r}")

    def out(self, s, v):
        return v + 1 if s == self.s else v

    def into(self, s, v):
        return v - 1 if s == self.s else v

    def distance(self, v, cap=64):
        return abs(v)

    def within(self, v, k):
        return abs(v) <= k


class LambdaOracle(GraphOracle):
    """Cayley graph of the free 2-step nilpotent quotient."""

    family = "Lambda"

    def __init__(self, d: int = 2):
        self.d = d
        self._dist = MultiSourceDistance(d, [nil_identity(d)])

    @property
    def root(self) -> NilElement:
        return nil_identity(self.d)

    def validate(self, v) -> None:
        if not isinstance(v, NilElement) or len(v.x) != self.d:
            raise ValueError(f"malformed Lambda address {v!r}")

    def out(self, s, v):
        return nil_mul_letter(v, s)

    def into(self, s, v):
        return nil_mul_letter(v, -s)

    def distance(self, v, cap=64):
        dv = self._dist.distance(v, cap)
        if dv is None:
            raise ResourceError(f"Lambda element beyond radius {cap}")
        return dv

    def within(self, v, k):
        dv = self._dist.distance(v, k)
        return dv is not None and dv <= k


class FreeOracle(GraphOracle):
    """Cayley graph of F_d itself (trivial subgroup)."""

    family = "free"

    def __init__(self, d: int = 2):
        self.d = d

    @property
    def root(self):
        return ()

    def out(self, s, v):
        return mul(v, (s,))

    def into(self, s, v):
        return mul(v, (-s,))

    def act(self, v, g):
        return reduce_word(tuple(v) + tuple(g))

    def distance(self, v, cap=64):
        return len(v)

    def within(self, v, k):
        return len(v) <= k


class MultiSourceDistance:
    """Incremental BFS distances in Lambda from a finite source set."""

    def __init__(self, d: int, sources: Iterable[NilElement], cap: int = BFS_CAP):
        self.d = d
        self.cap = cap
        self.dist = {s: 0 for s in sources}
        self.frontier = list(self.dist)
        self.radius = 0
        self._letters = [x for i in range(1, d + 1) for x in (i, -i)]

    def _grow(self) -> None:
        nxt = []
        r = self.radius + 1
        for u in self.frontier:
            for x in self._letters:
                w = nil_mul_letter(u, x)
                if w not in self.dist:
                    self.dist[w] = r
                    nxt.append(w)
        if len(self.dist) > self.cap:
            raise ResourceError(f"Lambda BFS exceeds cap {self.cap}")
        self.frontier = nxt
        self.radius = r

    def distance(self, v: NilElement, max_radius: int) -> int | None:
        """Exact distance if ``<= max_radius``, else ``None``."""
        got = self.dist.get(v)
        if got is not None:
            return got
        # abelianized length is a lower bound for the word length
        if sum(abs(t) for t in v.x) - 1 > max_radius:
            return None
        while self.radius < max_radius:
            self._grow()
            got = self.dist.get(v)
            if got is not None:
                return got
        return None


# -- the glued graph --------------------------------------------------------

TREE, RAY, COPY = "T", "R", "C"


class GluedOracle(GraphOracle):
    """Depth-``n`` free tree with rays, lines and punctured Lambda copies at the leaves.

    Addresses: ``("T", w)`` with ``|w| <= n``; ``("R", leaf, g, k)`` the vertex
    at signed position ``k != 0`` on the ``a_g``-line through ``leaf``;
    ``("C", leaf, x)`` the vertex ``x`` of the Lambda copy hanging off ``leaf``.
    The glue generator is ``a = a_1``.
    """

    family = "glued"

    def __init__(self, n: int, d: int = 2, lambda_radius_cap: int = 40):
        if n < 1:
            raise ValueError("glued depth must be >= 1")
        if d < 2:
            raise ValueError("need d >= 2")
        self.n = n
        self.d = d
        self.a = 1
        self._id = nil_identity(d)
        self._ga = nil_generator(1, d)
        self._seam = MultiSourceDistance(d, [self._id, self._ga])
        self.lambda_radius_cap = lambda_radius_cap

    @property
    def root(self):
        return (TREE, ())

    # kind of the attachment carrying label ``s`` at a leaf ending in ``t``
    def _kind(self, t: int, s: int) -> str:
        if s == abs(t):
            return "ray"
        if s == self.a:
            return "copy"
        return "line"

    def validate(self, v) -> None:
        ok = isinstance(v, tuple) and v and v[0] in (TREE, RAY, COPY)
        if ok and v[0] == TREE:
            ok = len(v) == 2 and isinstance(v[1], tuple) and len(v[1]) <= self.n
        elif ok and v[0] == RAY:
            ok = len(v) == 4 and len(v[1]) == self.n and v[3] != 0
            if ok:
                kind = self._kind(v[1][-1], v[2])
                t = v[1][-1]
                ok = kind == "line" or (kind == "ray" and (v[3] > 0) == (t > 0))
        elif ok and v[0] == COPY:
            ok = len(v) == 3 and len(v[1]) == self.n and isinstance(v[2], NilElement)
            ok = ok and self._kind(v[1][-1], self.a) == "copy"
        if not ok:
            raise ValueError(f"malformed glued-graph address {v!r}")

    def out(self, s, v):
        tag = v[0]
        if tag == TREE:
            w = v[1]
            if w and w[-1] == -s:
                return (TREE, w[:-1])
            if len(w) < self.n:
                return (TREE, w + (s,))
            kind = self._kind(w[-1], s)
            if kind == "copy":
                return (COPY, w, self._ga)
            return (RAY, w, s, 1)
        if tag == RAY:
            if s != v[2]:
                return v
            k = v[3] + 1
            return (TREE, v[1]) if k == 0 else (RAY, v[1], v[2], k)
        x = v[2]
        if s == self.a and x == self._id:
            return (TREE, v[1])
        return (COPY, v[1], nil_mul_letter(x, s))

    def into(self, s, v):
        tag = v[0]
        if tag == TREE:
            w = v[1]
            if w and w[-1] == s:
                return (TREE, w[:-1])
            if len(w) < self.n:
                return (TREE, w + (-s,))
            kind = self._kind(w[-1], s)
            if kind == "copy":
                return (COPY, w, self._id)
            return (RAY, w, s, -1)
        if tag == RAY:
            if s != v[2]:
                return v
            k = v[3] - 1
            return (TREE, v[1]) if k == 0 else (RAY, v[1], v[2], k)
        x = v[2]
        if s == self.a and x == self._ga:
            return (TREE, v[1])
        return (COPY, v[1], nil_mul_letter(x, -s))

    def act(self, v, g):
        """Letter-by-letter action with a fast path through the tree part."""
        self.validate(v)
        g = reduce_word(g)
        n = self.n
        i = 0
        m = len(g)
        while i < m:
            if v[0] == TREE:
                w = v[1]
                rest = g[i:]
                c = cancellation(w, rest)
                u = w[: len(w) - c]
                take = min(len(rest) - c, n - len(u))
                w = u + tuple(rest[c : c + take])
                i += c + take
                v = (TREE, w)
                if i >= m:
                    break
            x = g[i]
            v = self.out(x, v) if x > 0 else self.into(-x, v)
            i += 1
        return v

    def seam_distance(self, x: NilElement, max_radius: int) -> int | None:
        return self._seam.distance(x, max_radius)

    def distance(self, v, cap=None):
        tag = v[0]
        if tag == TREE:
            return len(v[1])
        if tag == RAY:
            return self.n + abs(v[3])
        cap = self.lambda_radius_cap if cap is None else max(cap - self.n - 1, 0)
        dv = self._seam.distance(v[2], cap)
        if dv is None:
            raise ResourceError(f"copy vertex beyond Lambda radius {cap}")
        return self.n + 1 + dv

    def within(self, v, k):
        tag = v[0]
        if tag == TREE:
            return len(v[1]) <= k
        if tag == RAY:
            return self.n + abs(v[3]) <= k
        budget = k - self.n - 1
        if budget < 0:
            return False
        dv = self._seam.distance(v[2], budget)
        return dv is not None and dv <= budget

    def leaf_of(self, v) -> Word:
        """The tree word a vertex hangs from (itself for tree vertices)."""
        return v[1]

    def prefix(self, v, r: int) -> Word:
        if r > self.n:
            raise ValueError(f"prefix radius {r} exceeds the guaranteed radius {self.n}")
        return v[1][:r]


class ProductOracle(GraphOracle):
    """Coset graph of an intersection, embedded in the product of the factors."""

    family = "product"

    def __init__(self, factors: Sequence[GraphOracle]):
        if not factors:
            raise ValueError("need at least one factor")
        d = {f.d for f in factors}
        if len(d) != 1:
            raise ValueError("factors disagree on d")
        self.factors = list(factors)
        self.d = d.pop()

    @property
    def root(self):
        return tuple(f.root for f in self.factors)

    def validate(self, v):
        if not isinstance(v, tuple) or len(v) != len(self.factors):
            raise ValueError(f"malformed product address {v!r}")
        for f, c in zip(self.factors, v):
            f.validate(c)

    def out(self, s, v):
        return tuple(f.out(s, c) for f, c in zip(self.factors, v))

    def into(self, s, v):
        return tuple(f.into(s, c) for f, c in zip(self.factors, v))

    def act(self, v, g):
        self.validate(v)
        return tuple(f.act(c, g) for f, c in zip(self.factors, v))


def intersection_oracle(depths: Iterable[int], d: int = 2) -> ProductOracle:
    """``K_n = K'_1 ∩ ... ∩ K'_n`` with ``K'_j`` the glued subgroup of depth ``j``."""
    return ProductOracle([GluedOracle(j, d) for j in depths])


class TableOracle(GraphOracle):
    """Finite oracle given by explicit successor tables (test fixtures)."""

    family = "table"

    def __init__(self, d: int, out_table: dict, in_table: dict | None = None, root=0):
        self.d = d
        self._out = out_table
        self._in = in_table
        self._root = root
        if in_table is None:
            self._in = {}
            for (s, v), w in out_table.items():
                self._in[(s, w)] = v

    @property
    def root(self):
        return self._root

    def validate(self, v):
        if (1, v) not in self._out:
            raise ValueError(f"unknown vertex {v!r}")

    def out(self, s, v):
        return self._out[(s, v)]

    def into(self, s, v):
        return self._in[(s, v)]


def zs_oracle(s: int, d: int = 2) -> ZsOracle:
    return ZsOracle(s, d)


def cayley_oracle(quotient: str, d: int = 2, s: int = 1) -> GraphOracle:
    if quotient.lower() in ("lambda", "nil", "heisenberg"):
        return LambdaOracle(d)
    if quotient.lower() in ("zs", "z"):
        return ZsOracle(s, d)
    if quotient.lower() == "free":
        return FreeOracle(d)
    raise ValueError(f"unknown quotient {quotient!r}")


def build_glued(n: int, d: int = 2) -> GluedOracle:
    return GluedOracle(n, d)


# -- materialized neighbourhoods --------------------------------------------


class Region:
    """A finite ball of an oracle indexed ``0..N-1`` with successor arrays.

    ``succ[x]`` maps an index to the index of its ``x``-neighbour, or ``-1``
    when that neighbour lies outside the region.
    """

    def __init__(self, oracle: GraphOracle, center, radius: int, cap: int = BFS_CAP):
        dist = bfs_ball(oracle, center, radius, cap=cap)
        self.oracle = oracle
        self.center = center
        self.radius = radius
        self.vertices = list(dist)
        self.dist = np.array([dist[v] for v in self.vertices], dtype=np.int32)
        self.index = {v: i for i, v in enumerate(self.vertices)}
        self.succ: dict[int, np.ndarray] = {}
        for x in oracle.letters():
            arr = np.empty(len(self.vertices), dtype=np.int64)
            for i, v in enumerate(self.vertices):
                arr[i] = self.index.get(oracle.succ(v, x), -1)
            self.succ[x] = arr

    def __len__(self) -> int:
        return len(self.vertices)

    def act_indices(self, idx: np.ndarray, g: Sequence[int]) -> np.ndarray:
        """Apply ``g`` to an array of region indices; raises if a path leaves."""
        for x in g:
            idx = self.succ[x][idx]
            if (idx < 0).any():
                raise ResourceError("path left the materialized region")
        return idx

    def ball_indices(self, r: int) -> np.ndarray:
        return np.nonzero(self.dist <= r)[0]


class LazyRegion:
    """Indexed vertex set that grows on demand, with cached successor arrays.

    Used to act by a word on every vertex of a large window at once: the
    first pass fills the cache with oracle calls, later passes are numpy
    lookups.
    """

    def __init__(self, oracle: GraphOracle, vertices: Iterable = ()):
        self.oracle = oracle
        self.vertices: list = []
        self.index: dict = {}
        self._letters = oracle.letters()
        self._succ = {x: np.full(0, -1, dtype=np.int64) for x in self._letters}
        self.add(vertices)

    def __len__(self) -> int:
        return len(self.vertices)

    def add(self, vertices: Iterable) -> np.ndarray:
        out = []
        for v in vertices:
            i = self.index.get(v)
            if i is None:
                i = len(self.vertices)
                self.index[v] = i
                self.vertices.append(v)
            out.append(i)
        self._grow()
        return np.array(out, dtype=np.int64)

    def _grow(self) -> None:
        n = len(self.vertices)
        for x in self._letters:
            arr = self._succ[x]
            if len(arr) < n:
                new = np.full(max(n, 2 * len(arr)), -1, dtype=np.int64)
                new[: len(arr)] = arr
                self._succ[x] = new

    def step(self, idx: np.ndarray, x: int) -> np.ndarray:
        arr = self._succ[x]
        out = arr[idx]
        missing = np.nonzero(out < 0)[0]
        if missing.size:
            for j in np.unique(idx[missing]):
                w = self.oracle.succ(self.vertices[j], x)
                k = self.index.get(w)
                if k is None:
                    k = len(self.vertices)
                    self.index[w] = k
                    self.vertices.append(w)
                self._grow()
                arr = self._succ[x]
                arr[j] = k
            out = arr[idx]
        return out

    def act(self, idx: np.ndarray, g: Sequence[int]) -> np.ndarray:
        for x in g:
            idx = self.step(idx, x)
        return idx
