"""SL2(Z), its Sanov free subgroup, and hitting measures.

``F = <A, B>`` with ``A = [[1,2],[0,1]]`` and ``B = [[1,0],[2,1]]`` is free of
rank 2 and has index 12 in ``G = SL2(Z) = <S, T>``.  Words in ``F`` use the
letters ``1 = A`` and ``2 = B`` (negative for inverses), so they are ordinary
:mod:`irspectrum.words` words with ``d = 2``.
"""

from __future__ import annotations

import csv
from collections import Counter, deque
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .words import Word, reduce_word


class Mat2(NamedTuple):
    a: int
    b: int
    c: int
    d: int

    def __repr__(self) -> str:
        return f"[[{self.a}, {self.b}], [{self.c}, {self.d}]]"


def det(m: Mat2) -> int:
    return m.a * m.d - m.b * m.c


def mat(a: int, b: int, c: int, d: int) -> Mat2:
    m = Mat2(int(a), int(b), int(c), int(d))
    if det(m) != 1:
        raise ValueError(f"determinant {det(m)} != 1 for {m!r}")
    return m


def mat_mul(m: Mat2, n: Mat2) -> Mat2:
    return Mat2(m.a * n.a + m.b * n.c, m.a * n.b + m.b * n.d,
                m.c * n.a + m.d * n.c, m.c * n.b + m.d * n.d)


def mat_inv(m: Mat2) -> Mat2:
    if det(m) != 1:
        raise ValueError(f"determinant {det(m)} != 1")
    return Mat2(m.d, -m.b, -m.c, m.a)


I2 = Mat2(1, 0, 0, 1)
NEG_I = Mat2(-1, 0, 0, -1)
S = Mat2(0, -1, 1, 0)
T = Mat2(1, 1, 0, 1)
A = Mat2(1, 2, 0, 1)
B = Mat2(1, 0, 2, 1)

#: generating set of G as signed letters: 1 = S, 2 = T
G_LETTERS = (1, -1, 2, -2)
_G_MATS = {1: S, -1: mat_inv(S), 2: T, -2: mat_inv(T)}
_F_MATS = {1: A, -1: mat_inv(A), 2: B, -2: mat_inv(B)}


def g_generator(x: int) -> Mat2:
    return _G_MATS[x]


def evaluate(word: Sequence[int], gens: dict | None = None) -> Mat2:
    """Evaluate a word; by default over ``{A, B}``."""
    gens = _F_MATS if gens is None else gens
    m = I2
    for x in word:
        m = mat_mul(m, gens[x])
    return m


def evaluate_g(word: Sequence[int]) -> Mat2:
    """Evaluate a word over ``{S, T}``."""
    return evaluate(word, _G_MATS)


def _power(x: int, k: int) -> list[int]:
    return [x if k > 0 else -x] * abs(k)


def sanov_membership(m: Mat2) -> Word | None:
    """Reduced ``{A, B}``-word evaluating to ``m``, or ``None`` if ``m`` is not in F.

    Greedy reduction of the first column by left multiplication with powers
    of ``A`` and ``B``; parity makes every step strictly shrink the column.
    """
    if det(m) != 1:
        raise ValueError("not in SL2(Z)")
    if m.a % 2 != 1 or m.d % 2 != 1 or m.b % 2 or m.c % 2:
        return None
    moves: list[int] = []  # letters applied on the left, most recent last
    cur = m
    while cur.c != 0:
        if abs(cur.a) > abs(cur.c):
            k = -_round_div(cur.a, 2 * cur.c)
            cur = mat_mul(evaluate(_power(1, k)), cur) if k else cur
            moves.extend(_power(1, k))
        else:
            k = -_round_div(cur.c, 2 * cur.a)
            cur = mat_mul(evaluate(_power(2, k)), cur) if k else cur
            moves.extend(_power(2, k))
        if k == 0:  # cannot happen for matrices congruent to I mod 2
            return None
    # now cur = +-[[1, 2j], [0, 1]]
    if cur.a != 1:
        return None
    j = cur.b // 2
    # m = (moves applied left, last one outermost)^-1 * A^j
    inverse_moves = [-x for x in moves]  # P = x_k ... x_1, P^-1 = x_1^-1 ... x_k^-1
    return reduce_word(inverse_moves + _power(1, j))


def _round_div(p: int, q: int) -> int:
    """Nearest integer to ``p / q`` (exact integer arithmetic)."""
    fl = p // q
    rem = p - fl * q
    # compare 2*rem with q in magnitude, keeping sign of q
    if q > 0:
        return fl + (1 if 2 * rem > q else 0)
    return fl + (1 if 2 * rem < q else 0)


def in_F(m: Mat2) -> bool:
    return sanov_membership(m) is not None


# -- coset table --------------------------------------------------------------


@dataclass
class CosetTable:
    """Right action of ``G`` on ``F \\ G``: ``perm[x][i]`` is the coset of ``rep_i * x``."""

    index: int
    perm: dict[int, np.ndarray]
    reps: list[Mat2]
    identity: int = 0

    def coset_of_word(self, word: Sequence[int]) -> int:
        c = self.identity
        for x in word:
            c = int(self.perm[x][c])
        return c

    def coset_by_membership(self, m: Mat2) -> int:
        for i, r in enumerate(self.reps):
            if in_F(mat_mul(m, mat_inv(r))):
                return i
        raise ValueError("matrix matched no coset")


def build_coset_table(cap: int = 10_000) -> CosetTable:
    reps = [I2]
    queue = deque([0])
    edges: dict[tuple[int, int], int] = {}
    while queue:
        i = queue.popleft()
        for x in G_LETTERS:
            g = mat_mul(reps[i], _G_MATS[x])
            for j, r in enumerate(reps):
                if in_F(mat_mul(g, mat_inv(r))):
                    break
            else:
                reps.append(g)
                j = len(reps) - 1
                if j >= cap:
                    raise RuntimeError("coset enumeration exceeded cap; membership test is broken")
                queue.append(j)
            edges[(x, i)] = j
    perm = {x: np.array([edges[(x, i)] for i in range(len(reps))], dtype=np.int64) for x in G_LETTERS}
    return CosetTable(len(reps), perm, reps)


# -- hitting measure ----------------------------------------------------------


@dataclass
class HittingSample:
    T: int
    X: Mat2
    witness: Word | None
    censored: bool = False


def hitting_sample(rng: np.random.Generator, table: CosetTable | None = None, cap: int = 1_000_000) -> HittingSample:
    """One return to F by the uniform ``{S^+-1, T^+-1}`` walk."""
    table = table or build_coset_table()
    m = I2
    c = table.identity
    for t in range(1, cap + 1):
        x = G_LETTERS[int(rng.integers(4))]
        m = mat_mul(m, _G_MATS[x])
        c = int(table.perm[x][c])
        if c == table.identity:
            return HittingSample(t, m, sanov_membership(m))
    return HittingSample(cap, m, None, censored=True)


@dataclass
class HittingBatch:
    T: np.ndarray            # return times (cap where censored)
    X: list[Mat2]            # X_T for uncensored samples
    censored: int

    def atom_counts(self) -> Counter:
        return Counter(self.X)


_GEN_ARR = {x: np.array(_G_MATS[x], dtype=np.int64) for x in G_LETTERS}


def hitting_batch(rng: np.random.Generator, samples: int, table: CosetTable | None = None,
                  cap: int = 1_000_000, chunk: int = 200_000) -> HittingBatch:
    """Vectorized hitting samples; int64 entries with an exact big-int fallback."""
    table = table or build_coset_table()
    Ts = np.empty(samples, dtype=np.int64)
    Xs: list[Mat2] = []
    censored = 0
    perm = np.stack([table.perm[x] for x in G_LETTERS])
    gens = np.stack([_GEN_ARR[x] for x in G_LETTERS])  # (4, 4) rows a, b, c, d
    for start in range(0, samples, chunk):
        m = min(chunk, samples - start)
        M = np.tile(np.array([1, 0, 0, 1], dtype=np.int64), (m, 1))
        coset = np.full(m, table.identity, dtype=np.int64)
        alive = np.arange(m)
        T_local = np.full(m, cap, dtype=np.int64)
        X_local: list = [None] * m
        t = 0
        while alive.size and t < cap:
            t += 1
            k = rng.integers(0, 4, size=alive.size)
            g = gens[k]
            Ma = M[alive]
            M[alive] = np.stack([
                Ma[:, 0] * g[:, 0] + Ma[:, 1] * g[:, 2],
                Ma[:, 0] * g[:, 1] + Ma[:, 1] * g[:, 3],
                Ma[:, 2] * g[:, 0] + Ma[:, 3] * g[:, 2],
                Ma[:, 2] * g[:, 1] + Ma[:, 3] * g[:, 3],
            ], axis=1)
            coset[alive] = perm[k, coset[alive]]
            done = coset[alive] == table.identity
            for i in alive[done]:
                T_local[i] = t
                X_local[i] = Mat2(*(int(v) for v in M[i]))
            alive = alive[~done]
            # each step at most doubles an entry; leave int64 well before overflow
            if alive.size and np.abs(M[alive]).max() > (1 << 52):
                for i in alive:
                    s = _finish_exact(rng, Mat2(*(int(v) for v in M[i])), int(coset[i]), t, table, cap)
                    T_local[i] = s.T
                    X_local[i] = None if s.censored else s.X
                alive = alive[:0]
        Ts[start:start + m] = T_local
        for i in range(m):
            if X_local[i] is None:
                censored += 1
            else:
                Xs.append(X_local[i])
    return HittingBatch(Ts, Xs, censored)


def _finish_exact(rng, m: Mat2, c: int, t: int, table: CosetTable, cap: int) -> HittingSample:
    while t < cap:
        t += 1
        x = G_LETTERS[int(rng.integers(4))]
        m = mat_mul(m, _G_MATS[x])
        c = int(table.perm[x][c])
        if c == table.identity:
            return HittingSample(t, m, None)
    return HittingSample(cap, m, None, censored=True)


def format_sanov_word(word: Sequence[int]) -> str:
    """``A B A^-1`` style rendering of a word over ``{A, B}``."""
    if not word:
        return "1"
    return " ".join(("A" if abs(x) == 1 else "B") + ("" if x > 0 else "^-1") for x in word)


def write_atoms_csv(path, batch: HittingBatch, top: int | None = None) -> None:
    counts = batch.atom_counts()
    total = sum(counts.values())
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["witness", "a", "b", "c", "d", "count", "probability"])
        for m, k in counts.most_common(top):
            wit = sanov_membership(m)
            w.writerow([format_sanov_word(wit) if wit is not None else "", m.a, m.b, m.c, m.d, k, k / total])


# -- Kac and symmetry -----------------------------------------------------------


@dataclass
class KacReport:
    mean_T: float
    se_T: float
    index: int
    samples: int
    censored: int
    symmetry_z: list          # (atom, inverse count z-score) on the top atoms
    tail_slope: float         # d/dt log P(T > t)
    tail_r2: float
    fourth_moment: float      # E |witness|^4 in A, B letters

    @property
    def relative_error(self) -> float:
        return abs(self.mean_T - self.index) / self.index

    @property
    def symmetric(self) -> bool:
        return all(abs(z) <= 3 for _, z in self.symmetry_z)


def symmetry_scores(counts: Counter, top: int = 20) -> list[tuple[Mat2, float]]:
    """``(n(x) - n(x^-1)) / sqrt(n(x) + n(x^-1))`` for the ``top`` most frequent atoms."""
    out = []
    for m, k in counts.most_common(top):
        k_inv = counts.get(mat_inv(m), 0)
        tot = k + k_inv
        out.append((m, 0.0 if m == mat_inv(m) or tot == 0 else (k - k_inv) / np.sqrt(tot)))
    return out


def tail_fit(T: np.ndarray, t_min: int = 12, min_count: int = 100) -> tuple[float, float]:
    """Slope and ``R^2`` of ``log P(T > t)`` against ``t`` where at least ``min_count`` samples survive."""
    T = np.sort(np.asarray(T))
    ts = np.arange(t_min, int(T.max()) + 1)
    surv = len(T) - np.searchsorted(T, ts, side="right")
    keep = surv >= min_count
    ts, surv = ts[keep], surv[keep]
    if len(ts) < 3:
        return float("nan"), float("nan")
    y = np.log(surv / len(T))
    slope, icept = np.polyfit(ts, y, 1)
    resid = y - (slope * ts + icept)
    r2 = 1 - float(resid @ resid) / float(((y - y.mean()) ** 2).sum())
    return float(slope), r2


def kac_check(samples: int, rng: np.random.Generator, table: CosetTable | None = None, top: int = 20) -> KacReport:
    table = table or build_coset_table()
    batch = hitting_batch(rng, samples, table)
    T = batch.T
    counts = batch.atom_counts()
    slope, r2 = tail_fit(T)
    lens = []
    for m, k in counts.items():
        wit = sanov_membership(m)
        lens.append((len(wit) if wit is not None else 0, k))
    L = np.array([a for a, _ in lens], dtype=float)
    W = np.array([b for _, b in lens], dtype=float)
    m4 = float((W * L ** 4).sum() / W.sum())
    return KacReport(float(T.mean()), float(T.std(ddof=1) / np.sqrt(len(T))), table.index, samples,
                     batch.censored, symmetry_scores(counts, top), slope, r2, m4)


def return_time_average(walks: int, k: int, rng: np.random.Generator, table: CosetTable | None = None) -> np.ndarray:
    """``T_k / k`` for independent coset walks (only the coset chain is simulated)."""
    table = table or build_coset_table()
    perm = np.stack([table.perm[x] for x in G_LETTERS])
    coset = np.full(walks, table.identity, dtype=np.int64)
    returns = np.zeros(walks, dtype=np.int64)
    Tk = np.zeros(walks, dtype=np.int64)
    t = 0
    while (returns < k).any():
        t += 1
        live = returns < k
        step = rng.integers(0, 4, size=walks)
        coset[live] = perm[step[live], coset[live]]
        hit = live & (coset == table.identity)
        returns[hit] += 1
        Tk[hit & (returns == k)] = t
    return Tk / k


# -- Abramov --------------------------------------------------------------------

#: matrices are fingerprinted by their residues modulo two large primes for entropy
#: purposes only, so walks can run past the int64 range of the exact entries
FINGERPRINT_PRIMES = (2_147_483_647, 2_147_483_629)


def _mulmod(M: np.ndarray, g: np.ndarray, P: int) -> np.ndarray:
    return np.stack([
        (M[:, 0] * g[:, 0] + M[:, 1] * g[:, 2]) % P,
        (M[:, 0] * g[:, 1] + M[:, 1] * g[:, 3]) % P,
        (M[:, 2] * g[:, 0] + M[:, 3] * g[:, 2]) % P,
        (M[:, 2] * g[:, 1] + M[:, 3] * g[:, 3]) % P,
    ], axis=1)


def _fingerprint_labels(rows: np.ndarray) -> np.ndarray:
    from .entropy import labels_of

    return labels_of(rows)


@dataclass
class ReturnSnapshots:
    """Labels of ``Y_k = X_{T_k}`` and ``X_{index * k}`` for ``k = 1..K`` on the same walks."""

    Y: list[np.ndarray]
    X: list[np.ndarray]
    T: np.ndarray              # (K, walks) return times
    index: int


def return_snapshots(walks: int, K: int, rng: np.random.Generator, table: CosetTable | None = None) -> ReturnSnapshots:
    table = table or build_coset_table()
    perm = np.stack([table.perm[x] for x in G_LETTERS])
    gens = np.stack([_GEN_ARR[x] for x in G_LETTERS])
    P1, P2 = FINGERPRINT_PRIMES
    M1 = np.tile(np.array([1, 0, 0, 1], dtype=np.int64), (walks, 1))
    M2 = M1.copy()
    coset = np.full(walks, table.identity, dtype=np.int64)
    ret = np.zeros(walks, dtype=np.int64)
    Y = np.zeros((K, walks, 8), dtype=np.int64)
    T = np.zeros((K, walks), dtype=np.int64)
    times = {table.index * k: k for k in range(1, K + 1)}
    X: dict[int, np.ndarray] = {}
    active = np.arange(walks)
    t = 0
    t_last = max(times)
    while active.size:
        t += 1
        k = rng.integers(0, 4, size=active.size)
        g = gens[k]
        M1[active] = _mulmod(M1[active], g, P1)
        M2[active] = _mulmod(M2[active], g, P2)
        coset[active] = perm[k, coset[active]]
        hit = active[coset[active] == table.identity]
        hit = hit[ret[hit] < K]
        Y[ret[hit], hit] = np.hstack([M1[hit], M2[hit]])
        T[ret[hit], hit] = t
        ret[hit] += 1
        if t in times:
            X[times[t]] = np.hstack([M1, M2])
        if t >= t_last:
            active = np.nonzero(ret < K)[0]
    return ReturnSnapshots([_fingerprint_labels(Y[k]) for k in range(K)],
                           [_fingerprint_labels(X[k]) for k in range(1, K + 1)], T, table.index)


@dataclass
class AbramovReport:
    k: int
    h_G: float                 # (H(X_{12k}) - H(X_{12(k-1)})) / 12
    h_F: float                 # H(Y_k) - H(Y_{k-1})
    ratio_G_over_F: float
    ratio_F_over_G: float
    ci_G_over_F: tuple
    ci_F_over_G: tuple
    Tk_over_k: float
    Tk_over_k_se: float
    index: int
    walks: int


def _H(labels: np.ndarray) -> float:
    from .entropy import empirical_entropy

    return empirical_entropy(labels, bootstrap=0).value


def abramov_check(walks: int, k: int, rng: np.random.Generator, bootstrap: int = 100,
                  long_walks: int = 10_000, long_k: int = 1000, table: CosetTable | None = None) -> AbramovReport:
    """Matched increment estimates of the entropy rates of ``mu`` on G and of ``mu_F`` on F.

    The G increment is taken over the block ``(index*(k-1), index*k]`` and
    divided by the index, the F increment over ``(k-1, k]``; both come from
    the same walks, and a bootstrap over walks gives the intervals.
    """
    table = table or build_coset_table()
    snaps = return_snapshots(walks, k, rng, table)

    def rates(idx):
        Yk, Yp = snaps.Y[k - 1][idx], (snaps.Y[k - 2][idx] if k >= 2 else None)
        Xk, Xp = snaps.X[k - 1][idx], (snaps.X[k - 2][idx] if k >= 2 else None)
        hF = _H(Yk) - (_H(Yp) if Yp is not None else 0.0)
        hG = (_H(Xk) - (_H(Xp) if Xp is not None else 0.0)) / snaps.index
        return hG, hF

    hG, hF = rates(np.arange(walks))
    gf, fg = [], []
    for _ in range(bootstrap):
        idx = rng.integers(0, walks, size=walks)
        a, b = rates(idx)
        gf.append(a / b)
        fg.append(b / a)
    q = lambda v: (float(np.quantile(v, 0.025)), float(np.quantile(v, 0.975)))
    avg = return_time_average(long_walks, long_k, rng, table)
    return AbramovReport(k, hG, hF, hG / hF, hF / hG, q(gf), q(fg), float(avg.mean()),
                         float(avg.std(ddof=1) / np.sqrt(long_walks)), snaps.index, walks)


# -- finite quotients -------------------------------------------------------------


def _mod_mat(m: Mat2, q: int) -> tuple:
    return (m.a % q, m.b % q, m.c % q, m.d % q)


def _mod_mul(m: tuple, n: tuple, q: int) -> tuple:
    return ((m[0] * n[0] + m[1] * n[2]) % q, (m[0] * n[1] + m[1] * n[3]) % q,
            (m[2] * n[0] + m[3] * n[2]) % q, (m[2] * n[1] + m[3] * n[3]) % q)


def _closure(gens: list[tuple], q: int) -> set:
    start = (1 % q, 0, 0, 1 % q)
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for g in gens:
            w = _mod_mul(u, g, q)
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return seen


@dataclass
class FiniteQuotientReport:
    q: int
    order_G: int
    order_F: int
    deltas_G: np.ndarray        # entropy increments of X_t mod q
    deltas_F: np.ndarray        # entropy increments of Y_k mod q
    lost_mass: float            # hitting mass not accounted for by the truncated series


def finite_quotient_check(q: int = 4, t_max: int = 60, k_max: int = 30, tol: float = 1e-15) -> FiniteQuotientReport:
    """Exact entropies of the walk and of the hitting walk in ``SL2(Z/q)`` (``N`` = level-``q`` kernel).

    Needs the kernel inside F, which holds for ``q = 4``: its elements are
    ``I`` mod 4 and so lie in the Sanov subgroup.
    """
    from .entropy import entropy_of_probs

    gmats = [_mod_mat(_G_MATS[x], q) for x in G_LETTERS]
    G = _closure(gmats, q)
    Fq = _closure([_mod_mat(A, q), _mod_mat(B, q), _mod_mat(mat_inv(A), q), _mod_mat(mat_inv(B), q)], q)
    ident = (1 % q, 0, 0, 1 % q)
    # walk on G/N
    dist = {ident: 1.0}
    HG = [0.0]
    for _ in range(t_max):
        nxt: dict = {}
        for m, p in dist.items():
            for g in gmats:
                w = _mod_mul(m, g, q)
                nxt[w] = nxt.get(w, 0.0) + p / 4
        dist = nxt
        HG.append(entropy_of_probs(dist.values()))
    # hitting law on F/N: run the chain killed on entering Fq
    mu_F: dict = {}
    alive = {ident: 1.0}
    while sum(alive.values()) > tol:
        nxt = {}
        for m, p in alive.items():
            for g in gmats:
                w = _mod_mul(m, g, q)
                if w in Fq:
                    mu_F[w] = mu_F.get(w, 0.0) + p / 4
                else:
                    nxt[w] = nxt.get(w, 0.0) + p / 4
        alive = nxt
    lost = 1.0 - sum(mu_F.values())
    dist = {ident: 1.0}
    HF = [0.0]
    for _ in range(k_max):
        nxt = {}
        for m, p in dist.items():
            for g, pg in mu_F.items():
                w = _mod_mul(m, g, q)
                nxt[w] = nxt.get(w, 0.0) + p * pg
        dist = nxt
        HF.append(entropy_of_probs(dist.values()))
    return FiniteQuotientReport(q, len(G), len(Fq), np.diff(HG), np.diff(HF), lost)


def coset_chain_entropy(t_max: int, table: CosetTable | None = None) -> np.ndarray:
    """Exact entropy increments of the coset process ``F X_t`` on the finite set ``F \\ G``."""
    from .entropy import entropy_of_probs

    table = table or build_coset_table()
    p = np.zeros(table.index)
    p[table.identity] = 1.0
    H = [0.0]
    for _ in range(t_max):
        nxt = np.zeros_like(p)
        for x in G_LETTERS:
            np.add.at(nxt, table.perm[x], p / 4)
        p = nxt
        H.append(entropy_of_probs(p))
    return np.diff(H)
