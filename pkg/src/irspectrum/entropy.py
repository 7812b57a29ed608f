"""Entropy estimators and the entropy experiments on F_d and its quotients.

Everything is in nats.  ``delta_t = H(X_t) - H(X_{t-1})`` is the increment
upper estimate of the entropy rate; the prefix-conditional quantity
``(H(X_t) - H(X_t | pref_r(X_{T_n}))) / t`` is the lower one.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np

from .schreier.oracles import GluedOracle, GraphOracle, Region
from .walks import StepLaw, WordBatch, run_until_exit
from .words import ResourceError, Word, ball, mul, sphere_size

CONVOLUTION_CAP = 5_000_000


# -- estimators -------------------------------------------------------------------


@dataclass
class EntropyEstimate:
    value: float                 # nats, Miller-Madow corrected when bias_corrected
    plugin: float
    bias_corrected: bool
    sample_count: int
    distinct_count: int
    ci_halfwidth: float

    @property
    def bits(self) -> float:
        return self.value / math.log(2)


def entropy_of_counts(counts: np.ndarray) -> float:
    counts = np.asarray(counts, dtype=float)
    counts = counts[counts > 0]
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(-(p * np.log(p)).sum())


def entropy_of_probs(probs: Iterable[float]) -> float:
    p = np.fromiter(probs, dtype=float)
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def labels_of(samples) -> np.ndarray:
    """Integer labels for a sample: hashables, a 1-d array, or rows of a 2-d array."""
    if isinstance(samples, np.ndarray):
        if samples.ndim == 1:
            return np.unique(samples, return_inverse=True)[1].ravel()
        if samples.shape[1] == 0:
            return np.zeros(len(samples), dtype=np.int64)
        rows = np.ascontiguousarray(samples)
        view = rows.view(np.dtype((np.void, rows.dtype.itemsize * rows.shape[1]))).ravel()
        return np.unique(view, return_inverse=True)[1].ravel()
    table: dict = {}
    return np.fromiter((table.setdefault(s, len(table)) for s in samples), dtype=np.int64)


def empirical_entropy(samples, miller_madow: bool = True, bootstrap: int = 200,
                      rng: np.random.Generator | None = None) -> EntropyEstimate:
    """Plug-in entropy with the Miller-Madow term ``(k - 1) / 2N`` and a bootstrap CI."""
    lab = labels_of(samples)
    N = len(lab)
    if N == 0:
        raise ValueError("need at least one sample")
    counts = np.bincount(lab)
    counts = counts[counts > 0]
    k = len(counts)
    plug = entropy_of_counts(counts)
    mm = (k - 1) / (2 * N) if miller_madow else 0.0
    half = 0.0
    if bootstrap and k > 1:
        rng = rng or np.random.default_rng(0)
        p = counts / N
        vals = np.empty(bootstrap)
        for b in range(bootstrap):
            c = rng.multinomial(N, p)
            kb = np.count_nonzero(c)
            vals[b] = entropy_of_counts(c) + ((kb - 1) / (2 * N) if miller_madow else 0.0)
        half = 1.96 * float(vals.std(ddof=1))
    return EntropyEstimate(plug + mm, plug, miller_madow, N, k, half)


def joint_labels(*labels: np.ndarray) -> np.ndarray:
    return labels_of(np.stack([np.asarray(x, dtype=np.int64) for x in labels], axis=1))


# -- exact convolution ------------------------------------------------------------------


def convolution_laws(law: StepLaw, t: int, cap: int = CONVOLUTION_CAP) -> list[dict]:
    """Exact laws of ``X_0..X_t`` as maps reduced word -> probability."""
    atoms = law.atoms()
    dist: dict = {(): 1.0}
    out = [dist]
    for _ in range(t):
        nxt: dict = defaultdict(float)
        for w, p in dist.items():
            for u, q in atoms:
                nxt[mul(w, u)] += p * q
        if len(nxt) > cap:
            raise ResourceError(f"support {len(nxt)} above cap {cap}; use the Monte Carlo estimators")
        dist = dict(nxt)
        out.append(dist)
    return out


def exact_convolution_entropy(law: StepLaw, t: int, cap: int = CONVOLUTION_CAP) -> float:
    return entropy_of_probs(convolution_laws(law, t, cap)[-1].values())


def exact_entropy_curve(law: StepLaw, t_max: int, cap: int = CONVOLUTION_CAP) -> np.ndarray:
    """``H(X_0), ..., H(X_{t_max})`` by exact convolution (one pass)."""
    atoms = law.atoms()
    dist: dict = {(): 1.0}
    H = [0.0]
    for _ in range(t_max):
        nxt: dict = defaultdict(float)
        for w, p in dist.items():
            for u, q in atoms:
                nxt[mul(w, u)] += p * q
        if len(nxt) > cap:
            raise ResourceError(f"support {len(nxt)} above cap {cap}; use the Monte Carlo estimators")
        dist = nxt
        H.append(entropy_of_probs(dist.values()))
    return np.array(H)


def increments(H: Sequence[float]) -> np.ndarray:
    """``delta_t = H_t - H_{t-1}`` for ``t = 1..len(H)-1``."""
    return np.diff(np.asarray(H, dtype=float))


def srw_entropy_target(d: int = 2) -> float:
    """Speed times log growth rate for simple random walk on F_d.

    The distance chain moves out with probability ``(2d-1)/2d`` and in with
    ``1/2d``, so the speed is ``(d-1)/d``; the sphere sizes grow like
    ``(2d-1)^r``.  For d = 2 this is ``ln(3)/2``.
    """
    speed = (2 * d - 1) / (2 * d) - 1 / (2 * d)
    return speed * math.log(2 * d - 1)


# -- exact boundary conditioning for simple random walk ------------------------------


def srw_prefix_given_start(w: Word, r: int, d: int = 2) -> dict[Word, float]:
    """Law of ``pref_r(X_inf)`` for simple random walk on F_d started at ``w``.

    Uses the tree hitting probability ``q^-D`` (``q = 2d - 1``) of a vertex
    at distance ``D`` and the uniform split of the end over the ``2d``
    branches at any vertex.
    """
    if r == 0:
        return {(): 1.0}
    q = 2 * d - 1
    out: dict[Word, float] = {}
    for f in _sphere(r, d):
        k = 0
        while k < min(len(w), r) and w[k] == f[k]:
            k += 1
        if k == r:  # w lies in the cone of f
            escape = q ** -(len(w) - r + 1)
            out[f] = 1.0 - escape * (1.0 - 1.0 / (q + 1))
        else:
            D = len(w) + r - 2 * k
            out[f] = q ** -D * (q / (q + 1))
    return out


def _sphere(r: int, d: int) -> list[Word]:
    return [w for w in ball(r, d) if len(w) == r]


def exact_prefix_conditional_rate(t: int, r: int, d: int = 2) -> float:
    """``(H(X_t) - H(X_t | pref_r(X_inf))) / t`` exactly, simple random walk on F_d."""
    from .walks import srw

    law_t = convolution_laws(srw(d), t)[-1]
    H_x = entropy_of_probs(law_t.values())
    if r == 0:
        return 0.0
    joint = []
    marg: dict = defaultdict(float)
    for w, p in law_t.items():
        for f, c in srw_prefix_given_start(w, r, d).items():
            joint.append(p * c)
            marg[f] += p * c
    H_joint = entropy_of_probs(joint)
    H_pref = entropy_of_probs(marg.values())
    return (H_x - (H_joint - H_pref)) / t


# -- prefix-conditional lower bound -------------------------------------------------------


@dataclass
class PrefixConditional:
    value: float          # (H(X_t) - H(X_t | pref_r(X_{T_n}))) / t
    ci_halfwidth: float
    H_x: float
    H_x_given_pref: float
    t: int
    r: int
    n: int
    samples: int
    excluded: int

    @property
    def exclusion_rate(self) -> float:
        return self.excluded / max(self.samples, 1)


def prefix_conditional_rate(law: StepLaw, r: int, t: int, n: int, samples: int, rng: np.random.Generator,
                            horizon: int = 100_000, bootstrap: int = 100) -> PrefixConditional:
    """Joint sampling of ``X_t`` and ``pref_r(X_{T_n})``; walks censored at the horizon are excluded."""
    if n < r:
        raise ValueError("need n >= r")
    res = run_until_exit(law, n, samples, rng, horizon=max(horizon, t), record_times=[t], prefix_len=r)
    keep = res["T"] >= 0
    x_lab = labels_of([k for k, ok in zip(res["records"][t], keep) if ok])
    p_lab = labels_of(res["exit_prefix"][keep])
    return _conditional_from_labels(x_lab, p_lab, t, r, n, samples, int((~keep).sum()), rng, bootstrap)


def _conditional_from_labels(x_lab, p_lab, t, r, n, samples, excluded, rng, bootstrap) -> PrefixConditional:
    j_lab = joint_labels(x_lab, p_lab)

    def point(xl, pl, jl):
        hx = empirical_entropy(xl, bootstrap=0).value
        hp = empirical_entropy(pl, bootstrap=0).value
        hj = empirical_entropy(jl, bootstrap=0).value
        return hx, hj - hp

    hx, hcond = point(x_lab, p_lab, j_lab)
    half = 0.0
    if bootstrap:
        N = len(x_lab)
        vals = []
        for _ in range(bootstrap):
            idx = rng.integers(0, N, size=N)
            a, b = point(x_lab[idx], p_lab[idx], j_lab[idx])
            vals.append((a - b) / t)
        half = 1.96 * float(np.std(vals, ddof=1))
    return PrefixConditional((hx - hcond) / t, half, hx, hcond, t, r, n, samples, excluded)


@dataclass
class RateBracket:
    lower: float
    lower_ci: float
    upper: float
    target: float
    t_used: int
    r_used: int
    n_used: int
    deltas: np.ndarray = field(repr=False, default=None)

    @property
    def contains_target(self) -> bool:
        return self.lower - self.lower_ci <= self.target <= self.upper

    @property
    def relative_width(self) -> float:
        """``(upper - lower) / target``: the total slack of the bracket."""
        return (self.upper - self.lower) / self.target


def entropy_bracket(law: StepLaw, t_upper: int, t: int, r: int, n: int, samples: int,
                    rng: np.random.Generator, target: float | None = None) -> RateBracket:
    deltas = increments(exact_entropy_curve(law, t_upper))
    low = prefix_conditional_rate(law, r, t, n, samples, rng)
    target = srw_entropy_target(law.d) if target is None else target
    return RateBracket(low.value, low.ci_halfwidth, float(deltas[-1]), target, t_upper, r, n, deltas)


# -- prefix flips ---------------------------------------------------------------------------


@dataclass
class FlipRates:
    change_after_exit: float      # P[pref_r(K X_t) changes for some T_n <= t < horizon]
    change_se: float
    mismatch_at_exit: float       # P[pref_r(X_{T_n}) != pref_r(K X_{T_n})]
    mismatch_se: float
    samples: int
    censored: int
    n: int
    r: int
    horizon: int

    @property
    def mismatch_upper95(self) -> float:
        """One-sided 95% upper bound (rule of three when nothing was seen)."""
        m = self.samples - self.censored
        if m == 0:
            return 1.0
        if self.mismatch_at_exit == 0:
            return 3.0 / m
        return self.mismatch_at_exit + 1.645 * self.mismatch_se


def prefix_flip_rate(oracle: GraphOracle, law: StepLaw, r: int, n: int, samples: int, rng: np.random.Generator,
                     horizon: int = 10_000, after_exit: int = 0, prefix: Callable | None = None) -> FlipRates:
    """Both prefix-instability probabilities, by walking the oracle and the free group side by side.

    ``after_exit`` extra steps after ``T_n`` are watched for prefix changes of
    the coset; truncation makes that estimate one-sided (a lower bound).
    """
    from .schreier.checks import graph_prefix

    prefix = prefix or (lambda v: graph_prefix(oracle, v, r))
    changed = np.zeros(samples, dtype=bool)
    mismatch = np.zeros(samples, dtype=bool)
    censored = 0
    for i in range(samples):
        w: Word = ()
        v = oracle.root
        t = 0
        while len(w) <= n and t < horizon:
            u = law.sample(rng)
            w = mul(w, u)
            v = oracle.act(v, u)
            t += 1
        if len(w) <= n:
            censored += 1
            continue
        p0 = prefix(v)
        mismatch[i] = w[:r] != p0
        for _ in range(after_exit):
            v = oracle.act(v, law.sample(rng))
            if prefix(v) != p0:
                changed[i] = True
                break
    m = samples - censored

    def rate(x):
        if m == 0:
            return 0.0, 0.0
        p = x.sum() / m
        return float(p), float(math.sqrt(max(p * (1 - p), 0.0) / m))

    c, cse = rate(changed)
    mm, mse = rate(mismatch)
    return FlipRates(c, cse, mm, mse, samples, censored, n, r, horizon)


def long_jump_bound(law: StepLaw, n: int, depth: int, mean_exit_time: float) -> float:
    """Wald-type bound ``E[T_n] * P(|U| > depth - n)`` on the mismatch probability.

    Before ``T_n`` every ``|X_t| <= n``, and a step of length ``<= depth - n``
    from there stays inside the depth-``depth`` tree, where coset and word agree.
    """
    pmf = law.length_pmf()
    gap = depth - n
    tail = float(pmf[gap + 1:].sum()) if gap + 1 < len(pmf) else 0.0
    return mean_exit_time * tail


# -- Stankov ------------------------------------------------------------------------------


@dataclass
class StankovResult:
    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    diff_se: float
    A_size: int
    r_A: int
    m: int
    samples: int
    horizon: int
    rhs_tail_fraction: float

    @property
    def holds(self) -> bool:
        """``lhs <= rhs`` within the combined 95% interval."""
        return self.lhs - self.rhs <= 1.96 * self.diff_se

    @property
    def recurrent_flag(self) -> bool:
        return self.rhs_tail_fraction > 0.05


def glued_ball_components(g: GluedOracle, k: int):
    """``A = B(root, k)`` and the component map of ``Gamma \\ A`` (``None`` on ``A``)."""
    if k + 1 > g.n:
        raise ValueError("ball components need k < n")
    A = [("T", w) for w in ball(k, g.d)]

    def component(v):
        if v[0] == "T" and len(v[1]) <= k:
            return None
        return g.prefix(v, k + 1)

    return A, component


def stankov_check(oracle: GraphOracle, A: Sequence, component: Callable, m: int, law: StepLaw, samples: int,
                  horizon: int, rng: np.random.Generator) -> StankovResult:
    """Both sides of ``sum_{t>=m} P[E_t] <= |A| E[|X_1| g^{m+}(root, B(r(A) + |X_1|))]``.

    ``E_t``: ``X_t`` and ``X_{t+1}`` both avoid ``A`` and lie in different
    components of ``Gamma \\ A``.  Each walk contributes its count of such
    steps (left side) and ``|A| sum_L P(L) L V(r(A) + L)`` with ``V(k)`` its
    number of visits to the radius-``k`` root ball in ``[m, horizon]``.
    """
    from .schreier.green import walk_vertices

    r_A = max(oracle.distance(a) for a in A)
    pmf = law.length_pmf()
    Ls = np.nonzero(pmf)[0]
    Ls = Ls[Ls > 0]
    radii = r_A + Ls
    kmax = int(radii.max())
    lhs = np.zeros(samples)
    rhs = np.zeros(samples)
    tail = 0.0
    total = 0.0
    for i in range(samples):
        visits = np.zeros(kmax + 1)  # visits[k] = time steps at distance exactly k (k <= kmax)
        tail_visits = np.zeros(kmax + 1)
        prev_c = None
        for t, v in enumerate(walk_vertices(oracle, law, rng, horizon)):
            c = component(v)
            # the step t-1 -> t is E_{t-1}
            if t > m and prev_c is not None and c is not None and c != prev_c:
                lhs[i] += 1
            prev_c = c
            if t >= m:
                dv = _distance_upto(oracle, v, kmax)
                if dv is not None:
                    visits[dv] += 1
                    if t >= horizon - horizon // 4:
                        tail_visits[dv] += 1
        cum = np.cumsum(visits)
        cum_tail = np.cumsum(tail_visits)
        rhs[i] = len(A) * float(np.sum(pmf[Ls] * Ls * cum[radii]))
        tail += float(np.sum(pmf[Ls] * Ls * cum_tail[radii]))
        total += float(np.sum(pmf[Ls] * Ls * cum[radii]))
    d = rhs - lhs
    se = lambda x: float(x.std(ddof=1) / math.sqrt(samples)) if samples > 1 else float("inf")
    return StankovResult(float(lhs.mean()), se(lhs), float(rhs.mean()), se(rhs), se(d), len(A), r_A, m,
                         samples, horizon, tail / total if total else 0.0)


def _distance_upto(oracle: GraphOracle, v, k: int) -> int | None:
    """Distance of ``v`` to the root if it is at most ``k``."""
    if isinstance(oracle, GluedOracle):
        if not oracle.within(v, k):
            return None
        return oracle.distance(v, cap=k)
    try:
        dv = oracle.distance(v, cap=k)
    except ResourceError:
        return None
    return dv if dv <= k else None


# -- intersectional IRS sweep ---------------------------------------------------------------


@dataclass
class SweepTable:
    p_grid: np.ndarray
    h: np.ndarray                 # mean over core draws of H(tuple) / t
    h_ci: np.ndarray              # core-draw spread and walk bootstrap, combined in quadrature
    per_draw: np.ndarray          # (len(p_grid), core_samples)
    window_size: int
    empty_draws: np.ndarray       # number of empty A per p
    t: int
    R: int
    walk_samples: int
    word_entropy: float           # Miller-Madow H(X_t) / t on the same walks
    word_entropy_ci: float
    monotone_on_draws: bool       # every draw's curve non-decreasing in p (nested A)


def window_images(oracle: GraphOracle, R: int, law: StepLaw, t: int, walk_samples: int,
                  rng: np.random.Generator, chunk: int = 2000):
    """Window of radius ``R`` and the ``(walks, |window|)`` array of ``act(v, X_t)`` indices.

    Also returns the word labels of ``X_t``.  The region is materialized to
    radius ``R + t * max_length`` so every image is inside it.
    """
    region = Region(oracle, oracle.root, R + t * law.max_length)
    win = region.ball_indices(R)
    letters_all = []
    images = np.empty((walk_samples, len(win)), dtype=np.int32)
    order = oracle.letters()
    succ = np.stack([region.succ[x] for x in order])
    code = {x: i for i, x in enumerate(order)}
    batch = WordBatch(walk_samples, law.d, capacity=max(8, t * law.max_length + 1))
    for _ in range(t):
        L, n = law.sample_batch(rng, walk_samples)
        letters_all.append((L, n))
        batch.apply(L, n)
    for s in range(0, walk_samples, chunk):
        e = min(s + chunk, walk_samples)
        img = np.broadcast_to(win, (e - s, len(win))).astype(np.int64)
        for L, n in letters_all:
            for j in range(L.shape[1]):
                live = n[s:e] > j
                if not live.any():
                    break
                c = np.array([code.get(int(x), 0) for x in L[s:e, j]])
                moved = succ[c[live][:, None], img[live]]
                if (moved < 0).any():
                    raise ResourceError("walk image left the materialized region")
                img[live] = moved
        images[s:e] = img
    word_labels = labels_of(batch.keys())
    return region, win, images, word_labels


def irs_entropy_sweep(oracle: GraphOracle, R: int, p_grid: Sequence[float], t: int, walk_samples: int,
                      core_samples: int, rng: np.random.Generator, law: StepLaw | None = None) -> SweepTable:
    """``p -> h(p)``: entropy of the tuple ``(act(v, X_t))_{v in A}`` over Bernoulli-``p`` windows ``A``.

    One uniform per window vertex and core draw couples the grid, so ``A``
    grows with ``p`` on every draw and the same walks are reused throughout.
    """
    from .walks import srw

    law = law or srw(oracle.d)
    p_grid = np.asarray(p_grid, dtype=float)
    region, win, images, word_labels = window_images(oracle, R, law, t, walk_samples, rng)
    per = np.zeros((len(p_grid), core_samples))
    walk_ci = np.zeros(len(p_grid))
    empty = np.zeros(len(p_grid), dtype=np.int64)
    monotone = True
    for c in range(core_samples):
        u = rng.random(len(win))
        prev = -1.0
        for i, p in enumerate(p_grid):
            cols = np.nonzero(u < p)[0]
            if cols.size == 0:
                empty[i] += 1
                h = 0.0
            else:
                # walk-sampling error from a bootstrap on the first draw
                e = empirical_entropy(images[:, cols], bootstrap=50 if c == 0 else 0, rng=rng)
                h = e.value / t
                if c == 0:
                    walk_ci[i] = e.ci_halfwidth / t
            per[i, c] = h
            if h < prev - 1e-12:
                monotone = False
            prev = h
    hw = empirical_entropy(word_labels, bootstrap=100, rng=rng)
    ci = 1.96 * per.std(axis=1, ddof=1) / math.sqrt(core_samples) if core_samples > 1 else np.zeros(len(p_grid))
    ci = np.hypot(ci, walk_ci)
    return SweepTable(p_grid, per.mean(axis=1), ci, per, len(win), empty, t, R, walk_samples,
                      hw.value / t, hw.ci_halfwidth / t, monotone)


# -- entropy on quotients ----------------------------------------------------------------------


@dataclass
class DecayCurve:
    H: np.ndarray
    deltas: np.ndarray
    exact: bool
    ci: np.ndarray | None = None


def quotient_entropy_curve(oracle: GraphOracle, law: StepLaw, t_max: int, cap: int = CONVOLUTION_CAP) -> np.ndarray:
    """Exact ``H(root X_t)`` for ``t <= t_max`` on a Cayley-graph oracle (finite-support laws)."""
    atoms = law.atoms()
    dist: dict = {oracle.root: 1.0}
    H = [0.0]
    for _ in range(t_max):
        nxt: dict = defaultdict(float)
        for v, p in dist.items():
            for u, q in atoms:
                nxt[oracle.act(v, u)] += p * q
        if len(nxt) > cap:
            raise ResourceError(f"support {len(nxt)} above cap {cap}")
        dist = nxt
        H.append(entropy_of_probs(dist.values()))
    return np.array(H)


def norm_entropy_decay(oracle: GraphOracle, law: StepLaw, t_max: int, samples: int = 0,
                       rng: np.random.Generator | None = None, cap: int = CONVOLUTION_CAP) -> DecayCurve:
    """Increments ``delta_t`` of the projected walk; exact when ``samples == 0``."""
    if samples == 0:
        H = quotient_entropy_curve(oracle, law, t_max, cap)
        return DecayCurve(H, increments(H), True)
    rng = rng or np.random.default_rng(0)
    states = [oracle.root] * samples
    H = [0.0]
    ci = [0.0]
    for _ in range(t_max):
        states = [oracle.act(v, law.sample(rng)) for v in states]
        e = empirical_entropy(states, bootstrap=50, rng=rng)
        H.append(e.value)
        ci.append(e.ci_halfwidth)
    H = np.array(H)
    return DecayCurve(H, increments(H), False, np.array(ci))
