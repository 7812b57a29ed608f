"""Step laws on F_d and random walk simulation.

Two simulation paths share the same laws:

* :func:`run_walk` produces an exact :class:`Trajectory` of reduced words,
  used wherever a walk must drive a Schreier oracle.
* :class:`WordBatch` advances many walks at once as a padded int8 stack,
  which is what makes 10^5 walks of 10^3 steps cheap.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .words import IDENTITY, Word, mul, random_reduced_word, sphere_size


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based Philox stream keyed by ``(seed, *stream)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class StepLaw:
    """Symmetric adapted law on F_d.

    ``family`` is ``"srw"`` (uniform on generators and inverses), ``"lazy"``
    (identity with probability ``alpha``, otherwise srw) or
    ``"geodesic_tail"`` (length ``L`` with ``P(L = k) ∝ k^-beta`` on
    ``1..L_max``, then a uniform reduced word of that length).
    """

    family: str = "srw"
    d: int = 2
    alpha: float = 0.5
    beta: float = 6.0
    L_max: int = 64

    def __post_init__(self):
        if self.family not in ("srw", "lazy", "geodesic_tail"):
            raise ValueError(f"unknown law family {self.family!r}")
        if self.d < 2:
            raise ValueError("need d >= 2")
        if self.family == "lazy" and not 0 <= self.alpha < 1:
            raise ValueError("lazy alpha must lie in [0, 1)")
        if self.family == "geodesic_tail" and self.L_max < 1:
            raise ValueError("L_max must be >= 1")

    @property
    def name(self) -> str:
        if self.family == "srw":
            return f"srw(d={self.d})"
        if self.family == "lazy":
            return f"lazy({self.alpha:g},d={self.d})"
        return f"geodesic_tail(beta={self.beta:g},L_max={self.L_max},d={self.d})"

    @property
    def max_length(self) -> int:
        return self.L_max if self.family == "geodesic_tail" else 1

    @property
    def declared_moment(self) -> float:
        """Largest moment order known finite (``inf`` for finite support)."""
        return float("inf")

    def length_pmf(self) -> np.ndarray:
        """``P(|U| = k)`` for ``k = 0..max_length``."""
        if self.family == "srw":
            return np.array([0.0, 1.0])
        if self.family == "lazy":
            return np.array([self.alpha, 1.0 - self.alpha])
        k = np.arange(1, self.L_max + 1, dtype=float)
        w = k ** (-self.beta)
        return np.concatenate([[0.0], w / w.sum()])

    def moment(self, k: float) -> float:
        pmf = self.length_pmf()
        return float(np.sum(pmf * np.arange(len(pmf), dtype=float) ** k))

    def atoms(self, cap: int = 200_000) -> list[tuple[Word, float]]:
        """Exact atom table (finite support only)."""
        pmf = self.length_pmf()
        total = sum(sphere_size(k, self.d) for k in range(len(pmf)) if pmf[k] > 0)
        if total > cap:
            raise ValueError(f"law has {total} atoms (cap {cap})")
        from .words import iter_sphere

        out = []
        for k, pk in enumerate(pmf):
            if pk <= 0:
                continue
            size = sphere_size(k, self.d)
            for w in iter_sphere(k, self.d):
                out.append((w, pk / size))
        return out

    def sample(self, rng: np.random.Generator) -> Word:
        pmf = self.length_pmf()
        L = int(rng.choice(len(pmf), p=pmf))
        return random_reduced_word(L, self.d, rng)

    def sample_batch(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        """``size`` increments as a padded ``(size, max_length)`` int8 array plus lengths."""
        d = self.d
        pmf = self.length_pmf()
        if self.family == "srw":
            lengths = np.ones(size, dtype=np.int64)
        else:
            lengths = rng.choice(len(pmf), size=size, p=pmf).astype(np.int64)
        width = max(int(lengths.max(initial=0)), 1)
        table = _letter_table(d)
        idx = np.empty((size, width), dtype=np.int64)
        idx[:, 0] = rng.integers(0, 2 * d, size=size)
        for j in range(1, width):
            r = rng.integers(0, 2 * d - 1, size=size)
            inv_prev = (idx[:, j - 1] + d) % (2 * d)
            idx[:, j] = r + (r >= inv_prev)
        letters = table[idx]
        letters[np.arange(width)[None, :] >= lengths[:, None]] = 0
        return letters, lengths


def _letter_table(d: int) -> np.ndarray:
    return np.array(list(range(1, d + 1)) + [-i for i in range(1, d + 1)], dtype=np.int8)


SRW = StepLaw("srw")


def srw(d: int = 2) -> StepLaw:
    return StepLaw("srw", d=d)


def lazy(alpha: float = 0.5, d: int = 2) -> StepLaw:
    return StepLaw("lazy", d=d, alpha=alpha)


def geodesic_tail(beta: float = 6.0, L_max: int = 64, d: int = 2) -> StepLaw:
    return StepLaw("geodesic_tail", d=d, beta=beta, L_max=L_max)


def law_from_spec(text: str, d: int = 2) -> StepLaw:
    """Parse ``srw``, ``lazy:0.5``, ``geodesic_tail:6:64``."""
    parts = text.split(":")
    fam = parts[0]
    if fam == "srw":
        return srw(d)
    if fam == "lazy":
        return lazy(float(parts[1]) if len(parts) > 1 else 0.5, d)
    if fam in ("geodesic_tail", "tail", "heavy"):
        beta = float(parts[1]) if len(parts) > 1 else 6.0
        L = int(parts[2]) if len(parts) > 2 else 64
        return geodesic_tail(beta, L, d)
    raise ValueError(f"unknown law {text!r}")


# -- exact trajectories -------------------------------------------------------


@dataclass
class Trajectory:
    words: list[Word]
    increments: list[Word]
    seed: int | None = None
    law: str = ""

    def __len__(self) -> int:
        return len(self.words)

    def lengths(self) -> list[int]:
        return [len(w) for w in self.words]


def run_walk(law: StepLaw, t_max: int, rng: np.random.Generator, seed: int | None = None) -> Trajectory:
    if t_max < 0:
        raise ValueError("t_max must be >= 0")
    words = [IDENTITY]
    incs: list[Word] = []
    if t_max:
        letters, lengths = law.sample_batch(rng, t_max)
        for t in range(t_max):
            u = tuple(int(x) for x in letters[t, : lengths[t]])
            incs.append(u)
            words.append(mul(words[-1], u))
    return Trajectory(words, incs, seed, law.name)


def first_exit_time(trajectory: Trajectory | Sequence[Word], n: int) -> int | None:
    """``T_n = min{t : |X_t| > n}`` or ``None`` if not reached yet."""
    words = trajectory.words if isinstance(trajectory, Trajectory) else trajectory
    for t, w in enumerate(words):
        if len(w) > n:
            return t
    return None


def coset_trajectory(oracle, roots: Sequence, trajectory: Trajectory) -> list[tuple]:
    """``(act(root_i, X_t))_i`` for every ``t``, advanced by the increments."""
    state = tuple(roots)
    out = [state]
    for u in trajectory.increments:
        state = tuple(oracle.act(v, u) for v in state)
        out.append(state)
    return out


def write_trajectory_csv(path, trajectory: Trajectory, oracle=None, roots=(), word_cap: int = 40) -> None:
    from .words import format_word

    states = coset_trajectory(oracle, roots, trajectory) if oracle is not None else None
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "length", "word"] + [f"root{i}_hash" for i in range(len(roots))])
        for t, word in enumerate(trajectory.words):
            text = format_word(word[:word_cap])
            if len(word) > word_cap:
                text += " ..."
            row = [t, len(word), text]
            if states is not None:
                row += [hashlib.sha1(repr(v).encode()).hexdigest()[:12] for v in states[t]]
            w.writerow(row)


# -- vectorized walks ----------------------------------------------------------


class WordBatch:
    """Many reduced words advanced in lockstep."""

    def __init__(self, size: int, d: int = 2, capacity: int = 64):
        self.d = d
        self.stack = np.zeros((size, capacity), dtype=np.int8)
        self.length = np.zeros(size, dtype=np.int64)
        self._rows = np.arange(size)

    def __len__(self) -> int:
        return len(self.length)

    def _ensure(self, need: int) -> None:
        cap = self.stack.shape[1]
        if need < cap:
            return
        new = max(2 * cap, need + 1)
        grown = np.zeros((len(self.length), new), dtype=np.int8)
        grown[:, :cap] = self.stack
        self.stack = grown

    def push(self, letters: np.ndarray, active: np.ndarray | None = None) -> None:
        """Right-multiply each word by one letter (``0`` means no-op)."""
        live = letters != 0
        if active is not None:
            live &= active
        nonempty = self.length > 0
        top = self.stack[self._rows, np.maximum(self.length - 1, 0)]
        cancel = live & nonempty & (top == -letters)
        grow = live & ~cancel
        self.length[cancel] -= 1
        if grow.any():
            self._ensure(int(self.length.max()) + 1)
            rows = self._rows[grow]
            self.stack[rows, self.length[grow]] = letters[grow]
            self.length[grow] += 1

    def apply(self, letters: np.ndarray, lengths: np.ndarray, active: np.ndarray | None = None) -> None:
        for j in range(letters.shape[1]):
            mask = lengths > j
            if active is not None:
                mask &= active
            if not mask.any():
                break
            self.push(letters[:, j], mask)

    def prefixes(self, r: int) -> np.ndarray:
        """First ``r`` letters of each word, zero padded, as an ``(N, r)`` array."""
        self._ensure(r)
        out = self.stack[:, :r].copy()
        out[np.arange(r)[None, :] >= self.length[:, None]] = 0
        return out

    def word(self, i: int) -> Word:
        return tuple(int(x) for x in self.stack[i, : self.length[i]])

    def keys(self) -> list[bytes]:
        """Hashable key per word (its letters as bytes)."""
        return [self.stack[i, : self.length[i]].tobytes() for i in range(len(self.length))]


def simulate_lengths(law: StepLaw, times: Sequence[int], walks: int, rng: np.random.Generator,
                     chunk: int = 20_000) -> np.ndarray:
    """``|X_t|`` at each requested ``t`` for ``walks`` independent walks: ``(len(times), walks)``."""
    times = sorted(set(int(t) for t in times))
    t_max = times[-1] if times else 0
    out = np.zeros((len(times), walks), dtype=np.int64)
    for start in range(0, walks, chunk):
        m = min(chunk, walks - start)
        batch = WordBatch(m, law.d, capacity=max(64, min(t_max * law.max_length + 1, 4096)))
        k = 0
        if times and times[0] == 0:
            k = 1
        for t in range(1, t_max + 1):
            letters, lengths = law.sample_batch(rng, m)
            batch.apply(letters, lengths)
            while k < len(times) and times[k] == t:
                out[k, start:start + m] = batch.length
                k += 1
    return out


def run_until_exit(law: StepLaw, n: int, walks: int, rng: np.random.Generator, horizon: int = 100_000,
                   record_times: Sequence[int] = (), prefix_len: int = 0, keep_exit_words: bool = False) -> dict:
    """Run walks until ``T_n = min{t : |X_t| > n}``.

    Walks keep moving after their exit only while some ``record_times`` are
    still pending.  Returns ``T`` (``-1`` where the horizon was hit first),
    ``records[t]`` (word keys of ``X_t``), ``exit_prefix`` (first
    ``prefix_len`` letters of ``X_{T_n}``, zero padded) and optionally
    ``exit_words``.
    """
    batch = WordBatch(walks, law.d, capacity=max(64, n + 2 * law.max_length + 2))
    T = np.full(walks, -1, dtype=np.int64)
    running = np.ones(walks, dtype=bool)
    exit_prefix = np.zeros((walks, prefix_len), dtype=np.int8)
    exit_words: list = [None] * walks if keep_exit_words else []
    records: dict[int, list] = {}
    pending = sorted(set(int(t) for t in record_times))
    if pending and pending[-1] > horizon:
        raise ValueError("record time beyond the horizon")

    def _capture(mask):
        rows = np.nonzero(mask)[0]
        T[rows] = t
        if prefix_len:
            exit_prefix[rows] = batch.prefixes(prefix_len)[rows]
        if keep_exit_words:
            for i in rows:
                exit_words[i] = batch.word(i)

    t = 0
    if 0 in pending:
        records[0] = batch.keys()
    _capture(running & (batch.length > n))
    running &= batch.length <= n
    last_record = pending[-1] if pending else 0
    while (running.any() or t < last_record) and t < horizon:
        t += 1
        letters, lengths = law.sample_batch(rng, walks)
        batch.apply(letters, lengths, active=None if t <= last_record else running)
        exited = running & (batch.length > n)
        if exited.any():
            _capture(exited)
            running &= ~exited
        if t in pending:
            records[t] = batch.keys()
    out = {"T": T, "records": records, "exit_prefix": exit_prefix, "steps": t}
    if keep_exit_words:
        out["exit_words"] = exit_words
    return out
