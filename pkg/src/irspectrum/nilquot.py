"""Explicit quotients of F_d used by the gluing construction.

``pi_s`` is the exponent-sum homomorphism onto Z whose kernel is ``K_s``.

``Lambda = F_d / [F_d, [F_d, F_d]]`` is the free 2-step nilpotent group of
rank ``d``.  An element is stored as ``(x, y)`` with ``x`` the generator
exponent vector and ``y`` indexed by pairs ``i < j``.  The group law is

    (x, y) * (x', y') = (x + x', y + y' + Q(x, x')),   Q(x, x')_{ij} = x_i x'_j

which makes ``a_i -> (e_i, 0)`` a homomorphism with
``[a_i, a_j] = a_i^-1 a_j^-1 a_i a_j -> (0, e_{ij})`` for ``i < j``.
For ``d = 2`` this is exactly the unitriangular matrix model
``[[1, x_1, y], [0, 1, x_2], [0, 0, 1]]``.
"""

from __future__ import annotations

import csv
from collections import deque
from typing import Iterable, NamedTuple

from .words import ResourceError, Word

NIL_BALL_CAP = 2_000_000


def pi_s(g: Iterable[int], s: int) -> int:
    """Signed number of occurrences of ``a_s`` in ``g``."""
    return sum(1 if x == s else -1 if x == -s else 0 for x in g)


def pair_index(i: int, j: int, d: int) -> int:
    """Position of the pair ``(i, j)``, ``0 <= i < j < d``, in the ``y`` vector."""
    return i * d - i * (i + 1) // 2 + (j - i - 1)


def pairs(d: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(d) for j in range(i + 1, d)]


class NilElement(NamedTuple):
    x: tuple
    y: tuple

    @property
    def d(self) -> int:
        return len(self.x)


def nil_identity(d: int) -> NilElement:
    return NilElement((0,) * d, (0,) * (d * (d - 1) // 2))


def nil_generator(letter: int, d: int) -> NilElement:
    x = [0] * d
    x[abs(letter) - 1] = 1 if letter > 0 else -1
    return NilElement(tuple(x), (0,) * (d * (d - 1) // 2))


def nil_mul(u: NilElement, v: NilElement) -> NilElement:
    d = len(u.x)
    if len(v.x) != d:
        raise ValueError("mismatched rank")
    x = tuple(a + b for a, b in zip(u.x, v.x))
    y = list(a + b for a, b in zip(u.y, v.y))
    k = 0
    for i in range(d):
        xi = u.x[i]
        for j in range(i + 1, d):
            y[k] += xi * v.x[j]
            k += 1
    return NilElement(x, tuple(y))


def nil_inv(u: NilElement) -> NilElement:
    d = len(u.x)
    x = tuple(-a for a in u.x)
    y = list(-b for b in u.y)
    k = 0
    for i in range(d):
        for j in range(i + 1, d):
            y[k] += u.x[i] * u.x[j]
            k += 1
    return NilElement(x, tuple(y))


def nil_mul_letter(u: NilElement, letter: int) -> NilElement:
    """Right multiplication by a generator ``a_i^{+-1}`` (the hot path)."""
    i = abs(letter) - 1
    e = 1 if letter > 0 else -1
    x = list(u.x)
    x[i] += e
    if i == 0:
        return NilElement(tuple(x), u.y)
    d = len(x)
    y = list(u.y)
    for j in range(i):
        if u.x[j]:
            y[pair_index(j, i, d)] += e * u.x[j]
    return NilElement(tuple(x), tuple(y))


def nil_project(g: Word, d: int) -> NilElement:
    e = nil_identity(d)
    for letter in g:
        e = nil_mul_letter(e, letter)
    return e


def nil_ball(r: int, d: int = 2, cap: int = NIL_BALL_CAP) -> dict[NilElement, int]:
    """BFS ball of radius ``r`` in the Cayley graph of Lambda: element -> distance."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    letters = [i for i in range(1, d + 1)] + [-i for i in range(1, d + 1)]
    start = nil_identity(d)
    dist = {start: 0}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        dv = dist[v]
        if dv == r:
            continue
        for s in letters:
            w = nil_mul_letter(v, s)
            if w not in dist:
                dist[w] = dv + 1
                if len(dist) > cap:
                    raise ResourceError(f"nil ball exceeds cap {cap}")
                queue.append(w)
    return dist


def write_nil_ball_csv(path, ball: dict[NilElement, int]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if not ball:
            return
        d = len(next(iter(ball)).x)
        w.writerow([f"x{i + 1}" for i in range(d)] + [f"y{i + 1}{j + 1}" for i, j in pairs(d)] + ["distance"])
        for e, dist in sorted(ball.items(), key=lambda kv: (kv[1], kv[0])):
            w.writerow(list(e.x) + list(e.y) + [dist])
