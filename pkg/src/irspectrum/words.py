"""Free group arithmetic on freely reduced words.

A word over the free basis ``a_1, ..., a_d`` is stored as a tuple of small
signed integers: ``+i`` is ``a_i`` and ``-i`` is its inverse.  The empty
tuple is the identity.  Every function here returns freely reduced tuples, so
tuples are used directly as the ``ReducedWord`` type.
"""

from __future__ import annotations

import itertools
import re
from typing import Iterable, Iterator, Sequence

Word = tuple

IDENTITY: Word = ()

#: hard cap on the number of words :func:`ball` will materialize
BALL_CAP = 5_000_000

_LETTER_NAMES = "abcdefghijklmnopqrstuvwxyz"


class ResourceError(RuntimeError):
    """Raised when an enumeration would exceed its configured cap."""


def check_letters(letters: Iterable[int], d: int) -> None:
    for x in letters:
        if x == 0 or abs(x) > d:
            raise ValueError(f"letter {x!r} outside generator range 1..{d}")


def reduce_word(letters: Iterable[int], d: int | None = None) -> Word:
    """Freely reduce a raw letter sequence (stack cancellation)."""
    out: list[int] = []
    for x in letters:
        if d is not None and (x == 0 or abs(x) > d):
            raise ValueError(f"letter {x!r} outside generator range 1..{d}")
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def cancellation(u: Sequence[int], v: Sequence[int]) -> int:
    """Number of letters cancelled when forming ``u * v`` (both reduced)."""
    k = 0
    m = min(len(u), len(v))
    while k < m and u[len(u) - 1 - k] == -v[k]:
        k += 1
    return k


def mul(u: Word, v: Word) -> Word:
    k = cancellation(u, v)
    return u[: len(u) - k] + v[k:]


def inv(u: Word) -> Word:
    return tuple(-x for x in reversed(u))


def power(u: Word, k: int) -> Word:
    if k < 0:
        u, k = inv(u), -k
    out: Word = IDENTITY
    for _ in range(k):
        out = mul(out, u)
    return out


def commutator(u: Word, v: Word) -> Word:
    """``[u, v] = u^-1 v^-1 u v``."""
    return mul(mul(inv(u), inv(v)), mul(u, v))


def conjugate(u: Word, g: Word) -> Word:
    """``u^g = g^-1 u g``."""
    return mul(mul(inv(g), u), g)


def rad(g: Word) -> int:
    """Largest ``k`` whose length-``k`` prefix is inverse to the length-``k`` suffix.

    Undefined for the identity.
    """
    if not g:
        raise ValueError("rad is undefined for the identity")
    n = len(g)
    # a reduced word cannot have k >= n/2: the middle letters would cancel
    best = 0
    for k in range(1, (n + 1) // 2 + 1):
        if 2 * k > n:
            break
        if all(g[i] == -g[n - 1 - i] for i in range(k)):
            best = k
        else:
            break
    return best


def word_prefix(g: Word, r: int) -> Word:
    if r < 0:
        raise ValueError("prefix length must be nonnegative")
    return g[:r]


def sphere_size(r: int, d: int) -> int:
    return 1 if r == 0 else 2 * d * (2 * d - 1) ** (r - 1)


def ball_size(r: int, d: int) -> int:
    """Closed form ``1 + 2d((2d-1)^r - 1)/(2d-2)``."""
    return 1 + 2 * d * ((2 * d - 1) ** r - 1) // (2 * d - 2)


def iter_sphere(r: int, d: int) -> Iterator[Word]:
    if r == 0:
        yield IDENTITY
        return
    letters = [i for i in range(1, d + 1)] + [-i for i in range(1, d + 1)]
    stack: list[Word] = [(x,) for x in letters]
    # depth-first keeps memory at O(r * 2d)
    while stack:
        w = stack.pop()
        if len(w) == r:
            yield w
            continue
        for x in reversed(letters):
            if x != -w[-1]:
                stack.append(w + (x,))


def ball(r: int, d: int = 2, cap: int = BALL_CAP) -> list[Word]:
    """All reduced words of length at most ``r``, shortest first."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    if d < 2:
        raise ValueError("need d >= 2")
    size = ball_size(r, d)
    if size > cap:
        raise ResourceError(f"ball of radius {r} has {size} words (cap {cap})")
    out: list[Word] = []
    for k in range(r + 1):
        out.extend(sorted(iter_sphere(k, d), key=_sort_key))
    return out


def _sort_key(w: Word) -> tuple:
    return tuple((abs(x), x < 0) for x in w)


def random_reduced_word(length: int, d: int, rng) -> Word:
    """Uniform reduced word of the given length."""
    if length == 0:
        return IDENTITY
    letters = [i for i in range(1, d + 1)] + [-i for i in range(1, d + 1)]
    out = [letters[int(rng.integers(2 * d))]]
    for _ in range(length - 1):
        choices = [x for x in letters if x != -out[-1]]
        out.append(choices[int(rng.integers(2 * d - 1))])
    return tuple(out)


# -- text rendering ---------------------------------------------------------


def format_word(g: Word, d: int = 2, style: str = "auto") -> str:
    """Render ``g``; for ``d <= 26`` letters ``a b A B`` (uppercase = inverse),
    otherwise ``a1 a2 A1``."""
    if not g:
        return "1"
    if style == "auto":
        style = "letters" if d <= len(_LETTER_NAMES) else "indexed"
    if style == "letters":
        return " ".join(
            _LETTER_NAMES[abs(x) - 1] if x > 0 else _LETTER_NAMES[abs(x) - 1].upper()
            for x in g
        )
    return " ".join(f"a{x}" if x > 0 else f"A{-x}" for x in g)


_TOKEN = re.compile(r"([a-zA-Z])(\d*)(?:\^(-?\d+))?")


def parse_word(text: str, d: int = 2) -> Word:
    """Parse ``"a b A B"``, ``"abAB"``, ``"a1 b1 A1"``, ``"a^3 b^-1"`` or ``"1"``.

    An indexed token ``a2`` means generator 2 (``A2`` its inverse); a bare
    letter means its alphabet position.  The result is freely reduced.
    """
    s = text.replace("*", " ").strip()
    if s in ("", "1", "e", "id"):
        return IDENTITY
    letters: list[int] = []
    pos = 0
    compact = s.replace(" ", "")
    while pos < len(compact):
        m = _TOKEN.match(compact, pos)
        if not m:
            raise ValueError(f"cannot parse word {text!r} at {compact[pos:]!r}")
        ch, idx, exp = m.groups()
        if idx:
            gen = int(idx)
        else:
            gen = _LETTER_NAMES.index(ch.lower()) + 1
        sign = -1 if ch.isupper() else 1
        k = int(exp) if exp is not None else 1
        if k < 0:
            sign, k = -sign, -k
        letters.extend([sign * gen] * k)
        pos = m.end()
    return reduce_word(letters, d)


def all_words_upto(r: int, d: int) -> Iterator[Word]:
    """Every *raw* letter sequence of length ``<= r`` (for brute-force oracles)."""
    letters = [i for i in range(1, d + 1)] + [-i for i in range(1, d + 1)]
    for k in range(r + 1):
        yield from itertools.product(letters, repeat=k)
