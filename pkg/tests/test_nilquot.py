import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from irspectrum.nilquot import (NilElement, nil_ball, nil_identity, nil_inv, nil_mul, nil_mul_letter, nil_project,
                                pi_s)
from irspectrum.words import ResourceError, ball, commutator, mul, reduce_word

a, b, A, B = 1, 2, -1, -2
words = st.lists(st.sampled_from([1, -1, 2, -2]), max_size=20).map(reduce_word)
words3 = st.lists(st.sampled_from([1, -1, 2, -2, 3, -3]), max_size=16).map(reduce_word)

_HEIS = {
    a: np.array([[1, 1, 0], [0, 1, 0], [0, 0, 1]]),
    b: np.array([[1, 0, 0], [0, 1, 1], [0, 0, 1]]),
}
_HEIS[A] = np.round(np.linalg.inv(_HEIS[a])).astype(int)
_HEIS[B] = np.round(np.linalg.inv(_HEIS[b])).astype(int)


def heisenberg(w):
    m = np.eye(3, dtype=int)
    for x in w:
        m = m @ _HEIS[x]
    return m


def test_pi_s():
    assert pi_s((a, b, a, B), 1) == 2
    assert pi_s((), 1) == 0
    assert pi_s((a, B, A), 2) == -1


def test_identity_projection():
    assert nil_project((), 2) == nil_identity(2)


def test_commutator_projection():
    c = nil_project((a, b, A, B), 2)
    assert c.x == (0, 0) and abs(c.y[0]) == 1
    assert nil_mul(c, nil_project((b, a, B, A), 2)) == nil_identity(2)


def test_double_commutator_is_trivial():
    ab = commutator((a,), (b,))
    assert nil_project(commutator((a,), ab), 2) == nil_identity(2)


@given(words)
def test_matches_heisenberg_oracle(w):
    # (x, y) <-> [[1, x1, y], [0, 1, x2], [0, 0, 1]]; both products add x1 * x2' to the corner
    m = heisenberg(w)
    e = nil_project(w, 2)
    assert (m[0, 1], m[1, 2]) == e.x
    assert m[0, 2] == e.y[0]


@given(words, words)
def test_heisenberg_equality_agrees(u, v):
    assert (nil_project(u, 2) == nil_project(v, 2)) == bool((heisenberg(u) == heisenberg(v)).all())


@given(words3, words3)
def test_projection_is_homomorphism(u, v):
    assert nil_project(mul(u, v), 3) == nil_mul(nil_project(u, 3), nil_project(v, 3))


@given(words3)
def test_inverse(u):
    e = nil_project(u, 3)
    assert nil_mul(e, nil_inv(e)) == nil_identity(3)
    assert nil_mul_letter(nil_mul_letter(e, 2), -2) == e


def test_nil_ball_small():
    assert set(nil_ball(0, 2)) == {nil_identity(2)}
    assert len(nil_ball(1, 2)) == 5


def test_nil_ball_brute_force():
    brute = {nil_project(w, 2) for w in ball(2, 2)}
    assert set(nil_ball(2, 2)) == brute


def test_nil_ball_distances_are_word_lengths():
    best = {}
    for w in ball(4, 2):
        e = nil_project(w, 2)
        best[e] = min(best.get(e, 99), len(w))
    nb = nil_ball(4, 2)
    assert {e: r for e, r in best.items()} == nb


def test_nil_ball_cap():
    with pytest.raises(ResourceError):
        nil_ball(30, 2, cap=100)
