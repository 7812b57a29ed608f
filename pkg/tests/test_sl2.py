from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from irspectrum.sl2 import (A, B, G_LETTERS, I2, NEG_I, S, T, Mat2, build_coset_table, coset_chain_entropy, evaluate,
                            evaluate_g, finite_quotient_check, format_sanov_word, hitting_batch, hitting_sample, in_F,
                            kac_check, mat, mat_inv, mat_mul, return_time_average, sanov_membership, symmetry_scores,
                            write_atoms_csv)
from irspectrum.walks import make_rng
from irspectrum.words import iter_sphere, reduce_word

words = st.lists(st.sampled_from([1, -1, 2, -2]), max_size=20).map(reduce_word)


def test_hand_product():
    assert mat_mul(Mat2(1, 2, 0, 1), Mat2(1, 0, 2, 1)) == Mat2(5, 2, 2, 1)


def test_det_guard():
    with pytest.raises(ValueError):
        mat(1, 2, 3, 4)
    with pytest.raises(ValueError):
        sanov_membership(Mat2(2, 0, 0, 1))


def test_membership_examples():
    assert sanov_membership(A) == (1,)
    assert sanov_membership(T) is None
    assert sanov_membership(NEG_I) is None
    assert sanov_membership(I2) == ()


@given(words)
def test_membership_roundtrip(w):
    assert sanov_membership(evaluate(w)) == w


def test_free_up_to_length_10():
    # distinct reduced words give distinct matrices (ping-pong), checked exhaustively
    seen = {}
    for L in range(0, 11):
        for w in iter_sphere(L, 2):
            m = evaluate(w)
            assert m not in seen
            seen[m] = w


def test_membership_of_non_members():
    rng = make_rng(0)
    for _ in range(200):
        w = [G_LETTERS[i] for i in rng.integers(0, 4, size=int(rng.integers(1, 15)))]
        m = evaluate_g(w)
        wit = sanov_membership(m)
        if wit is not None:
            assert evaluate(wit) == m
        else:
            # non-members: either not I mod 2, or -1 times a member
            odd = (m.a % 2, m.b % 2, m.c % 2, m.d % 2) != (1, 0, 0, 1)
            assert odd or in_F(Mat2(-m.a, -m.b, -m.c, -m.d))


def test_index_twelve():
    table = build_coset_table()
    assert table.index == 12


def test_table_agrees_with_membership():
    table = build_coset_table()
    rng = make_rng(1)
    for _ in range(200):
        w = [G_LETTERS[i] for i in rng.integers(0, 4, size=int(rng.integers(0, 25)))]
        assert table.coset_of_word(w) == table.coset_by_membership(evaluate_g(w))


def test_hitting_sample_lands_in_F():
    table = build_coset_table()
    rng = make_rng(2)
    for _ in range(50):
        h = hitting_sample(rng, table)
        assert not h.censored and in_F(h.X) and evaluate(h.witness) == h.X


def test_batch_matches_scalar_law():
    table = build_coset_table()
    batch = hitting_batch(make_rng(3), 20_000, table)
    assert batch.censored == 0 and len(batch.X) == 20_000
    assert all(in_F(m) for m in batch.X[:500])
    assert abs(batch.T.mean() - 12) < 5 * batch.T.std() / np.sqrt(20_000)


def test_small_kac_and_symmetry():
    rep = kac_check(50_000, make_rng(4))
    assert abs(rep.mean_T - 12) <= 4 * rep.se_T
    assert rep.symmetric
    assert rep.tail_slope < 0 and rep.tail_r2 > 0.99


def test_symmetry_scores_flag_asymmetry():
    c = Counter({A: 100, mat_inv(A): 40})
    z = dict(symmetry_scores(c, 1))
    assert z[A] > 3


def test_return_time_average():
    avg = return_time_average(2000, 50, make_rng(5))
    assert abs(avg.mean() - 12) < 5 * avg.std() / np.sqrt(2000)


def test_finite_quotient_degenerate_case():
    fq = finite_quotient_check(4)
    assert fq.order_G == 48 and fq.order_F == 4
    assert abs(fq.deltas_G[-1]) < 1e-9 and abs(fq.deltas_F[-1]) < 1e-9
    assert fq.lost_mass < 1e-12


def test_coset_chain_entropy_decays():
    d = coset_chain_entropy(80)
    assert abs(d[-1]) < 1e-9


def test_atoms_csv(tmp_path):
    batch = hitting_batch(make_rng(6), 2000)
    p = tmp_path / "atoms.csv"
    write_atoms_csv(p, batch, top=10)
    rows = p.read_text().splitlines()
    assert rows[0].startswith("witness,a,b,c,d") and len(rows) == 11
    assert format_sanov_word((1, -2)) == "A B^-1"
