import numpy as np
import pytest

from irspectrum.nilquot import nil_identity, nil_mul_letter
from irspectrum.schreier.checks import (ContractError, ball_signature, bfs_prefix, cuts_every_path, graph_prefix,
                                        reference_signatures, sample_far_vertices, verify_locality,
                                        verify_properness, verify_rad)
from irspectrum.schreier.oracles import (COPY, RAY, TREE, LambdaOracle, TableOracle, ZsOracle, bfs_ball, build_glued)
from irspectrum.walks import make_rng
from irspectrum.words import random_reduced_word

a, b, A, B = 1, 2, -1, -2


def test_properness_zs_window():
    assert verify_properness(ZsOracle(1, 2), range(-5, 6)).passed


def test_properness_glued_radius_7():
    g = build_glued(4)
    assert verify_properness(g, bfs_ball(g, g.root, 7)).passed


def test_properness_detects_corruption():
    # a 3-cycle for label 1 where vertex 2 is wrongly sent to 0 instead of 1's target
    out = {(1, 0): 1, (1, 1): 2, (1, 2): 1, (2, 0): 0, (2, 1): 1, (2, 2): 2}
    rep = verify_properness(TableOracle(2, out), [0, 1, 2])
    assert not rep.passed
    assert rep.violations and rep.violations[0][1] == 1


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_rad_glued(n):
    rep = verify_rad(build_glued(n), n)
    assert rep.passed and rep.ball_vertices == 2 * 3 ** n - 1


def test_rad_zs_fails():
    assert not verify_rad(ZsOracle(1, 2), 1)


def test_rad_beyond_guarantee_is_reported():
    rep = verify_rad(build_glued(3), 4)
    assert isinstance(rep.passed, bool)


def test_signature_translation_invariance():
    z = ZsOracle(1, 2)
    assert ball_signature(z, 0, 3) == ball_signature(z, 17, 3)


def test_signature_vertex_transitive_lambda():
    lam = LambdaOracle(2)
    rng = make_rng(5)
    v = lam.act(lam.root, random_reduced_word(9, 2, rng))
    assert ball_signature(lam, lam.root, 2) == ball_signature(lam, v, 2)


def test_signature_label_roles_differ():
    assert ball_signature(ZsOracle(1, 2), 0, 1) != ball_signature(ZsOracle(2, 2), 0, 1)


def test_locality_rays_match_zs():
    g = build_glued(6)
    refs = reference_signatures(2, 2)
    far = [v for v in sample_far_vertices(g, 8, 300, make_rng(1)) if v[0] == RAY]
    rep = verify_locality(g, 2, 8, refs, far)
    assert rep.passed and rep.checked == len(far)
    assert set(rep.matched) <= {"Z1", "Z2"}


def test_locality_deep_copy_matches_lambda():
    g = build_glued(6)
    refs = reference_signatures(2, 2)
    leaf = (a, b, a, b, a, b)
    x = nil_identity(2)
    for s in (b, b, b, a, a, a, b, b):
        x = nil_mul_letter(x, s)
    rep = verify_locality(g, 2, 8, refs, [(COPY, leaf, x)])
    assert rep.passed and rep.matched == {"Lambda": 1}


def test_locality_excludes_near_vertices():
    g = build_glued(4)
    refs = reference_signatures(2, 2)
    rep = verify_locality(g, 2, 6, refs, [g.root, (TREE, (a, b))])
    assert rep.checked == 0 and rep.excluded == 2 and rep.passed


def test_locality_flags_near_seam_without_seam_references():
    g = build_glued(2)
    refs = reference_signatures(2, 2)
    rep = verify_locality(g, 2, 0, refs, [(TREE, (a, b))])
    assert not rep.passed


def test_glued_prefix_examples():
    g = build_glued(5)
    assert graph_prefix(g, (TREE, (a, b, a, b, a)), 2) == (a, b)
    x = nil_mul_letter(nil_mul_letter(nil_identity(2), b), b)
    v = (COPY, (b, a, b, a, b), x)
    assert graph_prefix(g, v, 3) == (b, a, b)
    assert bfs_prefix(g, v, 3) == (b, a, b)
    assert graph_prefix(g, g.root, 4) == ()


def test_prefix_matches_definition():
    g = build_glued(3)
    for v, dv in bfs_ball(g, g.root, 6).items():
        for r in range(0, 4):
            f = graph_prefix(g, v, r)
            assert len(f) == min(r, dv)
            assert cuts_every_path(g, v, f, 8)
            assert f == bfs_prefix(g, v, r)


def test_generic_prefix_needs_certificate():
    out = {}
    # a finite 4-vertex-cycle oracle has rad 0; prefix must refuse without a certificate
    for s in (1, 2):
        for v in range(4):
            out[(s, v)] = (v + 1) % 4
    t = TableOracle(2, out)
    with pytest.raises(ContractError):
        graph_prefix(t, 1, 1)


def test_generic_prefix_after_certificate():
    from irspectrum.schreier.oracles import GraphOracle

    class Wrapped(GraphOracle):
        # the glued graph seen only through out/into, so the generic path is taken
        def __init__(self, inner):
            self.inner, self.d = inner, inner.d

        @property
        def root(self):
            return self.inner.root

        def out(self, s, v):
            return self.inner.out(s, v)

        def into(self, s, v):
            return self.inner.into(s, v)

    w = Wrapped(build_glued(3))
    assert verify_rad(w, 3)
    v = w.act(w.root, (b, a, a, b, b))
    assert graph_prefix(w, v, 2) == (b, a)


def test_glued_prefix_beyond_depth_is_contract_error():
    with pytest.raises(ContractError):
        graph_prefix(build_glued(2), (TREE, ()), 3)
