import json
import random
from fractions import Fraction

import numpy as np
import pytest

from conftest import V
from ss_skeleton.covering import (
    AnnuliModel,
    CoveringCertificate,
    Interval,
    LeafRegion,
    NodeKind,
    build_covering,
    certify,
    choose_lambda,
    leaf_region,
    leaf_skeleton,
    triangulate_leaf,
    verify_covering,
)
from ss_skeleton.errors import InvariantError
from ss_skeleton.invariants import mutate_certificate
from ss_skeleton.monomial_algebra import ModelAlgebra
from ss_skeleton.render import certificate_csv, certificate_svg
from ss_skeleton.value_group import ONE, Value, max_denominator

HALF = V("1/2")


def model(pi_0="1/2", pi_1="1/3", r="1/2", m=1, l=None, n=None, **kw):
    l = m if l is None else l
    n = (0,) * (m + 1) if n is None else n
    return AnnuliModel(ModelAlgebra(l, m, V(pi_0)), n, V(pi_1), V(r), **kw)


class TestChooseLambda:
    @pytest.mark.parametrize(
        "r_t, q, s",
        [
            ("1/3", Fraction(-1), V("2/3")),
            ("1/2", Fraction(-2, 3), Value({2: Fraction(-1, 3)})),
            ("1/4", Fraction(-3, 2), Value({2: Fraction(-1, 2)})),
            ("1/5", Fraction(-2), V("4/5")),
        ],
    )
    def test_examples(self, r_t, q, s):
        assert choose_lambda(V(r_t), Fraction(1, 2), HALF) == (s, q)

    def test_oracle_for_flagship(self):
        # independent integer check: (1/3)^(1/2) < 2/3 < 1  <=>  1/3 < 4/9 and 2 < 3
        s, q = choose_lambda(V("1/3"), Fraction(1, 2), HALF)
        assert (1 * 9 < 4 * 3) and (2 < 3)
        assert s.as_rational() == Fraction(2, 3) and q == -1

    def test_constraints_hold_randomly(self):
        rng = random.Random(7)
        with max_denominator(4096):
            self._random_trials(rng)

    @staticmethod
    def _random_trials(rng):
        for _ in range(300):
            r_t = Value({p: Fraction(-rng.randint(1, 6), rng.randint(1, 6)) for p in (2, 3, 5) if rng.random() < 0.6} or {2: -1})
            r = Value({p: Fraction(-rng.randint(1, 4), rng.randint(1, 4)) for p in (2, 3) if rng.random() < 0.7} or {3: -1})
            e = Fraction(rng.randint(1, 5), 6)
            s, q = choose_lambda(r_t, e, r)
            assert r_t ** e < s < ONE
            assert s == r_t * r ** q

    def test_minimal_denominator(self):
        s, q = choose_lambda(V("1/3"), Fraction(1, 2), HALF)
        # no admissible integer q other than -1, and -1 has denominator 1
        for cand in (0, -2):
            cs = V("1/3") * HALF ** cand
            assert not (V("1/3") ** Fraction(1, 2) < cs < ONE)

    @pytest.mark.parametrize("e", [Fraction(0), Fraction(1), Fraction(3, 2)])
    def test_rejects_bad_exponent(self, e):
        with pytest.raises(InvariantError):
            choose_lambda(V("1/3"), e, HALF)

    def test_rejects_bad_target(self):
        with pytest.raises(InvariantError):
            choose_lambda(ONE, Fraction(1, 2), HALF)


class TestBuildCovering:
    def test_flagship(self):
        tree = build_covering(model())
        assert tree.kind is NodeKind.FIBER_SPLIT
        assert (tree.split.s, tree.split.q) == (V("2/3"), -1)
        leaves = tree.leaves()
        assert [lf.kind for lf in leaves] == [NodeKind.TORIC_LEAF] * 2
        assert [(lf.a, lf.b) for lf in leaves] == [(1, 1), (1, 1)]

    def test_no_split(self):
        tree = build_covering(model(pi_1="1/2"))
        assert tree.kind is NodeKind.TORIC_LEAF and (tree.a, tree.b) == (1, 1)

    def test_base_split(self):
        tree = build_covering(model(pi_0="1/3", pi_1="1/2"))
        assert tree.kind is NodeKind.BASE_SPLIT and len(tree.children) == 2
        assert all(c.chart.base_const == HALF for c in tree.children)

    def test_base_split_fiber_exponents(self):
        tree = build_covering(model(pi_0="1/3", pi_1="1/2", n=(0, 1)))
        s = tree.split.s
        assert tree.children[0].chart.fiber_const == HALF
        assert tree.children[1].chart.fiber_const == HALF * s

    def test_m0_single_child(self):
        tree = build_covering(model(pi_0="1/3", pi_1="1/2", m=0, n=(1,)))
        assert tree.kind is NodeKind.BASE_SPLIT and len(tree.children) == 1
        assert tree.children[0].variable == "t'_0"

    def test_m2_unresolved(self):
        tree = build_covering(model(pi_0="1/3", m=2))
        assert len(tree.children) == 3
        assert {lf.kind for lf in tree.leaves()} == {NodeKind.UNRESOLVED_LEAF}

    def test_fiber_fifth(self):
        tree = build_covering(model(pi_1="1/5"))
        assert tree.split.s == V("4/5")
        assert all(c.chart.fiber_const == V("1/4") for c in tree.children)

    def test_model_validation(self):
        with pytest.raises(InvariantError):
            model(n=(0,))
        with pytest.raises(InvariantError):
            model(r="1")
        with pytest.raises(InvariantError):
            model(pi_1="2")
        with pytest.raises(InvariantError):
            model(e_fiber=Fraction(1))
        assert model(m=0, n=(0,)).e_base == Fraction(1, 2)
        assert model(m=2).e_base == Fraction(1, 3)


class TestLeafSkeleton:
    def test_flagship_intervals(self):
        m = model()
        tree = build_covering(m)
        sk0, sk1 = (leaf_skeleton(tree, m, lf.id) for lf in tree.leaves())
        (_, iv0), _ = sk0.fiber_intervals
        (_, iv1), _ = sk1.fiber_intervals
        assert iv0 == Interval(V("1/3"), V("2/3"))
        assert iv1 == Interval(V("1/2"), ONE)
        assert sk0.overlaps[0][1] == Interval(V("1/2"), V("2/3"))
        assert sk0.region == LeafRegion(Fraction(1), Fraction(1), Fraction(1))

    def test_fifth_intervals(self):
        m = model(pi_1="1/5")
        tree = build_covering(m)
        sk0, sk1 = (leaf_skeleton(tree, m, lf.id) for lf in tree.leaves())
        assert sk0.fiber_intervals[0][1] == Interval(V("1/5"), V("4/5"))
        assert sk1.fiber_intervals[0][1] == Interval(V("1/4"), ONE)
        assert sk1.overlaps[0][1] == Interval(V("1/4"), V("4/5"))

    def test_no_split_full_interval(self):
        m = model(pi_1="1/2")
        tree = build_covering(m)
        sk = leaf_skeleton(tree, m, "root")
        assert sk.fiber_intervals[0][1] == Interval(HALF, ONE) and sk.overlaps == ()

    def test_unresolved_rejected(self):
        m = model(pi_0="1/3", m=2)
        tree = build_covering(m)
        with pytest.raises(ValueError):
            leaf_skeleton(tree, m, tree.leaves()[0].id)


class TestTriangulate:
    @pytest.mark.parametrize("a,b,count", [("1", "1", 2), ("1", "3/2", 12), ("1/2", "1/3", 12)])
    def test_counts(self, a, b, count):
        tris = triangulate_leaf(Fraction(a), Fraction(b))
        assert len(tris) == count
        assert all(t.is_unimodular() for t in tris)
        assert sum(t.area() for t in tris) == Fraction(a) * Fraction(b)

    def test_small_triangle_area(self):
        tris = triangulate_leaf(Fraction(1, 2), Fraction(1, 3))
        assert {t.N for t in tris} == {6}
        assert {t.area() for t in tris} == {Fraction(1, 72)}

    def test_trapezoid(self):
        tris = triangulate_leaf(Fraction(1), Fraction(1), n=(0, 1))
        assert len(tris) == 3 and sum(t.area() for t in tris) == Fraction(3, 2)

    @pytest.mark.parametrize("a,b", [(0, 1), (1, 0), (-1, 1)])
    def test_rejects_nonpositive(self, a, b):
        with pytest.raises(InvariantError):
            triangulate_leaf(Fraction(a), Fraction(b))

    def test_region_shapes(self):
        assert leaf_region(0, Fraction(1), Fraction(2), (1,)).dim == 1
        assert leaf_region(1, Fraction(1), Fraction(0), (0, 0)).dim == 1
        assert leaf_region(1, Fraction(0), Fraction(0), (0, 0)).dim == 0
        assert leaf_region(1, Fraction(1, 2), Fraction(1, 3), (2, 0)).h_left == Fraction(4, 3)


class TestVerify:
    def test_flagship_valid(self):
        cert = certify(model())
        assert cert.verdict.valid and cert.triangle_count == 4
        assert len(cert.leaves) == 2

    def test_json_roundtrip_reverifies(self):
        cert = certify(model(pi_0="1/3", pi_1="1/5", n=(1, 2)))
        again = CoveringCertificate.from_json(json.loads(json.dumps(cert.to_json())))
        assert verify_covering(again).valid
        assert again.to_json() | {"verdict": None} == cert.to_json() | {"verdict": None}

    def test_deleted_triangle(self):
        cert = certify(model())
        cert.leaves[1].simplices = cert.leaves[1].simplices[:-1]
        report = verify_covering(cert)
        assert report.failed_ids == [4]
        assert report.checks[3].failures[0]["leaf"] == "root.f1"

    def test_gap_reported(self):
        cert = certify(model())
        for ax in cert.axes:
            ax.charts = [(ax.charts[0][0], Interval(V("1/3"), V("1/2"))), (ax.charts[1][0], Interval(V("2/3"), ONE))]
        report = verify_covering(cert)
        assert not report.valid
        assert {"axis": cert.axes[0].id, "gap": "(1/2, 2/3)"} in report.checks[0].failures

    def test_tampered_split(self):
        cert = certify(model())
        sp = cert.tree.split
        cert.tree.split = type(sp)(sp.kind, sp.target, sp.e, V("1/2"), sp.q)
        assert 2 in verify_covering(cert).failed_ids

    def test_tampered_leaf_exponent(self):
        cert = certify(model())
        cert.leaves[0].b = Fraction(2)
        assert verify_covering(cert).failed_ids == [4]

    def test_unresolved(self):
        cert = certify(model(pi_0="1/3", m=2))
        assert cert.verdict.failed_ids == [5]

    def test_one_dimensional_leaves(self):
        cert = certify(model(pi_0="1/3", pi_1="1/2", m=0, n=(1,)))
        assert cert.verdict.valid
        assert all(lf.simplices.shape[1] == 2 for lf in cert.leaves)
        cert.leaves[0].simplices = cert.leaves[0].simplices[1:]
        assert verify_covering(cert).failed_ids == [4]

    def test_off_lattice_vertex(self):
        doc = certify(model()).to_json()
        doc["leaves"][0]["simplices"][0][2] = ["1/3", "1"]
        report = verify_covering(CoveringCertificate.from_json(doc))
        assert 3 in report.failed_ids

    @pytest.mark.parametrize("seed", range(20))
    def test_mutations_rejected(self, seed):
        rng = random.Random(seed)
        cert = certify(model(pi_0="1/3", pi_1="1/5", n=(1, 0)))
        kind, expected, mutant = mutate_certificate(cert, rng)
        report = verify_covering(mutant)
        assert not report.valid and expected in report.failed_ids, (kind, report.failed_ids)
        assert verify_covering(cert).valid  # the original is untouched

    def test_malformed(self):
        with pytest.raises(InvariantError):
            CoveringCertificate.from_json({"format": "nope"})
        doc = certify(model()).to_json()
        del doc["axes"]
        with pytest.raises(InvariantError):
            CoveringCertificate.from_json(doc)


class TestLargeLeaves:
    def test_numba_and_numpy_certificates_agree(self, monkeypatch):
        pytest.importorskip("numba")
        big = AnnuliModel(ModelAlgebra(1, 1, Value({2: Fraction(-7, 1)})), (1, 2), Value({3: Fraction(-3, 1)}), Value({2: Fraction(-1, 12)}))
        monkeypatch.setenv("SS_SKELETON_NUMBA", "off")
        ref = certify(big)
        monkeypatch.setenv("SS_SKELETON_NUMBA", "force")
        fast = certify(big)
        assert ref.verdict.valid and fast.verdict.valid
        for a, b in zip(ref.leaves, fast.leaves):
            np.testing.assert_array_equal(a.simplices, b.simplices)
        assert ref.triangle_count > 20_000


class TestRender:
    def test_svg_and_csv(self):
        cert = certify(model())
        svg = certificate_svg(cert)
        assert svg.count("<polygon") == 2 + 4 and "display-only" in svg
        rows = certificate_csv(cert).splitlines()
        assert rows[0] == "leaf,N,simplex,vertex,x,y" and len(rows) == 1 + 12
        assert rows[1] == "root.f0,1,0,0,0,0"


class TestBudget:
    def test_simplex_budget(self):
        m = model()
        assert certify(m, max_simplices=4).triangle_count == 4
        with pytest.raises(InvariantError) as exc:
            certify(m, max_simplices=3)
        assert exc.value.invariant == "max-simplices"
        assert certify(m, max_simplices=None).verdict.valid

    @pytest.mark.parametrize(
        "kw",
        [
            dict(pi_1="1/5"),
            dict(pi_0="1/3", pi_1="1/5", n=(1, 2)),
            dict(pi_0="1/3", pi_1="1/2", m=0, n=(1,)),
        ],
    )
    def test_simplex_count_predicts_certificate(self, kw):
        m = model(**kw)
        cert = certify(m)
        predicted = sum(leaf_region(m.m, lf.a, lf.b, m.n).simplex_count() for lf in cert.leaves)
        assert predicted == sum(lf.simplices.shape[0] for lf in cert.leaves) > 0
