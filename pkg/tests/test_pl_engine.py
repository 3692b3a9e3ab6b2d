import random
from fractions import Fraction

import pytest

from conftest import V, raw
from ss_skeleton.monomial_algebra import ModelAlgebra, evaluate
from ss_skeleton.pl_engine import (
    PLFunction,
    PLTerm,
    PLVerdict,
    Skeleton,
    check_product_power_property,
    is_power_on_delta,
    pl_geq,
    refute_geq,
    sample_points,
    vertices,
)
from ss_skeleton.value_group import ONE

PI = V("1/2")


def pl(a):
    return PLFunction.of(a)


class TestVertices:
    def test_examples(self, M11, M21):
        assert vertices(Skeleton(M11)) == [(ONE,), (PI,)]
        assert vertices(Skeleton(ModelAlgebra(2, 0, PI))) == [(ONE, ONE)]
        assert vertices(Skeleton(M21)) == [(ONE, ONE), (PI, ONE)]

    def test_samples_are_interior(self):
        M = ModelAlgebra(3, 2, V("1/3"))
        sk = Skeleton(M)
        for r in sample_points(sk, 50, random.Random(2)):
            assert M.pi < r[0] * r[1] < ONE  # r_0 = pi/(r_1 r_2) lies strictly inside (pi, 1)
            assert all(M.pi < x < ONE for x in r[:2])
            assert 0 < r[2].log_float() * -1

    def test_samples_need_room(self):
        with pytest.raises(ValueError):
            sample_points(Skeleton(ModelAlgebra(3, 3, PI)), 1, random.Random(0), denom=3)


class TestPLGeq:
    def test_examples(self, M11, M21):
        assert pl_geq(pl(raw(M11, ((1, 0), 1))), pl(raw(M11, ((0, 0), "1/2")))) is PLVerdict.TRUE
        f = pl(raw(M11, ((0, 1), 1), ((0, 0), "1/3")))
        assert pl_geq(f, f) is PLVerdict.TRUE
        assert pl_geq(pl(raw(M21, ((0, 1, 0), 1))), pl(raw(M21, ((0, 0, 1), 1)))) is PLVerdict.FALSE

    def test_multi_term_left_side(self, M11):
        # max(t_1, t_0) >= sqrt(pi) everywhere, but no single term dominates
        f = pl(raw(M11, ((0, 1), 1), ((1, 0), 1)))
        g = PLFunction([PLTerm(PI ** Fraction(1, 2), (0,))], f.skeleton)
        assert pl_geq(f, g, rng=random.Random(0)) is PLVerdict.UNKNOWN
        # max(t_1, t_0) >= 3/4 fails in the middle of the simplex
        h = PLFunction([PLTerm(V("3/4"), (0,))], f.skeleton)
        assert pl_geq(f, h, rng=random.Random(0)) is PLVerdict.FALSE
        assert refute_geq(f, h, rng=random.Random(0)) is not None

    def test_verdict_is_not_truthy(self):
        with pytest.raises(TypeError):
            bool(PLVerdict.TRUE)


class TestPower:
    def test_examples(self, M11, M21):
        assert is_power_on_delta(pl(raw(M11, ((0, 0), "1/2"), ((0, 1), 1)))) == PLTerm(ONE, (1,))
        assert is_power_on_delta(pl(raw(M11, ((0, 1), "1/3")))) == PLTerm(V("1/3"), (1,))
        assert is_power_on_delta(pl(raw(M21, ((0, 1, 0), 1), ((0, 0, 1), 1)))) is None

    def test_product_property(self, M11, M21):
        f = pl(raw(M11, ((0, 0), 1), ((0, 1), 1)))
        assert check_product_power_property(f, f)
        assert check_product_power_property(pl(raw(M11, ((0, 1), 1))), pl(raw(M11, ((1, 0), 1))))
        g = pl(raw(M21, ((0, 1, 0), 1), ((0, 0, 1), 1)))
        assert is_power_on_delta(g * g) is None and check_product_power_property(g, g)

    def test_reduction_preserves_values(self):
        M = ModelAlgebra(2, 1, V("1/3"))
        a = raw(M, ((0, 0, 0), "1/3"), ((0, 1, 0), 1), ((1, 0, 0), 1), ((0, 0, 1), "1/2"), ((0, 2, 0), 1))
        f = pl(a)
        assert len(f) < len(a)
        assert PLFunction(f.terms, f.skeleton) == f  # idempotent
        for r in vertices(f.skeleton) + sample_points(f.skeleton, 100, random.Random(4)):
            assert f(r) == evaluate(a, r)
