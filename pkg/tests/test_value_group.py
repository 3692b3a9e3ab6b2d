import random
from fractions import Fraction

import pytest

from conftest import V
from ss_skeleton.errors import InvariantError
from ss_skeleton.value_group import (
    ONE,
    ZERO,
    DenominatorCapError,
    LogValue,
    Value,
    cmp,
    get_max_denominator,
    in_r_power_class,
    max_denominator,
)


class TestCmp:
    def test_examples(self):
        assert cmp(V("1/2"), V("1/3")) == "greater"
        assert cmp(V("1/4") ** Fraction(1, 2), V("1/2")) == "equal"
        assert cmp(V("1/2") ** 3, V("1/3") ** 2) == "greater"

    def test_zero_is_below_everything(self):
        assert ZERO < Value({2: Fraction(-100)})
        assert cmp(ZERO, ZERO) == "equal"
        assert cmp(V(1), ZERO) == "greater"

    def test_irrational_powers(self):
        # 2^(1/2) vs 3^(1/3): 2^3 = 8 < 9 = 3^2
        assert Value({2: Fraction(1, 2)}) < Value({3: Fraction(1, 3)})
        # 2^(1/3) * 3^(-1/2) vs 5^(-1/6): compare 2^2 * 5 = 20 with 3^3 = 27
        assert Value({2: Fraction(1, 3), 3: Fraction(-1, 2)}) < Value({5: Fraction(-1, 6)})

    def test_total_order_properties(self):
        rng = random.Random(5)
        vals = [Value({p: Fraction(rng.randint(-6, 6), rng.randint(1, 6)) for p in (2, 3, 5)}) for _ in range(40)]
        for a in vals:
            for b in vals:
                assert (a <= b) or (b <= a)
                if a <= b and b <= a:
                    assert a == b
                for c in vals[:8]:
                    if a <= b and b <= c:
                        assert a <= c
                    assert cmp(a * c, b * c) == cmp(a, b)

    def test_float_agreement_when_separated(self):
        rng = random.Random(11)
        for _ in range(500):
            a = Value({p: Fraction(rng.randint(-9, 9), rng.randint(1, 6)) for p in (2, 3, 5)})
            b = Value({p: Fraction(rng.randint(-9, 9), rng.randint(1, 6)) for p in (2, 3, 5)})
            fa, fb = a.log_float(), b.log_float()
            if abs(fa - fb) > 1e-9:
                assert (a < b) == (fa < fb)


class TestArithmetic:
    def test_examples(self):
        assert V("1/2") * V("1/3") == V("1/6")
        assert V("1/4") ** Fraction(1, 2) == V("1/2")
        assert V("2/3") ** -2 == V("9/4")

    def test_canonical_form(self):
        assert Value({2: Fraction(-2, 2)}) == V("1/2")
        assert Value({2: 0, 3: Fraction(1)}) == V(3)
        assert Value({2: Fraction(1, 2)}).factors == {2: Fraction(1, 2)}
        assert hash(Value({2: Fraction(-2, 4)})) == hash(Value({2: Fraction(-1, 2)}))

    def test_zero_rules(self):
        assert ZERO * V(3) == ZERO
        assert ZERO ** 2 == ZERO
        with pytest.raises(ValueError):
            ZERO ** 0
        with pytest.raises(ValueError):
            ZERO ** -1

    def test_non_prime_keys_rejected(self):
        with pytest.raises(InvariantError) as exc:
            Value({4: 1})
        assert exc.value.invariant == "prime-keys"

    def test_denominator_cap(self):
        assert get_max_denominator() == 64
        with pytest.raises(DenominatorCapError):
            Value({2: Fraction(1, 65)})
        with pytest.raises(DenominatorCapError):
            V("1/2") ** Fraction(1, 100)
        with max_denominator(200):
            assert (V("1/2") ** Fraction(1, 100)) ** 100 == V("1/2")
        assert get_max_denominator() == 64

    def test_as_rational_and_str(self):
        assert V("3/4").as_rational() == Fraction(3, 4)
        assert Value({2: Fraction(1, 2)}).as_rational() is None
        assert str(Value({2: Fraction(-1, 3), 3: 1})) == "2^(-1/3)*3^1"
        assert str(V("2/3")) == "2/3"


class TestLogValue:
    def test_homomorphism(self):
        a, b = Value({2: Fraction(1, 3), 5: -1}), V("9/7")
        assert (a * b).log() == a.log() + b.log()
        assert (a / b).log() == a.log() - b.log()
        assert (a ** Fraction(3, 2)).log() == a.log() * Fraction(3, 2)
        assert a.log().exp() == a

    def test_sign_matches_order(self):
        for v in (V("1/2"), V(3), V(1), Value({2: 1, 3: Fraction(-2, 3)})):
            assert v.log().sign() == v._cmp(ONE)

    def test_ratio_and_json(self):
        assert V("1/8").log().ratio(V("1/2").log()) == 3
        assert V("1/3").log().ratio(V("1/2").log()) is None
        lv = Value({2: Fraction(-1, 2)}).log()
        assert LogValue.from_json(lv.to_json()) == lv


class TestPowerClass:
    def test_examples(self):
        r = V("1/2")
        assert in_r_power_class(V("1/8"), r) == 3
        assert in_r_power_class(V("1/3"), r) is None
        assert in_r_power_class(V("2/3"), r) is None
        assert in_r_power_class(V("2/3") * V("3/2"), r) == 0

    def test_rejects_degenerate(self):
        with pytest.raises(ValueError):
            in_r_power_class(V(2), ONE)
        with pytest.raises(ValueError):
            in_r_power_class(ZERO, V("1/2"))

    def test_grid(self):
        r = Value({2: Fraction(-1, 2), 3: Fraction(1, 3)})
        with max_denominator(512):
            for d in range(1, 13):
                for p in range(-24, 25):
                    q = Fraction(p, d)
                    assert in_r_power_class(r ** q, r) == q


class TestJson:
    @pytest.mark.parametrize("v", [ZERO, ONE, V("1/2"), Value({2: Fraction(-1, 2), 3: 1})])
    def test_roundtrip(self, v):
        assert Value.from_json(v.to_json()) == v

    def test_forms(self):
        assert Value.to_json(V("1/2")) == {"factors": {"2": "-1"}}
        assert Value.from_json({"zero": True}) == ZERO
        assert Value.from_json("3/4") == V("3/4")
        assert Value.from_json(1) == ONE

    @pytest.mark.parametrize("bad", [{"x": 1}, [1], "1/0", "abc", {"factors": {"2": "1/x"}}, -1, "-1/2"])
    def test_rejects(self, bad):
        with pytest.raises(InvariantError):
            Value.from_json(bad)
