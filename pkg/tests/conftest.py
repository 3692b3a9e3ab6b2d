from fractions import Fraction

import pytest

from ss_skeleton.monomial_algebra import ModelAlgebra, RawPoly, SpecialPoly, Coefficient, to_special
from ss_skeleton.value_group import Value


def V(x) -> Value:
    """Value from a rational literal such as ``"1/2"``."""
    return Value.from_rational(Fraction(x))


def raw(model: ModelAlgebra, *terms) -> SpecialPoly:
    """Special form of ``sum c * t^n`` given ``(n, c)`` pairs over ``t_0..t_l``."""
    return to_special(RawPoly(model, {tuple(n): Coefficient.monomial(V(c)) for n, c in terms}))


@pytest.fixture
def M11() -> ModelAlgebra:
    return ModelAlgebra(1, 1, V("1/2"))


@pytest.fixture
def M21() -> ModelAlgebra:
    return ModelAlgebra(2, 1, V("1/2"))
