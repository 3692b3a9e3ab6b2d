"""Max-of-power functions ``r -> max_j c_j r**n_j`` on the skeleton.

The skeleton is ``Delta_m x [0,1]^(l-m)`` where ``Delta_m`` is the exponential
simplex ``r_0 ... r_m = pi``.  Points are given by their free coordinates
``(r_1..r_l)``; ``r_0`` is implied.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .monomial_algebra import Exponent, ModelAlgebra, SpecialPoly, _value_key, monomial_dominates
from .value_group import ONE, Value

__all__ = [
    "Skeleton",
    "PLTerm",
    "PLFunction",
    "PLVerdict",
    "vertices",
    "sample_points",
    "pl_geq",
    "is_power_on_delta",
    "check_product_power_property",
]


class PLVerdict(enum.Enum):
    TRUE = "true"
    FALSE = "false"
    UNKNOWN = "unknown"

    def __bool__(self) -> bool:
        raise TypeError("PLVerdict is three-valued; compare against PLVerdict.TRUE explicitly")


@dataclass(frozen=True)
class Skeleton:
    model: ModelAlgebra

    @property
    def m(self) -> int:
        return self.model.m

    @property
    def l(self) -> int:
        return self.model.l


@dataclass(frozen=True)
class PLTerm:
    c: Value
    n: Exponent

    def __post_init__(self):
        if self.c.is_zero:
            raise ValueError("PL term needs a nonzero value")

    def at(self, r: Sequence[Value]) -> Value:
        out = self.c
        for x, k in zip(r, self.n):
            if k:
                out = out * x**k
        return out

    def __mul__(self, other: "PLTerm") -> "PLTerm":
        return PLTerm(self.c * other.c, tuple(a + b for a, b in zip(self.n, other.n)))


def _reduce(terms: Iterable[PLTerm], sk: Skeleton) -> tuple[PLTerm, ...]:
    pi, m = sk.model.pi, sk.m
    pool = sorted(set(terms), key=lambda t: t.n)
    kept: list[PLTerm] = []
    for t in pool:
        if any(monomial_dominates(k.c, k.n, t.c, t.n, pi, m) for k in kept):
            continue
        kept = [k for k in kept if not monomial_dominates(t.c, t.n, k.c, k.n, pi, m)]
        kept.append(t)
    return tuple(sorted(kept, key=lambda t: t.n))


class PLFunction:
    """Pointwise maximum of power functions, kept in reduced form."""

    __slots__ = ("skeleton", "terms")

    def __init__(self, terms: Iterable[PLTerm], skeleton: Skeleton):
        self.skeleton = skeleton
        self.terms = _reduce(terms, skeleton)
        if not self.terms:
            raise ValueError("PL function needs at least one term")

    @classmethod
    def of(cls, a: SpecialPoly) -> "PLFunction":
        """``|a|_Delta`` for a nonzero special polynomial."""
        return cls((PLTerm(c.valuation(), n) for n, c in a.terms.items()), Skeleton(a.model))

    def __call__(self, r: Sequence[Value]) -> Value:
        return max((t.at(r) for t in self.terms), key=_value_key)

    def __mul__(self, other: "PLFunction") -> "PLFunction":
        return PLFunction((s * t for s in self.terms for t in other.terms), self.skeleton)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PLFunction):
            return NotImplemented
        return self.skeleton == other.skeleton and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.skeleton, self.terms))

    def __len__(self) -> int:
        return len(self.terms)

    def __repr__(self) -> str:
        return f"PLFunction({[(str(t.c), t.n) for t in self.terms]})"


def vertices(sk: Skeleton) -> list[tuple[Value, ...]]:
    """The points ``rho_0..rho_m``: ``pi`` in slot ``j`` of the simplex, 1 elsewhere."""
    pts = [tuple(ONE for _ in range(sk.l))]
    for j in range(1, sk.m + 1):
        pt = [ONE] * sk.l
        pt[j - 1] = sk.model.pi
        pts.append(tuple(pt))
    return pts


def sample_points(sk: Skeleton, count: int, rng: random.Random, denom: int = 8) -> list[tuple[Value, ...]]:
    """Interior points with coordinates ``pi**(j/denom)`` (tail base 1/2 when ``pi == 1``).

    Simplex weights are strictly positive, so every point is interior to
    ``Delta_m``; tail coordinates lie strictly inside ``(0, 1)``.
    """
    pi = sk.model.pi
    tail_base = pi if pi < ONE else Value.from_rational(Fraction(1, 2))
    pts = []
    m = sk.m
    if denom <= m:
        raise ValueError("denom must exceed m for interior simplex points")
    for _ in range(count):
        # m+1 positive weights j/denom summing to 1
        cuts = sorted(rng.sample(range(1, denom), m))
        bounds = [0] + cuts + [denom]
        weights = [Fraction(b - a, denom) for a, b in zip(bounds, bounds[1:])]
        coords = [pi ** w for w in weights[1:]]
        coords += [tail_base ** Fraction(rng.randint(1, 2 * denom), denom) for _ in range(sk.l - m)]
        pts.append(tuple(coords))
    return pts


def _vertex_geq(f: PLTerm, g: PLTerm, sk: Skeleton) -> bool:
    if any(f.n[i] > g.n[i] for i in range(sk.m, sk.l)):
        return False
    return all(f.at(rho) >= g.at(rho) for rho in vertices(sk))


def pl_geq(
    f: PLFunction,
    g: PLFunction,
    *,
    rng: random.Random | None = None,
    samples: int = 200,
) -> PLVerdict:
    """Decide ``f >= g`` on the skeleton.

    Single-term pairs use the vertex criterion, which is exact.  A multi-term
    ``g`` is split termwise.  A multi-term ``f`` is confirmed only when one of
    its terms already dominates; otherwise sampling can refute but never
    confirm, and the answer is ``UNKNOWN``.
    """
    sk = f.skeleton
    if len(g) > 1:
        verdicts = [pl_geq(f, PLFunction([t], sk), rng=rng, samples=samples) for t in g.terms]
        if PLVerdict.FALSE in verdicts:
            return PLVerdict.FALSE
        if all(v is PLVerdict.TRUE for v in verdicts):
            return PLVerdict.TRUE
        return PLVerdict.UNKNOWN
    (gt,) = g.terms
    if len(f) == 1:
        return PLVerdict.TRUE if _vertex_geq(f.terms[0], gt, sk) else PLVerdict.FALSE
    if any(_vertex_geq(ft, gt, sk) for ft in f.terms):
        return PLVerdict.TRUE
    if refute_geq(f, g, rng=rng or random.Random(0), samples=samples) is not None:
        return PLVerdict.FALSE
    return PLVerdict.UNKNOWN


def refute_geq(
    f: PLFunction, g: PLFunction, *, rng: random.Random, samples: int = 200
) -> tuple[Value, ...] | None:
    """A point of the skeleton where ``f < g``, searched over vertices and samples."""
    sk = f.skeleton
    for r in vertices(sk) + sample_points(sk, samples, rng):
        if f(r) < g(r):
            return r
    return None


def is_power_on_delta(f: PLFunction) -> PLTerm | None:
    """The single power function equal to ``f`` on the skeleton, if there is one."""
    return f.terms[0] if len(f) == 1 else None


def check_product_power_property(f: PLFunction, g: PLFunction) -> bool:
    """``f*g`` is a power function exactly when ``f`` and ``g`` both are."""
    lhs = is_power_on_delta(f * g) is not None
    rhs = is_power_on_delta(f) is not None and is_power_on_delta(g) is not None
    return lhs == rhs
