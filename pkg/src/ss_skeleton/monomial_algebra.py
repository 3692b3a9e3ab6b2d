"""Special representations in the model algebra ``k°[t_0..t_l]/(t_0...t_m - pi)``.

Elements are stored in their special form: ``t_0`` is eliminated through
``t_0 = pi * t_1**-1 * ... * t_m**-1`` and exponents live in
``Z^m x N^(l-m)`` (indices 1..l).  Coefficients are finite rational
combinations of values (:class:`Coefficient`), a stand-in for ``k°`` on which
the max-valuation is multiplicative.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import CoefficientDivisionError, InvariantError
from .value_group import ONE, ZERO, Value

Exponent = tuple[int, ...]

__all__ = [
    "Coefficient",
    "ModelAlgebra",
    "SpecialMonomial",
    "SpecialPoly",
    "RawPoly",
    "to_special",
    "evaluate",
    "monomial_dominates",
    "dominates_criterion",
    "divides_witness",
    "dominating_monomial",
    "is_unit_R",
    "is_unit_R_eta",
    "factor_generic_unit",
    "recompose",
]

_DIVISION_STEPS = 256


def _value_key(v: Value):
    return functools.cmp_to_key(lambda a, b: a._cmp(b))(v)


class Coefficient:
    """Finite sum ``sum c_j * gamma_j`` with rationals ``c_j`` and distinct values ``gamma_j``."""

    __slots__ = ("_terms", "_val", "_hash")

    def __init__(self, terms: Mapping[Value, Fraction] | Iterable[tuple[Fraction, Value]] = ()):
        merged: dict[Value, Fraction] = {}
        items = terms.items() if isinstance(terms, Mapping) else ((g, c) for c, g in terms)
        for g, c in items:
            c = Fraction(c)
            if g.is_zero or c == 0:
                continue
            merged[g] = merged.get(g, Fraction(0)) + c
        self._terms = {g: c for g, c in merged.items() if c}
        self._val: Value | None = None
        self._hash = None

    @classmethod
    def monomial(cls, gamma: Value, c: Fraction | int = 1) -> "Coefficient":
        return cls({gamma: Fraction(c)})

    @property
    def terms(self) -> list[tuple[Fraction, Value]]:
        """Terms sorted by decreasing value."""
        return sorted(
            ((c, g) for g, c in self._terms.items()), key=lambda t: _value_key(t[1]), reverse=True
        )

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def valuation(self) -> Value:
        if self._val is None:
            self._val = max(self._terms, key=_value_key) if self._terms else ZERO
        return self._val

    def leading(self) -> tuple[Fraction, Value]:
        g = self.valuation()
        return self._terms[g], g

    def __add__(self, other: "Coefficient") -> "Coefficient":
        merged = dict(self._terms)
        for g, c in other._terms.items():
            merged[g] = merged.get(g, Fraction(0)) + c
        return Coefficient(merged)

    def __neg__(self) -> "Coefficient":
        return Coefficient({g: -c for g, c in self._terms.items()})

    def __sub__(self, other: "Coefficient") -> "Coefficient":
        return self + (-other)

    def __mul__(self, other: "Coefficient") -> "Coefficient":
        out: dict[Value, Fraction] = {}
        for g1, c1 in self._terms.items():
            for g2, c2 in other._terms.items():
                g = g1 * g2
                out[g] = out.get(g, Fraction(0)) + c1 * c2
        return Coefficient(out)

    def scale(self, v: Value) -> "Coefficient":
        if v.is_zero:
            return Coefficient()
        return Coefficient({g * v: c for g, c in self._terms.items()})

    def divide(self, other: "Coefficient") -> "Coefficient":
        """Exact quotient ``self / other``.

        Single-term divisors always divide.  Otherwise long division on the
        leading term is run; a quotient term below ``min(self)/min(other)``
        proves the quotient is not a finite sum.
        """
        if not other:
            raise ZeroDivisionError("division by zero coefficient")
        if not self:
            return Coefficient()
        if len(other) == 1:
            (g, c), = other._terms.items()
            inv = g.inverse()
            return Coefficient({h * inv: d / c for h, d in self._terms.items()})
        lc, lg = other.leading()
        floor = min(self._terms, key=_value_key) / min(other._terms, key=_value_key)
        quotient: dict[Value, Fraction] = {}
        rem = self
        for _ in range(_DIVISION_STEPS):
            if not rem:
                return Coefficient(quotient)
            rc, rg = rem.leading()
            qg, qc = rg / lg, rc / lc
            if qg < floor:
                break
            quotient[qg] = quotient.get(qg, Fraction(0)) + qc
            rem = rem - other * Coefficient({qg: qc})
        raise CoefficientDivisionError(
            f"{self} / {other} is not a finite sum in the coefficient model"
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Coefficient):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def is_one(self) -> bool:
        return len(self._terms) == 1 and self._terms.get(ONE) == 1

    def __repr__(self) -> str:
        return f"Coefficient({self})"

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for c, g in self.terms:
            if g.is_one():
                parts.append(str(c))
            elif c == 1:
                parts.append(f"[{g}]")
            else:
                parts.append(f"{c}*[{g}]")
        return " + ".join(parts)

    def to_json(self) -> list:
        return [{"c": str(c), "gamma": g.to_json()} for c, g in self.terms]

    @classmethod
    def from_json(cls, obj) -> "Coefficient":
        """Parse a term list; a bare value (or rational string) means ``1 * value``."""
        if isinstance(obj, list):
            try:
                return cls((Fraction(t.get("c", "1")), Value.from_json(t["gamma"])) for t in obj)
            except (KeyError, AttributeError, ValueError, ZeroDivisionError) as exc:
                if isinstance(exc, InvariantError):
                    raise
                raise InvariantError("coefficient-json", f"bad coefficient {obj!r}") from exc
        return cls.monomial(Value.from_json(obj))


ONE_COEFF = Coefficient.monomial(ONE)


@dataclass(frozen=True)
class ModelAlgebra:
    """``k°[t_0..t_l]/(t_0 ... t_m - pi)``."""

    l: int
    m: int
    pi: Value

    def __post_init__(self):
        if self.l < 0 or not 0 <= self.m <= self.l:
            raise InvariantError("model-indices", f"need 0 <= m <= l, got l={self.l}, m={self.m}")
        if self.pi.is_zero or self.pi > ONE:
            raise InvariantError("model-pi", f"pi must satisfy 0 < pi <= 1, got {self.pi}")

    def special_bound(self, n: Exponent) -> Value:
        """Largest admissible coefficient value ``pi**-min(0, n_1..n_m)``."""
        k = max([0] + [-x for x in n[: self.m]])
        return self.pi**k if k else ONE

    def check_exponent(self, n: Sequence[int]) -> Exponent:
        n = tuple(int(x) for x in n)
        if len(n) != self.l:
            raise InvariantError("exponent-length", f"exponent {n} must have length l={self.l}")
        if any(x < 0 for x in n[self.m :]):
            raise InvariantError("tail-exponent", f"exponent {n} negative beyond index m={self.m}")
        return n

    def to_json(self) -> dict:
        return {"l": self.l, "m": self.m, "pi": self.pi.to_json()}

    @classmethod
    def from_json(cls, obj) -> "ModelAlgebra":
        try:
            return cls(int(obj["l"]), int(obj["m"]), Value.from_json(obj["pi"]))
        except (KeyError, TypeError) as exc:
            raise InvariantError("model-json", f"bad model {obj!r}") from exc


def _render_monomial(coeff: Coefficient, n: Exponent) -> str:
    vars_ = []
    for i, k in enumerate(n, start=1):
        if k == 1:
            vars_.append(f"t_{i}")
        elif k:
            vars_.append(f"t_{i}^{k}")
    mono = "*".join(vars_)
    if coeff.is_one():
        return mono or "1"
    c = str(coeff)
    if len(coeff) > 1:
        c = f"({c})"
    return f"{c}*{mono}" if mono else c


@dataclass(frozen=True)
class SpecialMonomial:
    model: ModelAlgebra
    n: Exponent
    coeff: Coefficient

    def __post_init__(self):
        object.__setattr__(self, "n", self.model.check_exponent(self.n))
        if not self.coeff:
            raise InvariantError("nonzero-coefficient", "special monomial needs a nonzero coefficient")
        if self.coeff.valuation() > self.model.special_bound(self.n):
            raise InvariantError(
                "specialness",
                f"|a_n| = {self.coeff.valuation()} exceeds {self.model.special_bound(self.n)} at n={self.n}",
            )

    def valuation(self) -> Value:
        return self.coeff.valuation()

    def as_poly(self) -> "SpecialPoly":
        return SpecialPoly(self.model, {self.n: self.coeff})

    def __str__(self) -> str:
        return _render_monomial(self.coeff, self.n)

    def to_json(self) -> dict:
        return {"n": list(self.n), "coeff": self.coeff.to_json()}


class SpecialPoly:
    """An element of the model algebra in special form."""

    __slots__ = ("model", "_terms")

    def __init__(self, model: ModelAlgebra, terms: Mapping[Sequence[int], Coefficient] = (), *, check: bool = True):
        self.model = model
        store: dict[Exponent, Coefficient] = {}
        for n, c in dict(terms).items():
            if not c:
                continue
            if check:
                n = model.check_exponent(n)
                if c.valuation() > model.special_bound(n):
                    raise InvariantError(
                        "specialness",
                        f"|a_n| = {c.valuation()} exceeds {model.special_bound(n)} at n={n}",
                    )
            store[tuple(n)] = c
        self._terms = store

    @classmethod
    def constant(cls, model: ModelAlgebra, c: Coefficient) -> "SpecialPoly":
        return cls(model, {(0,) * model.l: c})

    @classmethod
    def variable(cls, model: ModelAlgebra, i: int) -> "SpecialPoly":
        """``t_i`` for ``0 <= i <= l``."""
        n = [0] * (model.l + 1)
        n[i] = 1
        return to_special(RawPoly(model, {tuple(n): ONE_COEFF}))

    @property
    def terms(self) -> dict[Exponent, Coefficient]:
        return dict(self._terms)

    def monomials(self) -> Iterator[SpecialMonomial]:
        for n in sorted(self._terms):
            yield SpecialMonomial(self.model, n, self._terms[n])

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def coefficient(self, n: Sequence[int]) -> Coefficient:
        return self._terms.get(tuple(n), Coefficient())

    def _same(self, other: "SpecialPoly") -> None:
        if self.model != other.model:
            raise ValueError("special polynomials over different model algebras")

    def __add__(self, other: "SpecialPoly") -> "SpecialPoly":
        self._same(other)
        out = dict(self._terms)
        for n, c in other._terms.items():
            out[n] = out[n] + c if n in out else c
        return SpecialPoly(self.model, out, check=False)

    def __neg__(self) -> "SpecialPoly":
        return SpecialPoly(self.model, {n: -c for n, c in self._terms.items()}, check=False)

    def __sub__(self, other: "SpecialPoly") -> "SpecialPoly":
        return self + (-other)

    def __mul__(self, other: "SpecialPoly") -> "SpecialPoly":
        self._same(other)
        out: dict[Exponent, Coefficient] = {}
        for n1, c1 in self._terms.items():
            for n2, c2 in other._terms.items():
                n = tuple(a + b for a, b in zip(n1, n2))
                c = c1 * c2
                out[n] = out[n] + c if n in out else c
        # products of special monomials stay special
        return SpecialPoly(self.model, out, check=False)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SpecialPoly):
            return NotImplemented
        return self.model == other.model and self._terms == other._terms

    def __hash__(self) -> int:
        return hash((self.model, frozenset(self._terms.items())))

    def __repr__(self) -> str:
        return f"SpecialPoly({self})"

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        return " + ".join(str(m) for m in self.monomials())

    def to_json(self) -> dict:
        return {
            "model": self.model.to_json(),
            "terms": [m.to_json() for m in self.monomials()],
        }

    @classmethod
    def from_json(cls, obj, model: ModelAlgebra | None = None) -> "SpecialPoly":
        """Parse special ``terms``; ``raw_terms`` (exponents over ``t_0..t_l``) are reduced first."""
        if not isinstance(obj, dict):
            raise InvariantError("poly-json", f"expected a polynomial object, got {obj!r}")
        if "model" in obj:
            model = ModelAlgebra.from_json(obj["model"])
        if model is None:
            raise InvariantError("poly-json", "polynomial needs a 'model'")
        if "raw_terms" in obj:
            return to_special(RawPoly.from_json(obj, model))
        terms: dict[Exponent, Coefficient] = {}
        try:
            for t in obj["terms"]:
                n = model.check_exponent(t["n"])
                c = Coefficient.from_json(t["coeff"])
                terms[n] = terms[n] + c if n in terms else c
        except (KeyError, TypeError) as exc:
            raise InvariantError("poly-json", f"bad terms in {obj!r}") from exc
        return cls(model, terms)


class RawPoly:
    """A genuine polynomial in ``t_0..t_l`` with coefficients in ``k°``."""

    __slots__ = ("model", "terms")

    def __init__(self, model: ModelAlgebra, terms: Mapping[Sequence[int], Coefficient]):
        self.model = model
        self.terms: dict[Exponent, Coefficient] = {}
        for n, c in dict(terms).items():
            n = tuple(int(x) for x in n)
            if len(n) != model.l + 1:
                raise InvariantError("exponent-length", f"raw exponent {n} must have length l+1={model.l + 1}")
            if any(x < 0 for x in n):
                raise InvariantError("raw-exponent", f"raw exponent {n} has a negative entry")
            if c.valuation() > ONE:
                raise InvariantError("integral-coefficient", f"coefficient {c} is not in k°")
            if c:
                self.terms[n] = self.terms[n] + c if n in self.terms else c

    def __mul__(self, other: "RawPoly") -> "RawPoly":
        out: dict[Exponent, Coefficient] = {}
        for n1, c1 in self.terms.items():
            for n2, c2 in other.terms.items():
                n = tuple(a + b for a, b in zip(n1, n2))
                out[n] = out[n] + c1 * c2 if n in out else c1 * c2
        return RawPoly(self.model, out)

    def __add__(self, other: "RawPoly") -> "RawPoly":
        out = dict(self.terms)
        for n, c in other.terms.items():
            out[n] = out[n] + c if n in out else c
        return RawPoly(self.model, out)

    @classmethod
    def from_json(cls, obj, model: ModelAlgebra) -> "RawPoly":
        terms: dict[Exponent, Coefficient] = {}
        try:
            for t in obj["raw_terms"]:
                n = tuple(int(x) for x in t["n"])
                c = Coefficient.from_json(t.get("coeff", "1"))
                terms[n] = terms[n] + c if n in terms else c
        except (KeyError, TypeError) as exc:
            raise InvariantError("poly-json", f"bad raw_terms in {obj!r}") from exc
        return cls(model, terms)


def to_special(raw: RawPoly) -> SpecialPoly:
    """Eliminate ``t_0`` through the defining relation."""
    M = raw.model
    out: dict[Exponent, Coefficient] = {}
    for n, c in raw.terms.items():
        k = n[0]
        e = list(n[1:])
        if k:
            c = c.scale(M.pi**k)
            for i in range(M.m):
                e[i] -= k
        e = tuple(e)
        out[e] = out[e] + c if e in out else c
    return SpecialPoly(M, out)


def _check_point(M: ModelAlgebra, r: Sequence[Value]) -> tuple[Value, ...]:
    r = tuple(r)
    if len(r) != M.l:
        raise InvariantError("point-length", f"point needs l={M.l} coordinates, got {len(r)}")
    for x in r:
        if x > ONE:
            raise InvariantError("point-range", f"coordinate {x} exceeds 1")
    prod = ONE
    for x in r[: M.m]:
        prod = prod * x
    if prod < M.pi:
        raise InvariantError("point-in-skeleton", f"r_1...r_m = {prod} < pi = {M.pi}, so r_0 > 1")
    return r


def _power_product(r: Sequence[Value], n: Exponent) -> Value:
    out = ONE
    for x, k in zip(r, n):
        if k:
            out = out * (x**k)
    return out


def evaluate(a: SpecialPoly, r: Sequence[Value]) -> Value:
    """``|a|_r = max_n |a_n| r**n`` for ``r = (r_1..r_l)`` in the skeleton."""
    r = _check_point(a.model, r)
    best = ZERO
    for n, c in a._terms.items():
        if any(x.is_zero and k < 0 for x, k in zip(r, n)):
            raise InvariantError("zero-coordinate", f"0 ** negative at exponent {n}")
        v = c.valuation() * _power_product(r, n)
        if v > best:
            best = v
    return best


def monomial_dominates(c1: Value, n1: Exponent, c2: Value, n2: Exponent, pi: Value, m: int) -> bool:
    """Value/exponent test for ``c1 r**n1 >= c2 r**n2`` on the whole skeleton."""
    for i in range(m, len(n1)):
        if n1[i] > n2[i]:
            return False
    if c1 < c2:
        return False
    for i in range(m):
        d = n2[i] - n1[i]
        # c1 pi**n1_i >= c2 pi**n2_i  <=>  c1 >= c2 pi**d
        if d and c1 < c2 * pi**d:
            return False
    return True


def dominates_criterion(a: SpecialMonomial, b: SpecialMonomial) -> bool:
    if a.model != b.model:
        raise ValueError("monomials over different model algebras")
    return monomial_dominates(a.valuation(), a.n, b.valuation(), b.n, a.model.pi, a.model.m)


def divides_witness(a: SpecialMonomial, b: SpecialMonomial) -> SpecialMonomial | None:
    """The special monomial ``c`` with ``b = a*c``, or None when ``b`` is not in ``aA``."""
    if a.model != b.model:
        raise ValueError("monomials over different model algebras")
    M = a.model
    n = tuple(y - x for x, y in zip(a.n, b.n))
    if any(x < 0 for x in n[M.m :]):
        return None
    # |b/a| = |b|/|a| holds in the coefficient model, so test before dividing
    if b.valuation() / a.valuation() > M.special_bound(n):
        return None
    return SpecialMonomial(M, n, b.coeff.divide(a.coeff))


def dominating_monomial(a: SpecialPoly) -> Exponent | None:
    """Exponent of the term dominating every other term, if any.

    Mutually dominating terms (possible only when ``pi == 1``) are resolved by
    taking the lexicographically first exponent.
    """
    if not a:
        raise ValueError("zero has no dominating monomial")
    M = a.model
    items = sorted((n, c.valuation()) for n, c in a._terms.items())
    for d, cd in items:
        if all(
            monomial_dominates(cd, d, c, n, M.pi, M.m) for n, c in items if n != d
        ):
            return d
    return None


def is_unit_R(a: SpecialPoly) -> bool:
    """Unit of the local ring at the origin: constant term of value exactly 1."""
    if not a:
        raise ValueError("zero element")
    c = a._terms.get((0,) * a.model.l)
    return c is not None and c.valuation() == ONE


def is_unit_R_eta(a: SpecialPoly) -> bool:
    """Generic unit: a dominating monomial exists and its tail exponents vanish."""
    d = dominating_monomial(a)
    return d is not None and not any(d[a.model.m :])


def factor_generic_unit(a: SpecialPoly) -> tuple[SpecialPoly, Coefficient, tuple[int, ...]]:
    """Write ``a = u * pi' * t_0**n_0 * ... * t_m**n_m`` with ``u`` an R-unit.

    Raises ValueError if ``a`` is not a generic unit and
    CoefficientDivisionError if a termwise quotient leaves the coefficient model.
    """
    M = a.model
    d = dominating_monomial(a)
    if d is None or any(d[M.m :]):
        raise ValueError(f"{a} is not a generic unit")
    head = SpecialMonomial(M, d, a._terms[d])
    c = max([0] + [-x for x in d[: M.m]])
    n = (c,) + tuple(x + c for x in d[: M.m])
    pi_prime = head.coeff.scale((M.pi**c).inverse()) if c else head.coeff
    u_terms: dict[Exponent, Coefficient] = {}
    for mono in a.monomials():
        w = divides_witness(head, mono)
        if w is None:
            raise ValueError(f"dominating term {head} does not divide {mono}")
        u_terms[w.n] = w.coeff
    return SpecialPoly(M, u_terms), pi_prime, n


def recompose(model: ModelAlgebra, u: SpecialPoly, pi_prime: Coefficient, n: Sequence[int]) -> SpecialPoly:
    """``u * pi' * prod_{i<=m} t_i**n_i`` in special form."""
    raw_n = tuple(n) + (0,) * (model.l - model.m)
    return u * to_special(RawPoly(model, {raw_n: pi_prime}))
