"""Exact arithmetic on rational-power absolute values.

A :class:`Value` is either zero or a finite product ``prod p**e_p`` over
primes ``p`` with rational exponents ``e_p``.  Internally the exponents are
kept as integer numerators over one shared positive denominator, reduced so
that the representation is canonical.  Every comparison is decided with
big-integer arithmetic; floats appear only in display helpers.
"""

from __future__ import annotations

import contextlib
import contextvars
import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Mapping, Union

from .errors import InvariantError

__all__ = [
    "Value",
    "LogValue",
    "ONE",
    "ZERO",
    "DenominatorCapError",
    "cmp",
    "in_r_power_class",
    "get_max_denominator",
    "max_denominator",
    "set_max_denominator",
]

Rational = Union[int, Fraction]

DEFAULT_MAX_DENOMINATOR = 64
_max_den: contextvars.ContextVar[int] = contextvars.ContextVar(
    "ss_skeleton_max_denominator", default=DEFAULT_MAX_DENOMINATOR
)


class DenominatorCapError(ArithmeticError):
    """An exponent denominator exceeded the configured cap."""


def get_max_denominator() -> int:
    return _max_den.get()


def set_max_denominator(n: int) -> None:
    if n < 1:
        raise ValueError("max denominator must be positive")
    _max_den.set(int(n))


@contextlib.contextmanager
def max_denominator(n: int) -> Iterator[None]:
    """Temporarily change the exponent denominator cap."""
    if n < 1:
        raise ValueError("max denominator must be positive")
    token = _max_den.set(int(n))
    try:
        yield
    finally:
        _max_den.reset(token)


# Radii in practice are small rationals; trial division by primes below
# _TRIAL_LIMIT settles them without importing sympy (a noticeable share of
# CLI start-up time).  Anything larger is handed to sympy.
_TRIAL_LIMIT = 1000
_SMALL_PRIMES = tuple(p for p in range(2, _TRIAL_LIMIT) if all(p % d for d in range(2, math.isqrt(p) + 1)))


@lru_cache(maxsize=4096)
def _is_prime(p: int) -> bool:
    if p < _TRIAL_LIMIT**2:
        return p > 1 and all(p % d for d in _SMALL_PRIMES if d * d <= p)
    from sympy import isprime

    return bool(isprime(p))


@lru_cache(maxsize=4096)
def _factor(n: int) -> tuple[tuple[int, int], ...]:
    found: dict[int, int] = {}
    for p in _SMALL_PRIMES:
        if p * p > n:
            break
        while n % p == 0:
            found[p] = found.get(p, 0) + 1
            n //= p
    if n >= _TRIAL_LIMIT**2:
        from sympy import factorint

        for p, k in factorint(n).items():
            found[p] = found.get(p, 0) + k
    elif n > 1:
        found[n] = found.get(n, 0) + 1
    return tuple(sorted(found.items()))


def _canon(den: int, exps: dict[int, int]) -> tuple[int, tuple[tuple[int, int], ...]]:
    items = tuple(sorted((p, k) for p, k in exps.items() if k))
    g = den
    for _, k in items:
        g = math.gcd(g, k)
        if g == 1:
            break
    if g > 1:
        den //= g
        items = tuple((p, k // g) for p, k in items)
    if not items:
        den = 1
    cap = _max_den.get()
    if den > cap:
        raise DenominatorCapError(
            f"exponent denominator {den} exceeds cap {cap}; raise --max-denominator"
        )
    return den, items


class Value:
    """A nonnegative real of the form ``prod p**e_p`` (or zero)."""

    __slots__ = ("_den", "_exps", "_zero", "_hash")

    def __init__(self, factors: Mapping[int, Rational] | None = None, *, zero: bool = False):
        self._hash = None
        if zero:
            if factors:
                raise ValueError("zero Value takes no factors")
            self._zero = True
            self._den = 1
            self._exps: tuple[tuple[int, int], ...] = ()
            return
        self._zero = False
        fr: dict[int, Fraction] = {}
        for p, e in (factors or {}).items():
            p = int(p)
            if p < 2 or not _is_prime(p):
                raise InvariantError("prime-keys", f"Value factor key {p} is not a prime")
            e = Fraction(e)
            if e:
                fr[p] = e
        den = 1
        for e in fr.values():
            den = den * e.denominator // math.gcd(den, e.denominator)
        self._den, self._exps = _canon(den, {p: int(e * den) for p, e in fr.items()})

    @classmethod
    def _raw(cls, den: int, exps: dict[int, int]) -> "Value":
        v = object.__new__(cls)
        v._zero = False
        v._hash = None
        v._den, v._exps = _canon(den, exps)
        return v

    @classmethod
    def zero(cls) -> "Value":
        return ZERO

    @classmethod
    def from_rational(cls, x: Rational | str) -> "Value":
        """Factor a nonnegative rational into a Value."""
        x = Fraction(x)
        if x < 0:
            raise ValueError("absolute values are nonnegative")
        if x == 0:
            return ZERO
        exps: dict[int, int] = {}
        for p, k in _factor(x.numerator):
            exps[p] = exps.get(p, 0) + k
        for p, k in _factor(x.denominator):
            exps[p] = exps.get(p, 0) - k
        return cls._raw(1, exps)

    # -- accessors -------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self._zero

    @property
    def factors(self) -> dict[int, Fraction]:
        return {p: Fraction(k, self._den) for p, k in self._exps}

    @property
    def denominator(self) -> int:
        """Common denominator of the exponents."""
        return self._den

    def is_one(self) -> bool:
        return not self._zero and not self._exps

    def as_rational(self) -> Fraction | None:
        """The value as a rational number, when all exponents are integral."""
        if self._zero:
            return Fraction(0)
        if self._den != 1:
            return None
        num = den = 1
        for p, k in self._exps:
            if k > 0:
                num *= p**k
            else:
                den *= p ** (-k)
        return Fraction(num, den)

    def log(self) -> "LogValue":
        if self._zero:
            raise ValueError("log of zero")
        return LogValue._raw(self._den, dict(self._exps))

    def __float__(self) -> float:
        if self._zero:
            return 0.0
        return math.exp(self.log_float())

    def log_float(self) -> float:
        if self._zero:
            return -math.inf
        return sum(k * math.log(p) for p, k in self._exps) / self._den

    # -- arithmetic ------------------------------------------------------

    def __mul__(self, other: "Value") -> "Value":
        if not isinstance(other, Value):
            return NotImplemented
        if self._zero or other._zero:
            return ZERO
        if not other._exps:
            return self
        if not self._exps:
            return other
        d1, d2 = self._den, other._den
        g = math.gcd(d1, d2)
        den = d1 // g * d2
        f1, f2 = den // d1, den // d2
        exps = {p: k * f1 for p, k in self._exps}
        for p, k in other._exps:
            exps[p] = exps.get(p, 0) + k * f2
        return Value._raw(den, exps)

    def inverse(self) -> "Value":
        if self._zero:
            raise ZeroDivisionError("inverse of zero Value")
        v = object.__new__(Value)
        v._zero = False
        v._hash = None
        v._den = self._den
        v._exps = tuple((p, -k) for p, k in self._exps)
        return v

    def __truediv__(self, other: "Value") -> "Value":
        if not isinstance(other, Value):
            return NotImplemented
        return self * other.inverse()

    def __pow__(self, q: Rational) -> "Value":
        q = Fraction(q)
        if self._zero:
            if q <= 0:
                raise ValueError("Zero ** q requires q > 0")
            return ZERO
        if q == 0 or not self._exps:
            return ONE
        return Value._raw(
            self._den * q.denominator, {p: k * q.numerator for p, k in self._exps}
        )

    # -- order -----------------------------------------------------------

    def _cmp(self, other: "Value") -> int:
        if self._zero or other._zero:
            return (not self._zero) - (not other._zero)
        if self._exps == other._exps and self._den == other._den:
            return 0
        d1, d2 = self._den, other._den
        g = math.gcd(d1, d2)
        f1, f2 = d2 // g, d1 // g
        diff: dict[int, int] = {p: k * f1 for p, k in self._exps}
        for p, k in other._exps:
            diff[p] = diff.get(p, 0) - k * f2
        # self/other = prod p**(diff_p / D); compare prod over positive vs negative sides
        left = right = 1
        for p, k in diff.items():
            if k > 0:
                left *= p**k
            elif k < 0:
                right *= p ** (-k)
        return (left > right) - (left < right)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Value):
            return NotImplemented
        return self._zero == other._zero and self._den == other._den and self._exps == other._exps

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self._zero, self._den, self._exps))
        return self._hash

    def __lt__(self, other: "Value") -> bool:
        return self._cmp(other) < 0

    def __le__(self, other: "Value") -> bool:
        return self._cmp(other) <= 0

    def __gt__(self, other: "Value") -> bool:
        return self._cmp(other) > 0

    def __ge__(self, other: "Value") -> bool:
        return self._cmp(other) >= 0

    # -- display / serialization ----------------------------------------

    def __repr__(self) -> str:
        return f"Value({self})"

    def __str__(self) -> str:
        if self._zero:
            return "0"
        q = self.as_rational()
        if q is not None:
            return str(q)
        parts = []
        for p, e in self.factors.items():
            parts.append(f"{p}^{e}" if e.denominator == 1 else f"{p}^({e})")
        return "*".join(parts)

    def to_json(self) -> dict:
        if self._zero:
            return {"zero": True}
        return {"factors": {str(p): str(e) for p, e in self.factors.items()}}

    @classmethod
    def from_json(cls, obj) -> "Value":
        """Parse ``{"zero": true}``, ``{"factors": {...}}`` or a rational string."""
        if isinstance(obj, (int, str)) and not isinstance(obj, bool):
            try:
                return cls.from_rational(Fraction(obj))
            except (ValueError, ZeroDivisionError) as exc:
                raise InvariantError("value-json", f"bad rational {obj!r}") from exc
        if not isinstance(obj, dict):
            raise InvariantError("value-json", f"expected a Value object, got {obj!r}")
        if obj.get("zero") is True:
            return ZERO
        facs = obj.get("factors")
        if not isinstance(facs, dict):
            raise InvariantError("value-json", "Value needs 'zero' or 'factors'")
        try:
            return cls({int(p): Fraction(e) for p, e in facs.items()})
        except InvariantError:
            raise
        except (ValueError, ZeroDivisionError) as exc:
            raise InvariantError("value-json", f"bad factor map {facs!r}") from exc


class LogValue:
    """Additive mirror of a nonzero :class:`Value`: ``sum e_p * log p``."""

    __slots__ = ("_den", "_exps")

    def __init__(self, coeffs: Mapping[int, Rational] | None = None):
        v = Value(coeffs or {})
        self._den, self._exps = v._den, v._exps

    @classmethod
    def _raw(cls, den: int, exps: dict[int, int]) -> "LogValue":
        lv = object.__new__(cls)
        lv._den, lv._exps = _canon(den, exps)
        return lv

    def exp(self) -> Value:
        return Value._raw(self._den, dict(self._exps))

    @property
    def coefficients(self) -> dict[int, Fraction]:
        return {p: Fraction(k, self._den) for p, k in self._exps}

    def __add__(self, other: "LogValue") -> "LogValue":
        return (self.exp() * other.exp()).log()

    def __sub__(self, other: "LogValue") -> "LogValue":
        return (self.exp() / other.exp()).log()

    def __neg__(self) -> "LogValue":
        return self.exp().inverse().log()

    def __mul__(self, q: Rational) -> "LogValue":
        return (self.exp() ** q).log()

    __rmul__ = __mul__

    def sign(self) -> int:
        return self.exp()._cmp(ONE)

    def ratio(self, other: "LogValue") -> Fraction | None:
        """``self / other`` when the two are rationally proportional."""
        return in_r_power_class(self.exp(), other.exp())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LogValue):
            return NotImplemented
        return self._den == other._den and self._exps == other._exps

    def __hash__(self) -> int:
        return hash(("log", self._den, self._exps))

    def __lt__(self, other: "LogValue") -> bool:
        return self.exp() < other.exp()

    def __le__(self, other: "LogValue") -> bool:
        return self.exp() <= other.exp()

    def __float__(self) -> float:
        return self.exp().log_float()

    def __repr__(self) -> str:
        terms = [f"{e}*log({p})" for p, e in self.coefficients.items()]
        return f"LogValue({' + '.join(terms) or '0'})"

    def to_json(self) -> dict:
        return {"log_factors": {str(p): str(e) for p, e in self.coefficients.items()}}

    @classmethod
    def from_json(cls, obj) -> "LogValue":
        facs = obj.get("log_factors") if isinstance(obj, dict) else None
        if not isinstance(facs, dict):
            raise InvariantError("value-json", "LogValue needs 'log_factors'")
        return cls({int(p): Fraction(e) for p, e in facs.items()})


ZERO = Value(zero=True)
ONE = Value()


def cmp(v: Value, w: Value) -> str:
    """Exact order of two values: ``"less"``, ``"equal"`` or ``"greater"``."""
    return ("less", "equal", "greater")[v._cmp(w) + 1]


def in_r_power_class(v: Value, r: Value) -> Fraction | None:
    """Return ``q`` with ``v == r**q``, or None when ``v`` is not in ``r**Q``.

    Prime factorizations are multiplicatively independent, so membership is
    a proportionality test between exponent vectors.
    """
    if v.is_zero or r.is_zero:
        raise ValueError("r-power class is defined for nonzero values only")
    if r.is_one():
        raise ValueError("r = 1 gives a degenerate power class")
    if v.is_one():
        return Fraction(0)
    rv = dict(r._exps)
    vv = dict(v._exps)
    if rv.keys() != vv.keys():
        return None
    p0 = next(iter(rv))
    q = Fraction(vv[p0] * r._den, rv[p0] * v._den)
    for p, k in vv.items():
        if Fraction(k, v._den) != q * Fraction(rv[p], r._den):
            return None
    return q
