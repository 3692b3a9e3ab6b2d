"""Random generators and the property suite behind ``selftest`` and the acceptance tests.

Every check returns a :class:`CheckOutcome` listing counterexamples rather
than raising, so callers can report all discrepancies at once.  Values are
drawn with prime support ``{2, 3, 5}`` and exponent denominators ``<= 6``.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .covering import (
    AnnuliModel,
    CoveringCertificate,
    Interval,
    build_covering,
    certify,
    verify_covering,
)
from .monomial_algebra import (
    Coefficient,
    ModelAlgebra,
    SpecialMonomial,
    SpecialPoly,
    divides_witness,
    dominates_criterion,
    evaluate,
    factor_generic_unit,
    is_unit_R,
    is_unit_R_eta,
    recompose,
)
from .pl_engine import (
    PLFunction,
    PLVerdict,
    Skeleton,
    check_product_power_property,
    pl_geq,
    sample_points,
    vertices,
)
from .errors import InvariantError
from .value_group import ONE, DenominatorCapError, Value, in_r_power_class, max_denominator

PRIMES = (2, 3, 5)
MAX_EXP_DEN = 6
# Sample points pi**(j/8) multiply the denominators of generated values
# (lcm <= 60), and nested lambda splits multiply them again by the
# denominator of each chosen q; the suite therefore runs with a generous cap.
WORKING_DENOMINATOR = 1 << 20
# Simplex budget per certificate in the covering checks.
CHECK_MAX_SIMPLICES = 200_000


# ---------------------------------------------------------------- generators


def random_value(rng: random.Random, *, at_most_one: bool = True, max_num: int = 12) -> Value:
    """Nonzero value over ``{2,3,5}`` with exponent denominators ``<= 6``."""
    while True:
        facs = {}
        for p in PRIMES:
            if rng.random() < 0.6:
                d = rng.randint(1, MAX_EXP_DEN)
                facs[p] = Fraction(rng.randint(-max_num, max_num), d)
        v = Value(facs)
        if at_most_one and v > ONE:
            v = v.inverse()
        return v


def random_small_value(rng: random.Random) -> Value:
    """Value in ``(0, 1)`` with small exponents, for covering models."""
    while True:
        facs = {p: Fraction(rng.randint(-3, 3), rng.randint(1, MAX_EXP_DEN)) for p in PRIMES if rng.random() < 0.5}
        v = Value(facs)
        if v.is_one():
            continue
        return v if v < ONE else v.inverse()


def random_model(rng: random.Random, *, lmax: int = 3) -> ModelAlgebra:
    l = rng.randint(1, lmax)
    m = rng.randint(0, l)
    pi = random_value(rng, max_num=4)
    if pi.is_one():
        pi = Value.from_rational(Fraction(1, 2))
    return ModelAlgebra(l, m, pi)


def random_exponent(rng: random.Random, M: ModelAlgebra, spread: int = 2) -> tuple[int, ...]:
    head = [rng.randint(-spread, spread) for _ in range(M.m)]
    tail = [rng.randint(0, spread) for _ in range(M.l - M.m)]
    return tuple(head + tail)


def random_coefficient(rng: random.Random, bound: Value, *, terms: int = 1) -> Coefficient:
    """Coefficient of valuation ``<= bound``; the leading term sometimes hits the bound."""
    parts = {}
    lead = bound if rng.random() < 0.4 else bound * random_value(rng, max_num=4)
    parts[lead] = Fraction(rng.choice([1, -1, 2, Fraction(1, 3)]))
    for _ in range(terms - 1):
        g = lead * random_value(rng, max_num=4)
        if g != lead:
            parts[g] = parts.get(g, Fraction(0)) + Fraction(rng.randint(1, 5), rng.randint(1, 3))
    return Coefficient({g: c for g, c in parts.items() if c})


def random_monomial(rng: random.Random, M: ModelAlgebra, *, terms: int = 1) -> SpecialMonomial:
    n = random_exponent(rng, M)
    return SpecialMonomial(M, n, random_coefficient(rng, M.special_bound(n), terms=terms))


def random_poly(rng: random.Random, M: ModelAlgebra, *, max_terms: int = 6, coeff_terms: int = 1) -> SpecialPoly:
    """Random special polynomial, biased so that units and generic units are common."""
    k = rng.randint(1, max_terms)
    terms: dict[tuple[int, ...], Coefficient] = {}
    if rng.random() < 0.5:
        zero = (0,) * M.l
        bound = ONE if rng.random() < 0.6 else M.pi
        terms[zero] = random_coefficient(rng, bound, terms=rng.randint(1, coeff_terms))
    for _ in range(4 * k):  # small models have few distinct exponents
        if len(terms) >= k:
            break
        n = random_exponent(rng, M)
        bound = M.special_bound(n)
        if rng.random() < 0.5:
            bound = bound * M.pi  # strictly below the bound: easy to dominate
        terms.setdefault(n, random_coefficient(rng, bound, terms=rng.randint(1, coeff_terms)))
    return SpecialPoly(M, terms)


def random_annuli_model(rng: random.Random, *, mmax: int = 1) -> AnnuliModel:
    m = rng.randint(0, mmax)
    l = m + rng.randint(0, 1)
    pi_0 = random_small_value(rng) if rng.random() < 0.85 else ONE
    pi_1 = random_small_value(rng) if rng.random() < 0.85 else ONE
    r = rng.choice([pi_0, pi_1]) if rng.random() < 0.2 and not (pi_0.is_one() and pi_1.is_one()) else random_small_value(rng)
    if r.is_one():
        r = Value.from_rational(Fraction(1, 2))
    n = tuple(rng.randint(0, 2) for _ in range(m + 1))
    return AnnuliModel(ModelAlgebra(l, m, pi_0), n, pi_1, r)


def draw_within_budget(rng: random.Random, out: CheckOutcome, build: Callable, *, mmax: int = 1):
    """Draw annuli models until ``build(model)`` fits the working budgets.

    A target radius very close to 1 (relative to ``r``) forces a ``q`` with a
    large denominator, and nested splits multiply such denominators; the
    resulting models exceed the exponent-denominator cap or the simplex
    budget.  They are redrawn and tallied in ``out.notes["oversized"]`` so
    callers can bound how often that happens.
    """
    while True:
        model = random_annuli_model(rng, mmax=mmax)
        try:
            return model, build(model)
        except DenominatorCapError:
            pass
        except InvariantError as exc:
            if exc.invariant != "max-simplices":
                raise
        out.notes["oversized"] = out.notes.get("oversized", 0) + 1


# ---------------------------------------------------------------- checks


@dataclass
class CheckOutcome:
    name: str
    trials: int = 0
    failures: list[str] = field(default_factory=list)
    seconds: float = 0.0
    notes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "trials": self.trials,
            "passed": self.passed,
            "failures": self.failures[:20],
            "failure_count": len(self.failures),
            "seconds": round(self.seconds, 3),
            **({"notes": self.notes} if self.notes else {}),
        }


def _timed(name: str):
    def deco(fn: Callable[..., CheckOutcome]):
        def run(*args, **kwargs) -> CheckOutcome:
            t0 = time.perf_counter()
            with max_denominator(WORKING_DENOMINATOR):
                out = fn(CheckOutcome(name), *args, **kwargs)
            out.seconds = time.perf_counter() - t0
            return out

        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run

    return deco


@_timed("domination-equivalence")
def check_domination_equivalence(out: CheckOutcome, rng: random.Random, count: int) -> CheckOutcome:
    """(i) divides_witness present <=> (ii) criterion <=> (iii) vertex PL comparison."""
    for _ in range(count):
        M = random_model(rng)
        a, b = random_monomial(rng, M), random_monomial(rng, M)
        if rng.random() < 0.25:  # force comparable pairs to exercise the positive side
            b = SpecialMonomial(M, a.n, a.coeff)
        i = divides_witness(a, b) is not None
        ii = dominates_criterion(a, b)
        iii = pl_geq(PLFunction.of(a.as_poly()), PLFunction.of(b.as_poly())) is PLVerdict.TRUE
        out.trials += 1
        if not (i == ii == iii):
            out.failures.append(f"{a} vs {b} over {M}: witness={i} criterion={ii} pl={iii}")
    return out


@_timed("unit-coherence")
def check_unit_coherence(out: CheckOutcome, rng: random.Random, count: int, samples: int = 20) -> CheckOutcome:
    """is_unit_R <=> |a_0| = 1 <=> |a| = 1 on vertices and samples; is_unit_R_eta <=> factor roundtrip."""
    units = generic = 0
    for _ in range(count):
        M = random_model(rng)
        a = random_poly(rng, M)
        sk = Skeleton(M)
        u = is_unit_R(a)
        c0 = a.coefficient((0,) * M.l)
        const_one = bool(c0) and c0.valuation() == ONE
        pts = vertices(sk) + sample_points(sk, samples, rng)
        all_one = all(evaluate(a, r) == ONE for r in pts)
        out.trials += 1
        if not (u == const_one == all_one):
            out.failures.append(f"{a}: unit_R={u} |a_0|=1:{const_one} eval==1:{all_one}")
        eta = is_unit_R_eta(a)
        try:
            uu, pp, n = factor_generic_unit(a)
            ok = recompose(M, uu, pp, n) == a and is_unit_R(uu) and pp.valuation() <= ONE and bool(pp)
        except ValueError:
            ok = False
        if eta != ok:
            out.failures.append(f"{a}: unit_R_eta={eta} factor_roundtrip={ok}")
        units += u
        generic += eta
    out.notes = {"unit_R": units, "unit_R_eta": generic}
    return out


@_timed("multiplicativity")
def check_multiplicativity(out: CheckOutcome, rng: random.Random, count: int, points: int = 10) -> CheckOutcome:
    """eval(a*b, r) == eval(a, r) * eval(b, r) exactly, with multi-term coefficients."""
    for _ in range(count):
        M = random_model(rng)
        a = random_poly(rng, M, max_terms=4, coeff_terms=3)
        b = random_poly(rng, M, max_terms=4, coeff_terms=3)
        ab = a * b
        for r in sample_points(Skeleton(M), points, rng):
            out.trials += 1
            if evaluate(ab, r) != evaluate(a, r) * evaluate(b, r):
                out.failures.append(f"({a})*({b}) at {[str(x) for x in r]}")
    return out


@_timed("power-product")
def check_power_product(out: CheckOutcome, rng: random.Random, count: int) -> CheckOutcome:
    """is_power(f*g) <=> is_power(f) and is_power(g)."""
    powers = 0
    for _ in range(count):
        M = random_model(rng)
        f = PLFunction.of(random_poly(rng, M, max_terms=3))
        g = PLFunction.of(random_poly(rng, M, max_terms=3))
        out.trials += 1
        powers += len(f) == 1 and len(g) == 1
        if not check_product_power_property(f, g):
            out.failures.append(f"{f} * {g}")
    out.notes = {"both_power": powers}
    return out


@_timed("split-inequalities")
def check_split_inequalities(out: CheckOutcome, rng: random.Random, count: int, *, mmax: int = 2) -> CheckOutcome:
    """Every split satisfies its overlap inequality; every leaf radius lies in r**Q; coset identity holds."""
    splits = 0
    for _ in range(count):
        model, tree = draw_within_budget(rng, out, build_covering, mmax=mmax)
        out.trials += 1
        for node in tree.walk():
            sp = node.split
            if sp is not None:
                splits += 1
                k = 2 if sp.kind == "fiber" else node.chart.m + 1
                if not sp.s**k > sp.target:
                    out.failures.append(f"{node.id}: s**{k} <= target in {model}")
                for child in node.children:
                    const = child.chart.fiber_const if sp.kind == "fiber" else child.chart.base_const
                    old = in_r_power_class(sp.target, model.r)
                    new = in_r_power_class(const, model.r)
                    if new is None or (old is not None and new != old - sp.q):
                        out.failures.append(f"{child.id}: coset identity fails")
            if node.is_leaf:
                for v in (node.chart.base_const, node.chart.fiber_const):
                    if in_r_power_class(v, model.r) is None:
                        out.failures.append(f"{node.id}: radius {v} not in r**Q")
    out.notes["splits"] = splits
    return out


@_timed("coverage-soundness")
def check_coverage_soundness(out: CheckOutcome, rng: random.Random, count: int) -> CheckOutcome:
    """build -> triangulate -> certify -> verify is valid for random models with m <= 1."""
    triangles = 0
    for _ in range(count):
        model, cert = draw_within_budget(rng, out, lambda m: certify(m, max_simplices=CHECK_MAX_SIMPLICES))
        out.trials += 1
        triangles += cert.triangle_count
        if not cert.verdict.valid:
            out.failures.append(f"{model.to_json()}: failed checks {cert.verdict.failed_ids}")
    out.notes["triangles"] = triangles
    return out


# ---------------------------------------------------------------- mutations


def _sqrt_between(lo: Value, hi: Value) -> Value:
    return (lo * hi) ** Fraction(1, 2)


def mutate_certificate(cert: CoveringCertificate, rng: random.Random) -> tuple[str, int, CoveringCertificate]:
    """Apply one random single-field mutation; return ``(kind, expected check id, mutant)``.

    The mutant shares nothing mutable with ``cert``.
    """
    mutant = CoveringCertificate.from_json(cert.to_json())
    kinds = []
    if any(lf.simplices.shape[0] for lf in mutant.leaves):
        kinds.append("delete-simplex")
    if any(lf.simplices.shape[0] and lf.simplices.shape[1] == 3 for lf in mutant.leaves):
        kinds.append("break-determinant")
    if any(ax.target.lo < ax.target.hi for ax in mutant.axes):
        kinds.append("shrink-interval")
    kind = rng.choice(kinds)
    if kind == "delete-simplex":
        lf = rng.choice([lf for lf in mutant.leaves if lf.simplices.shape[0]])
        k = rng.randrange(lf.simplices.shape[0])
        lf.simplices = lf.simplices[[i for i in range(lf.simplices.shape[0]) if i != k]]
        return kind, 4, mutant
    if kind == "break-determinant":
        lf = rng.choice([lf for lf in mutant.leaves if lf.simplices.shape[0] and lf.simplices.shape[1] == 3])
        k = rng.randrange(lf.simplices.shape[0])
        j = rng.randrange(1, 3)
        tri = lf.simplices[k].copy()
        tri[j] = tri[0] + 2 * (tri[j] - tri[0])  # doubles the determinant
        lf.simplices = lf.simplices.copy()
        lf.simplices[k] = tri
        return kind, 3, mutant
    # shrink the chart interval that reaches the target's lower end
    ax = rng.choice([ax for ax in mutant.axes if ax.target.lo < ax.target.hi])
    idx = next(i for i, (_, iv) in enumerate(ax.charts) if iv.lo == ax.target.lo)
    cid, iv = ax.charts[idx]
    ends = [e for _, other in ax.charts for e in (other.lo, other.hi) if e > iv.lo]
    nxt = _min_value(ends)
    ax.charts[idx] = (cid, Interval(_sqrt_between(iv.lo, nxt), iv.hi))
    return kind, 1, mutant


def _min_value(vals: list[Value]) -> Value:
    best = vals[0]
    for v in vals[1:]:
        if v < best:
            best = v
    return best


@_timed("mutation-robustness")
def check_mutations(out: CheckOutcome, rng: random.Random, count: int) -> CheckOutcome:
    """Every single-field mutation of a valid certificate is rejected with the right check id."""
    kinds: dict[str, int] = {}
    pool: list[CoveringCertificate] = []
    while len(pool) < 8:
        _, cert = draw_within_budget(rng, out, lambda m: certify(m, max_simplices=5000))
        if cert.verdict.valid and cert.triangle_count:
            pool.append(cert)
    for _ in range(count):
        kind, expected, mutant = mutate_certificate(rng.choice(pool), rng)
        kinds[kind] = kinds.get(kind, 0) + 1
        report = verify_covering(mutant)
        out.trials += 1
        if report.valid or expected not in report.failed_ids:
            out.failures.append(f"{kind}: expected check {expected}, got failures {report.failed_ids}")
    out.notes["kinds"] = kinds
    return out


# ---------------------------------------------------------------- value oracle


def _iv_value(v: Value, iv) -> object:
    x = iv.mpf(1)
    for p, e in v.factors.items():
        x = x * iv.mpf(p) ** (iv.mpf(e.numerator) / e.denominator)
    return x


@_timed("value-oracle")
def check_value_oracle(out: CheckOutcome, rng: random.Random, count: int, *, bits: int = 256) -> CheckOutcome:
    """cmp agrees with interval arithmetic at ``bits`` precision whenever the enclosures separate."""
    import mpmath

    iv = mpmath.iv
    undecided = 0
    old = iv.prec
    iv.prec = bits
    try:
        for _ in range(count):
            v = random_value(rng, at_most_one=False)
            w = v * random_value(rng, at_most_one=False, max_num=2) if rng.random() < 0.3 else random_value(rng, at_most_one=False)
            c = v._cmp(w)
            a, b = _iv_value(v, iv), _iv_value(w, iv)
            out.trials += 1
            if a.b < b.a:
                est = -1
            elif a.a > b.b:
                est = 1
            else:
                undecided += 1
                if c != 0 and a.a == a.b == b.a == b.b:
                    out.failures.append(f"{v} vs {w}: exact {c}, degenerate enclosure says equal")
                continue
            if est != c:
                out.failures.append(f"{v} vs {w}: exact {c}, interval {est}")
    finally:
        iv.prec = old
    out.notes = {"undecided": undecided}
    return out


@_timed("r-power-grid")
def check_r_power_grid(out: CheckOutcome, rng: random.Random, radii: int = 20, max_den: int = 12, max_num: int = 24) -> CheckOutcome:
    """in_r_power_class(r**q, r) == q for every q with denominator <= max_den on a grid."""
    rs = [Value.from_rational(Fraction(1, 2)), Value.from_rational(Fraction(2, 3))]
    while len(rs) < radii:
        r = random_value(rng)
        if not r.is_one():
            rs.append(r)
    qs = sorted({Fraction(p, d) for d in range(1, max_den + 1) for p in range(-max_num, max_num + 1)})
    for r in rs:
        for q in qs:
            out.trials += 1
            got = in_r_power_class(r**q, r)
            if got != q:
                out.failures.append(f"r={r}, q={q}: got {got}")
        # off-class values are rejected
        other = r * Value({7: Fraction(1, 2)})
        if in_r_power_class(other, r) is not None:
            out.failures.append(f"{other} wrongly placed in {r}**Q")
    return out


# ---------------------------------------------------------------- suite


def run_suite(seed: int = 0, scale: float = 1.0) -> list[CheckOutcome]:
    """The full invariant suite at ``scale`` times the default trial counts."""

    def n(k: int) -> int:
        return max(1, math.ceil(k * scale))

    rng = random.Random(seed)
    return [
        check_domination_equivalence(random.Random(rng.random()), n(1000)),
        check_unit_coherence(random.Random(rng.random()), n(1000)),
        check_multiplicativity(random.Random(rng.random()), n(100)),
        check_power_product(random.Random(rng.random()), n(1000)),
        check_split_inequalities(random.Random(rng.random()), n(200)),
        check_coverage_soundness(random.Random(rng.random()), n(100)),
        check_mutations(random.Random(rng.random()), n(100)),
        check_value_oracle(random.Random(rng.random()), n(2000)),
        check_r_power_grid(random.Random(rng.random()), radii=n(5)),
    ]


__all__ = [
    "CheckOutcome",
    "random_value",
    "random_model",
    "random_monomial",
    "random_poly",
    "random_annuli_model",
    "mutate_certificate",
    "check_domination_equivalence",
    "check_unit_coherence",
    "check_multiplicativity",
    "check_power_product",
    "check_split_inequalities",
    "check_coverage_soundness",
    "check_mutations",
    "check_value_oracle",
    "check_r_power_grid",
    "draw_within_budget",
    "run_suite",
]
