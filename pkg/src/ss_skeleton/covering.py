"""Chart splitting for products of annuli over a toric base, and covering certificates.

The model is ``B = k°[t_0..t_l]/(t_0...t_m - pi_0)`` with
``A = B[x_0, x_1]/(x_0 x_1 - pi_1 t_0^n_0 ... t_m^n_m)``.  Constants that are
not in ``r**Q`` are moved into it by substituting ``t_i -> t_i/lambda``
(base split) or ``x_i -> x_i/lambda`` (fiber split), with ``|lambda|`` picked
deterministically in an open interval.  Leaves with both radii in ``r**Q``
and a skeleton of dimension at most two are triangulated by unimodular
lattice triangles.

Coordinates on a leaf skeleton are ``u = log|.| / log r`` (positive towards
the boundary ``|.| -> 0``), so leaf corners are rational.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from . import __version__, _kernels
from .errors import InvariantError
from .monomial_algebra import ModelAlgebra
from .value_group import ONE, LogValue, Value, in_r_power_class, max_denominator

log = logging.getLogger(__name__)

CERT_FORMAT = "ss-skeleton/covering-certificate"
CERT_VERSION = 1

_SEARCH_DENOMINATOR_CAP = 10**9
# Default budget for one certificate: about 50 MB of int64 vertex data.
DEFAULT_MAX_SIMPLICES = 1_000_000

__all__ = [
    "DEFAULT_MAX_SIMPLICES",
    "AnnuliModel",
    "Chart",
    "ChartNode",
    "NodeKind",
    "Split",
    "LeafRegion",
    "Triangle",
    "Interval",
    "AxisRecord",
    "LeafCertificate",
    "CoveringCertificate",
    "CheckResult",
    "Report",
    "choose_lambda",
    "split_base",
    "split_fiber",
    "build_covering",
    "leaf_skeleton",
    "leaf_region",
    "triangulate_leaf",
    "certify",
    "verify_covering",
]


# ---------------------------------------------------------------- model data


@dataclass(frozen=True)
class AnnuliModel:
    base: ModelAlgebra
    n: tuple[int, ...]
    pi_1: Value
    r: Value
    e_fiber: Fraction = Fraction(1, 2)
    e_base: Fraction | None = None  # default 1/(m+1), or 1/2 when m == 0

    def __post_init__(self):
        m = self.base.m
        object.__setattr__(self, "n", tuple(int(x) for x in self.n))
        if len(self.n) != m + 1 or any(x < 0 for x in self.n):
            raise InvariantError("fiber-exponents", f"need m+1={m + 1} nonnegative exponents, got {self.n}")
        if self.pi_1.is_zero or self.pi_1 > ONE:
            raise InvariantError("fiber-pi", f"pi_1 must satisfy 0 < pi_1 <= 1, got {self.pi_1}")
        if self.r.is_zero or not self.r < ONE:
            raise InvariantError("reference-radius", f"r must lie in (0, 1), got {self.r}")
        object.__setattr__(self, "e_fiber", Fraction(self.e_fiber))
        e_base = Fraction(1, max(m + 1, 2)) if self.e_base is None else Fraction(self.e_base)
        object.__setattr__(self, "e_base", e_base)
        for e in (self.e_fiber, e_base):
            if not 0 < e < 1:
                raise InvariantError("split-exponent", f"split exponent {e} must lie in (0, 1)")

    @property
    def pi_0(self) -> Value:
        return self.base.pi

    @property
    def m(self) -> int:
        return self.base.m

    def to_json(self) -> dict:
        return {
            "base": self.base.to_json(),
            "n": list(self.n),
            "pi_1": self.pi_1.to_json(),
            "r": self.r.to_json(),
            "e_fiber": str(self.e_fiber),
            "e_base": str(self.e_base),
        }

    @classmethod
    def from_json(cls, obj) -> "AnnuliModel":
        try:
            return cls(
                base=ModelAlgebra.from_json(obj["base"]),
                n=tuple(obj["n"]),
                pi_1=Value.from_json(obj["pi_1"]),
                r=Value.from_json(obj["r"]),
                e_fiber=Fraction(obj.get("e_fiber", "1/2")),
                e_base=Fraction(obj["e_base"]) if obj.get("e_base") is not None else None,
            )
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            if isinstance(exc, InvariantError):
                raise
            raise InvariantError("model-json", f"bad annuli model: {exc}") from exc


@dataclass(frozen=True)
class Chart:
    """Local data ``t_0...t_m = base_const``, ``x_0 x_1 = fiber_const * t^n``."""

    m: int
    base_const: Value
    fiber_const: Value
    n: tuple[int, ...]


@dataclass(frozen=True)
class Split:
    kind: str  # "base" or "fiber"
    target: Value
    e: Fraction
    s: Value
    q: Fraction

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "target": self.target.to_json(),
            "e": str(self.e),
            "s": self.s.to_json(),
            "q": str(self.q),
        }

    @classmethod
    def from_json(cls, obj) -> "Split":
        return cls(obj["kind"], Value.from_json(obj["target"]), Fraction(obj["e"]),
                   Value.from_json(obj["s"]), Fraction(obj["q"]))


class NodeKind(str, enum.Enum):
    BASE_SPLIT = "BaseSplit"
    FIBER_SPLIT = "FiberSplit"
    TORIC_LEAF = "ToricLeaf"
    UNRESOLVED_LEAF = "UnresolvedLeaf"


@dataclass
class ChartNode:
    id: str
    kind: NodeKind
    chart: Chart
    variable: str | None = None  # substituted variable relative to the parent
    split: Split | None = None
    children: list["ChartNode"] = field(default_factory=list)
    a: Fraction | None = None  # r-exponent of the base constant (leaves)
    b: Fraction | None = None  # r-exponent of the fiber constant (leaves)

    @property
    def is_leaf(self) -> bool:
        return self.kind in (NodeKind.TORIC_LEAF, NodeKind.UNRESOLVED_LEAF)

    def walk(self) -> Iterator["ChartNode"]:
        yield self
        for c in self.children:
            yield from c.walk()

    def leaves(self) -> list["ChartNode"]:
        return [n for n in self.walk() if n.is_leaf]

    def find(self, node_id: str) -> "ChartNode":
        for n in self.walk():
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def path(self, node_id: str) -> list["ChartNode"]:
        if self.id == node_id:
            return [self]
        for c in self.children:
            p = c.path(node_id)
            if p:
                return [self] + p
        return []

    def to_json(self) -> dict:
        out: dict = {
            "id": self.id,
            "kind": self.kind.value,
            "chart": {
                "m": self.chart.m,
                "base_const": self.chart.base_const.to_json(),
                "fiber_const": self.chart.fiber_const.to_json(),
                "n": list(self.chart.n),
            },
        }
        if self.variable is not None:
            out["variable"] = self.variable
        if self.split is not None:
            out["split"] = self.split.to_json()
        if self.is_leaf:
            out["a"] = str(self.a)
            out["b"] = str(self.b)
        if self.children:
            out["children"] = [c.to_json() for c in self.children]
        return out

    @classmethod
    def from_json(cls, obj) -> "ChartNode":
        ch = obj["chart"]
        chart = Chart(int(ch["m"]), Value.from_json(ch["base_const"]),
                      Value.from_json(ch["fiber_const"]), tuple(int(x) for x in ch["n"]))
        return cls(
            id=str(obj["id"]),
            kind=NodeKind(obj["kind"]),
            chart=chart,
            variable=obj.get("variable"),
            split=Split.from_json(obj["split"]) if "split" in obj else None,
            children=[cls.from_json(c) for c in obj.get("children", [])],
            a=Fraction(obj["a"]) if "a" in obj else None,
            b=Fraction(obj["b"]) if "b" in obj else None,
        )


# ---------------------------------------------------------------- lambda choice


def choose_lambda(r_t: Value, e: Fraction, r: Value) -> tuple[Value, Fraction]:
    """Pick ``s = r_t * r**q`` with ``r_t**e < s < 1``.

    ``q`` is the simplest rational (smallest denominator, then smallest
    numerator) in the admissible open interval, found by a Stern-Brocot
    descent with batched runs.  Every probe is an exact value comparison.
    """
    e = Fraction(e)
    if not 0 < e < 1:
        raise InvariantError("split-exponent", f"exponent bound {e} must lie in (0, 1)")
    if r_t.is_zero or not r_t < ONE:
        raise InvariantError("split-target", f"target {r_t} must lie in (0, 1)")
    if r.is_zero or not r < ONE:
        raise InvariantError("reference-radius", f"r must lie in (0, 1), got {r}")

    # with x = -q the constraints read (1-e) u < x < u, u = log_r(r_t) > 0
    with max_denominator(_SEARCH_DENOMINATOR_CAP):
        floor = r_t**e

        def s_of(x: Fraction) -> Value:
            return r_t * r ** (-x)

        def too_small(num: int, den: int) -> bool:
            return s_of(Fraction(num, den)) <= floor

        def too_big(num: int, den: int) -> bool:
            return s_of(Fraction(num, den)) >= ONE

        a, b, c, d = 0, 1, 1, 0  # lower a/b, upper c/d
        for _ in range(10_000):
            mn, md = a + c, b + d
            if too_small(mn, md):
                k = _run_length(lambda k: too_small(a + k * c, b + k * d))
                a, b = a + k * c, b + k * d
            elif too_big(mn, md):
                k = _run_length(lambda k: too_big(c + k * a, d + k * b))
                c, d = c + k * a, d + k * b
            else:
                x = Fraction(mn, md)
                break
        else:  # pragma: no cover - interval is nonempty and open
            raise RuntimeError("Stern-Brocot search did not terminate")
    q = -x
    s = r_t * r**q  # re-evaluated under the caller's denominator cap
    if not (floor < s < ONE):  # pragma: no cover - guaranteed by the search
        raise AssertionError("lambda outside the admissible interval")
    return s, q


def _run_length(pred) -> int:
    """Largest ``k >= 1`` with ``pred(k)`` true, given ``pred(1)`` and monotonicity."""
    lo, hi = 1, 2
    while pred(hi):
        lo, hi = hi, hi * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------- splits


def split_base(node: ChartNode, model: AnnuliModel) -> ChartNode:
    """Turn ``node`` into a base split with ``m+1`` children ``t'_i = t_i/lambda``."""
    ch = node.chart
    s, q = choose_lambda(ch.base_const, model.e_base, model.r)
    if not s ** (ch.m + 1) > ch.base_const:  # pragma: no cover
        raise AssertionError("base split overlap inequality failed")
    node.kind = NodeKind.BASE_SPLIT
    node.split = Split("base", ch.base_const, model.e_base, s, q)
    node.children = [
        ChartNode(
            id=f"{node.id}.b{i}",
            kind=NodeKind.TORIC_LEAF,
            chart=Chart(ch.m, ch.base_const / s, ch.fiber_const * s ** ch.n[i], ch.n),
            variable=f"t'_{i}",
        )
        for i in range(ch.m + 1)
    ]
    return node


def split_fiber(node: ChartNode, model: AnnuliModel) -> ChartNode:
    """Turn ``node`` into a fiber split with children ``x'_0``, ``x'_1``."""
    ch = node.chart
    s, q = choose_lambda(ch.fiber_const, model.e_fiber, model.r)
    if not s * s > ch.fiber_const:  # pragma: no cover
        raise AssertionError("fiber split overlap inequality failed")
    node.kind = NodeKind.FIBER_SPLIT
    node.split = Split("fiber", ch.fiber_const, model.e_fiber, s, q)
    node.children = [
        ChartNode(
            id=f"{node.id}.f{j}",
            kind=NodeKind.TORIC_LEAF,
            chart=Chart(ch.m, ch.base_const, ch.fiber_const / s, ch.n),
            variable=f"x'_{j}",
        )
        for j in range(2)
    ]
    return node


def _r_class(v: Value, r: Value) -> Fraction | None:
    return in_r_power_class(v, r)


def build_covering(model: AnnuliModel) -> ChartNode:
    """Chart tree: base split if ``pi_0`` is off ``r**Q``, then fiber splits where needed.

    The proof always splits; a split is skipped here when its constant is
    already in ``r**Q``, which keeps certificates small and changes nothing
    else.
    """
    r = model.r
    root = ChartNode("root", NodeKind.TORIC_LEAF, Chart(model.m, model.pi_0, model.pi_1, model.n))
    charts = [root]
    if _r_class(model.pi_0, r) is None:
        charts = split_base(root, model).children
    for ch in charts:
        targets = [ch]
        if _r_class(ch.chart.fiber_const, r) is None:
            targets = split_fiber(ch, model).children
        for leaf in targets:
            leaf.a = _r_class(leaf.chart.base_const, r)
            leaf.b = _r_class(leaf.chart.fiber_const, r)
            if leaf.a is None or leaf.b is None:  # pragma: no cover
                raise AssertionError("leaf radius outside r**Q")
            leaf.kind = NodeKind.TORIC_LEAF if model.m <= 1 else NodeKind.UNRESOLVED_LEAF
    return root


# ---------------------------------------------------------------- leaf geometry


@dataclass(frozen=True)
class LeafRegion:
    """``0 <= x <= width, 0 <= y <= h_left + (h_right - h_left) x / width`` in log_r units."""

    width: Fraction
    h_left: Fraction
    h_right: Fraction

    def __post_init__(self):
        if self.width < 0 or self.h_left < 0 or self.h_right < 0:
            raise ValueError("leaf region needs nonnegative extents")
        if self.width == 0 and self.h_left != self.h_right:
            raise ValueError("a zero-width region has a single height")

    @property
    def scale(self) -> int:
        return math.lcm(self.width.denominator, self.h_left.denominator, self.h_right.denominator)

    @property
    def dim(self) -> int:
        if self.width > 0:
            return 2 if max(self.h_left, self.h_right) > 0 else 1
        return 1 if self.h_left > 0 else 0

    @property
    def measure(self) -> Fraction:
        """Area (dim 2), length (dim 1), or 1 (a point)."""
        if self.dim == 2:
            return self.width * (self.h_left + self.h_right) / 2
        if self.dim == 1:
            return self.width or self.h_left
        return Fraction(1)

    def simplex_count(self, N: int | None = None) -> int:
        """Number of simplices of the staircase triangulation on ``(1/N) Z^2``."""
        N = N or self.scale
        if self.dim == 2:
            return int(2 * self.measure * N * N)
        if self.dim == 1:
            return int(self.measure * N)
        return 0

    def slope(self) -> int:
        if self.width == 0:
            return 0
        sl = (self.h_right - self.h_left) / self.width
        if sl.denominator != 1:
            raise ValueError("leaf top edge must have integer slope")
        return int(sl)

    def scaled(self, N: int | None = None) -> tuple[int, int, int]:
        """``(W, HL, slope)`` on the lattice ``(1/N) Z^2``."""
        N = N or self.scale
        W, HL = self.width * N, self.h_left * N
        if W.denominator != 1 or HL.denominator != 1:
            raise ValueError(f"scale {N} does not clear the region denominators")
        return int(W), int(HL), self.slope()

    def to_json(self) -> dict:
        return {"width": str(self.width), "h_left": str(self.h_left), "h_right": str(self.h_right)}


def leaf_region(m: int, a: Fraction, b: Fraction, n: Sequence[int]) -> LeafRegion:
    """Skeleton of a leaf chart: base length ``a``, fiber height ``b + n.u(t)``."""
    if m == 0:
        h = b + n[0] * a
        return LeafRegion(Fraction(0), h, h)
    if m == 1:
        return LeafRegion(a, b + n[0] * a, b + n[1] * a)
    raise ValueError("leaf regions are implemented for m <= 1 only")


@dataclass(frozen=True)
class Triangle:
    vertices: tuple[tuple[Fraction, Fraction], ...]
    N: int

    def scaled(self) -> list[tuple[int, int]]:
        out = []
        for x, y in self.vertices:
            X, Y = x * self.N, y * self.N
            if X.denominator != 1 or Y.denominator != 1:
                raise ValueError("vertex is off the 1/N lattice")
            out.append((int(X), int(Y)))
        return out

    def is_unimodular(self) -> bool:
        (x0, y0), (x1, y1), (x2, y2) = self.scaled()
        return abs((x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)) == 1

    def area(self) -> Fraction:
        (x0, y0), (x1, y1), (x2, y2) = self.vertices
        return abs((x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)) / 2


def _to_triangles(arr: np.ndarray, N: int) -> list[Triangle]:
    return [
        Triangle(tuple((Fraction(int(x), N), Fraction(int(y), N)) for x, y in t), N)
        for t in arr
    ]


def triangulate_leaf(a: Fraction, b: Fraction, n: Sequence[int] = (0, 0)) -> list[Triangle]:
    """Staircase triangulation of the ``a x b`` leaf (trapezoid when ``n != 0``).

    With ``N`` the lcm of the denominators every triangle has legs ``1/N``
    and determinant ``+-1`` at scale ``N``.
    """
    a, b = Fraction(a), Fraction(b)
    if a <= 0 or b <= 0:
        raise InvariantError("leaf-sides", f"leaf sides must be positive, got a={a}, b={b}")
    region = leaf_region(1, a, b, n)
    N = region.scale
    return _to_triangles(_kernels.staircase(*region.scaled(N)), N)


def _segments(region: LeafRegion, N: int) -> np.ndarray:
    """Unit lattice segments, ``(S, 2, 2)``, along the region's single axis."""
    if region.dim != 1:
        return np.zeros((0, 2, 2), dtype=np.int64)
    L = int((region.width or region.h_left) * N)
    k = np.arange(L, dtype=np.int64)
    z = np.zeros(L, dtype=np.int64)
    if region.width > 0:
        return np.stack([np.stack([k, z], 1), np.stack([k + 1, z], 1)], axis=1)
    return np.stack([np.stack([z, k], 1), np.stack([z, k + 1], 1)], axis=1)


# ---------------------------------------------------------------- intervals


@dataclass(frozen=True)
class Interval:
    lo: Value
    hi: Value

    def is_empty(self) -> bool:
        return self.lo > self.hi

    def to_json(self) -> list:
        return [self.lo.to_json(), self.hi.to_json()]

    @classmethod
    def from_json(cls, obj) -> "Interval":
        lo, hi = obj
        return cls(Value.from_json(lo), Value.from_json(hi))

    def __str__(self) -> str:
        return f"[{self.lo}, {self.hi}]"


def _fiber_floor(model: AnnuliModel, corner: Value | None) -> Value:
    """``|pi_1 t^n|`` at a base point given by ``|t_1|`` (``m == 1``) or the base point (``m == 0``)."""
    F = model.pi_1
    if model.m == 0:
        return F * model.pi_0 ** model.n[0] if model.n[0] else F
    t1 = corner
    t0 = model.pi_0 / t1
    if model.n[0]:
        F = F * t0 ** model.n[0]
    if model.n[1]:
        F = F * t1 ** model.n[1]
    return F


def _base_interval(model: AnnuliModel, tree: ChartNode, base_node: ChartNode) -> Interval:
    """Range of ``|t_1|`` (``m == 1``) or ``|t_0|`` (``m == 0``) covered by a base chart."""
    p0 = model.pi_0
    if base_node is tree:
        return Interval(p0, ONE) if model.m == 1 else Interval(p0, p0)
    if model.m == 0:
        # the base is the point |t_0| = pi_0, inside {|t_0| <= s} since s > pi_0
        return Interval(p0, p0)
    s = tree.split.s
    i = int(base_node.variable.split("_")[1])
    return Interval(p0 / s, ONE) if i == 0 else Interval(p0, s)


def _base_target(model: AnnuliModel) -> Interval:
    p0 = model.pi_0
    return Interval(p0, ONE) if model.m == 1 else Interval(p0, p0)


def _corners(model: AnnuliModel, iv: Interval) -> list[Value]:
    if model.m == 0:
        return [model.pi_0]
    return [iv.lo] if iv.lo == iv.hi else [iv.lo, iv.hi]


@dataclass(frozen=True)
class LeafSkeleton:
    leaf_id: str
    region: LeafRegion
    base_interval: Interval | None
    fiber_intervals: tuple[tuple[Value, Interval], ...]  # (base corner, |x_0| range)
    overlaps: tuple[tuple[Value, Interval], ...]  # with the fiber sibling, per corner


def leaf_skeleton(tree: ChartNode, model: AnnuliModel, leaf_id: str) -> LeafSkeleton:
    """Leaf region in local log_r units plus the ``|x_0|`` ranges it covers in root coordinates."""
    path = tree.path(leaf_id)
    if not path or not path[-1].is_leaf:
        raise KeyError(f"{leaf_id} is not a leaf")
    leaf = path[-1]
    if leaf.kind is not NodeKind.TORIC_LEAF:
        raise ValueError(f"{leaf_id} is unresolved")
    base_node = path[1] if tree.kind is NodeKind.BASE_SPLIT else tree
    fiber_split = path[-2] if len(path) > 1 and path[-2].kind is NodeKind.FIBER_SPLIT else None
    biv = _base_interval(model, tree, base_node)
    fibers, overlaps = [], []
    for c in _corners(model, biv):
        F = _fiber_floor(model, c)
        if fiber_split is None:
            fibers.append((c, Interval(F, ONE)))
            continue
        s = fiber_split.split.s
        fibers.append((c, Interval(F, s) if leaf.variable == "x'_0" else Interval(F / s, ONE)))
        overlaps.append((c, Interval(F / s, s)))
    region = leaf_region(model.m, leaf.a, leaf.b, model.n)
    return LeafSkeleton(leaf_id, region, biv, tuple(fibers), tuple(overlaps))


# ---------------------------------------------------------------- certificates


@dataclass
class AxisRecord:
    id: str
    kind: str  # "base" or "fiber"
    target: Interval
    charts: list[tuple[str, Interval]]
    overlap: Interval | None = None
    split_node: str | None = None

    def to_json(self) -> dict:
        out = {
            "id": self.id,
            "kind": self.kind,
            "target": self.target.to_json(),
            "charts": [{"chart": cid, "interval": iv.to_json()} for cid, iv in self.charts],
        }
        if self.overlap is not None:
            out["overlap"] = self.overlap.to_json()
        if self.split_node is not None:
            out["split_node"] = self.split_node
        return out

    @classmethod
    def from_json(cls, obj) -> "AxisRecord":
        return cls(
            id=obj["id"],
            kind=obj["kind"],
            target=Interval.from_json(obj["target"]),
            charts=[(c["chart"], Interval.from_json(c["interval"])) for c in obj["charts"]],
            overlap=Interval.from_json(obj["overlap"]) if "overlap" in obj else None,
            split_node=obj.get("split_node"),
        )


@dataclass
class LeafCertificate:
    id: str
    m: int
    a: Fraction
    b: Fraction
    n: tuple[int, ...]
    N: int
    simplices: np.ndarray  # (S, k, 2) int64 at scale N; k = 3 triangles, 2 segments

    @property
    def region(self) -> LeafRegion:
        return leaf_region(self.m, self.a, self.b, self.n)

    def triangles(self) -> list[Triangle]:
        if self.simplices.shape[1] != 3:
            return []
        return _to_triangles(self.simplices, self.N)

    def to_json(self) -> dict:
        N = self.N

        def q(v: int) -> str:
            return str(Fraction(int(v), N))

        return {
            "id": self.id,
            "m": self.m,
            "a": str(self.a),
            "b": str(self.b),
            "n": list(self.n),
            "N": N,
            "region": self.region.to_json(),
            "simplex_dim": int(self.simplices.shape[1]) - 1 if self.simplices.size else self.region.dim,
            "simplices": [[[q(x), q(y)] for x, y in s] for s in self.simplices.tolist()],
        }

    @classmethod
    def from_json(cls, obj) -> "LeafCertificate":
        N = int(obj["N"])
        dim = int(obj.get("simplex_dim", 2))
        k = dim + 1 if dim > 0 else 1
        pts = []
        off_lattice = False
        for s in obj["simplices"]:
            row = []
            for x, y in s:
                X, Y = Fraction(x) * N, Fraction(y) * N
                if X.denominator != 1 or Y.denominator != 1:
                    off_lattice = True
                row.append((math.floor(X), math.floor(Y)))
            if len(row) != k:
                raise InvariantError("certificate-json", f"simplex {s} should have {k} vertices")
            pts.append(row)
        arr = np.array(pts, dtype=np.int64).reshape(-1, k, 2)
        leaf = cls(obj["id"], int(obj["m"]), Fraction(obj["a"]), Fraction(obj["b"]),
                   tuple(int(x) for x in obj["n"]), N, arr)
        leaf._off_lattice = off_lattice
        return leaf


@dataclass
class CoveringCertificate:
    model: AnnuliModel
    tree: ChartNode
    axes: list[AxisRecord]
    leaves: list[LeafCertificate]
    verdict: "Report | None" = None

    def to_json(self) -> dict:
        m = self.model
        target = {
            "log_r": m.r.log().to_json(),
            "base_log": m.pi_0.log().to_json() if not m.pi_0.is_one() else None,
            "fiber_log": m.pi_1.log().to_json() if not m.pi_1.is_one() else None,
            "base_r_class": _fmt_opt(_r_class(m.pi_0, m.r)),
            "fiber_r_class": _fmt_opt(_r_class(m.pi_1, m.r)),
        }
        out = {
            "format": CERT_FORMAT,
            "version": CERT_VERSION,
            "generator": f"ss-skeleton {__version__}",
            "model": m.to_json(),
            "target": target,
            "tree": self.tree.to_json(),
            "axes": [a.to_json() for a in self.axes],
            "leaves": [lf.to_json() for lf in self.leaves],
        }
        if self.verdict is not None:
            out["verdict"] = self.verdict.to_json()
        return out

    @classmethod
    def from_json(cls, obj) -> "CoveringCertificate":
        if not isinstance(obj, dict):
            raise InvariantError("certificate-json", "certificate must be a JSON object")
        if obj.get("format") != CERT_FORMAT:
            raise InvariantError("certificate-json", f"unknown certificate format {obj.get('format')!r}")
        if obj.get("version") != CERT_VERSION:
            raise InvariantError("certificate-json", f"unsupported version {obj.get('version')!r}")
        try:
            return cls(
                model=AnnuliModel.from_json(obj["model"]),
                tree=ChartNode.from_json(obj["tree"]),
                axes=[AxisRecord.from_json(a) for a in obj["axes"]],
                leaves=[LeafCertificate.from_json(lf) for lf in obj["leaves"]],
            )
        except InvariantError:
            raise
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise InvariantError("certificate-json", f"malformed certificate: {exc!r}") from exc

    @property
    def triangle_count(self) -> int:
        return sum(lf.simplices.shape[0] for lf in self.leaves if lf.simplices.shape[1] == 3)


def _fmt_opt(q: Fraction | None) -> str | None:
    return None if q is None else str(q)


def _axis_records(model: AnnuliModel, tree: ChartNode) -> list[AxisRecord]:
    axes: list[AxisRecord] = []
    if model.m > 1:
        return axes
    base_nodes = tree.children if tree.kind is NodeKind.BASE_SPLIT else [tree]
    if tree.kind is NodeKind.BASE_SPLIT:
        charts = [(c.id, _base_interval(model, tree, c)) for c in base_nodes]
        overlap = None
        if len(charts) == 2:
            overlap = Interval(model.pi_0 / tree.split.s, tree.split.s)
        axes.append(AxisRecord("base", "base", _base_target(model), charts, overlap, tree.id))
    for bn in base_nodes:
        biv = _base_interval(model, tree, bn)
        for c in _corners(model, biv):
            F = _fiber_floor(model, c)
            target = Interval(F, ONE)
            if bn.kind is NodeKind.FIBER_SPLIT:
                s = bn.split.s
                charts = [(bn.children[0].id, Interval(F, s)), (bn.children[1].id, Interval(F / s, ONE))]
                overlap = Interval(F / s, s)
                split_node = bn.id
            else:
                charts, overlap, split_node = [(bn.id, target)], None, None
            axes.append(AxisRecord(f"fiber@{bn.id}:{c}", "fiber", target, charts, overlap, split_node))
    return axes


def certify(
    model: AnnuliModel, tree: ChartNode | None = None, *, max_simplices: int | None = DEFAULT_MAX_SIMPLICES
) -> CoveringCertificate:
    """Build the tree (unless given), triangulate every toric leaf and attach a verdict.

    The total simplex count is known before any triangulation is built;
    exceeding ``max_simplices`` (``None`` disables the budget) raises an
    :class:`InvariantError` named ``max-simplices``.
    """
    tree = tree or build_covering(model)
    toric = [node for node in tree.leaves() if node.kind is NodeKind.TORIC_LEAF]
    regions = [leaf_region(model.m, node.a, node.b, model.n) for node in toric]
    total = sum(region.simplex_count() for region in regions)
    if max_simplices is not None and total > max_simplices:
        raise InvariantError(
            "max-simplices", f"certificate needs {total} simplices, above the budget of {max_simplices}"
        )
    leaves = []
    for node, region in zip(toric, regions):
        N = region.scale
        if region.dim == 2:
            simp = _kernels.staircase(*region.scaled(N))
        elif region.dim == 1:
            simp = _segments(region, N)
        else:
            simp = np.zeros((0, 1, 2), dtype=np.int64)
        leaves.append(LeafCertificate(node.id, model.m, node.a, node.b, model.n, N, simp))
    cert = CoveringCertificate(model, tree, _axis_records(model, tree), leaves)
    cert.verdict = verify_covering(cert)
    return cert


# ---------------------------------------------------------------- verification

CHECKS = {
    1: "coverage",
    2: "overlap",
    3: "unimodular",
    4: "tiling",
    5: "resolved",
}


@dataclass
class CheckResult:
    id: int
    name: str
    passed: bool = True
    failures: list[dict] = field(default_factory=list)

    def fail(self, **info) -> None:
        self.passed = False
        self.failures.append(info)

    def to_json(self) -> dict:
        return {"id": self.id, "name": self.name, "passed": self.passed, "failures": self.failures}


@dataclass
class Report:
    checks: list[CheckResult]

    @property
    def valid(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed_ids(self) -> list[int]:
        return [c.id for c in self.checks if not c.passed]

    def to_json(self) -> dict:
        return {"valid": self.valid, "checks": [c.to_json() for c in self.checks]}

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            out.append(f"check {c.id} ({c.name}): {'pass' if c.passed else 'FAIL'}")
            for f in c.failures:
                out.append("    " + ", ".join(f"{k}={v}" for k, v in f.items()))
        out.append("verdict: " + ("valid" if self.valid else "invalid"))
        return out


def _union_gaps(target: Interval, pieces: list[Interval]) -> list[tuple[str, str]]:
    """Uncovered parts of ``target`` (and overhang beyond it), by an exact sweep."""
    problems = []
    pieces = sorted((p for p in pieces if not p.is_empty()), key=lambda p: _vk(p.lo))
    if not pieces:
        return [(str(target.lo), str(target.hi))]
    for p in pieces:
        if p.lo < target.lo or p.hi > target.hi:
            problems.append((f"overhang {p}", f"target {target}"))
    reach = target.lo
    if pieces[0].lo > reach:
        problems.append((str(reach), str(pieces[0].lo)))
    for p in pieces:
        if p.lo > reach:
            problems.append((str(reach), str(p.lo)))
        if p.hi > reach:
            reach = p.hi
    if reach < target.hi:
        problems.append((str(reach), str(target.hi)))
    # a gap may be reported twice when the first piece starts late
    return sorted(set(problems))


def _vk(v: Value):
    from .monomial_algebra import _value_key

    return _value_key(v)


def _expected_axes(model: AnnuliModel, tree: ChartNode) -> dict[str, AxisRecord]:
    try:
        return {a.id: a for a in _axis_records(model, tree)}
    except Exception as exc:  # malformed tree
        log.debug("cannot rebuild axes: %s", exc)
        return {}


def verify_covering(cert: CoveringCertificate) -> Report:
    """Run all certificate checks in exact arithmetic."""
    model, tree = cert.model, cert.tree
    cov, ovl, uni, til, res = (CheckResult(i, CHECKS[i]) for i in sorted(CHECKS))

    # (1) coverage and (2) overlaps, on the declared intervals
    expected = _expected_axes(model, tree)
    declared_ids = {a.id for a in cert.axes}
    for missing in sorted(set(expected) - declared_ids):
        cov.fail(axis=missing, reason="axis record missing")
    for ax in cert.axes:
        exp = expected.get(ax.id)
        if exp is None:
            cov.fail(axis=ax.id, reason="axis not implied by the chart tree")
            continue
        if ax.target != exp.target:
            cov.fail(axis=ax.id, reason=f"declared target {ax.target} != {exp.target}")
        if [cid for cid, _ in ax.charts] != [cid for cid, _ in exp.charts]:
            cov.fail(axis=ax.id, reason="chart list does not match the tree")
        for lo, hi in _union_gaps(exp.target, [iv for _, iv in ax.charts]):
            cov.fail(axis=ax.id, gap=f"({lo}, {hi})")
        if ax.overlap is not None:
            ivs = [iv for _, iv in ax.charts]
            inter = Interval(max((iv.lo for iv in ivs), key=_vk), min((iv.hi for iv in ivs), key=_vk))
            if ax.overlap != inter:
                ovl.fail(axis=ax.id, reason=f"declared overlap {ax.overlap} != intersection {inter}")
            if not ax.overlap.lo < ax.overlap.hi:
                ovl.fail(axis=ax.id, reason=f"overlap {ax.overlap} has no interior")
        elif exp.overlap is not None:
            ovl.fail(axis=ax.id, reason="overlap missing")
    for node in tree.walk():
        sp = node.split
        if sp is None:
            continue
        if sp.s != sp.target * model.r**sp.q:
            ovl.fail(node=node.id, reason="s != target * r**q")
        if not (sp.target**sp.e < sp.s < ONE):
            ovl.fail(node=node.id, reason=f"s={sp.s} outside (target**{sp.e}, 1)")
        k = 2 if sp.kind == "fiber" else node.chart.m + 1
        if not sp.s**k > sp.target:
            ovl.fail(node=node.id, reason=f"s**{k} <= {sp.target}")

    # (3) unimodularity, (4) tiling, (5) resolution
    by_id = {lf.id: lf for lf in cert.leaves}
    for node in tree.leaves():
        if node.kind is NodeKind.UNRESOLVED_LEAF:
            res.fail(leaf=node.id, reason="unresolved leaf (skeleton dimension > 2)")
            continue
        lf = by_id.get(node.id)
        if lf is None:
            til.fail(leaf=node.id, reason="no triangulation for leaf")
            continue
        a, b = _r_class(node.chart.base_const, model.r), _r_class(node.chart.fiber_const, model.r)
        if (a, b) != (lf.a, lf.b) or (node.a, node.b) != (lf.a, lf.b):
            til.fail(leaf=node.id, reason=f"leaf exponents ({lf.a}, {lf.b}) != chart radii classes ({a}, {b})")
            continue
        _check_leaf(lf, uni, til)
    for lf in cert.leaves:
        if lf.id not in {n.id for n in tree.leaves()}:
            til.fail(leaf=lf.id, reason="triangulated leaf not in the chart tree")
    return Report([cov, ovl, uni, til, res])


def _check_leaf(lf: LeafCertificate, uni: CheckResult, til: CheckResult) -> None:
    try:
        region = lf.region
        W, HL, slope = region.scaled(lf.N)
    except ValueError as exc:
        til.fail(leaf=lf.id, reason=str(exc))
        return
    simp = lf.simplices
    if getattr(lf, "_off_lattice", False):
        uni.fail(leaf=lf.id, reason="vertex off the 1/N lattice")
    k = simp.shape[1] if simp.ndim == 3 else 0
    if region.dim == 2:
        if k != 3:
            til.fail(leaf=lf.id, reason="2-dimensional leaf needs triangles")
            return
        det = _kernels.dets(simp)
        bad = np.nonzero(np.abs(det) != 1)[0]
        if bad.size:
            uni.fail(leaf=lf.id, triangle=int(bad[0]), det=int(det[bad[0]]), count=int(bad.size))
        code, idx = _kernels.tiling(simp, W, HL, slope)
        if code != _kernels.TILING_OK:
            til.fail(leaf=lf.id, reason=_kernels.TILING_MESSAGES[code], triangle=idx)
        return
    if region.dim == 1:
        if k != 2:
            til.fail(leaf=lf.id, reason="1-dimensional leaf needs segments")
            return
        vec = simp[:, 1] - simp[:, 0]
        g = np.gcd(np.abs(vec[:, 0]), np.abs(vec[:, 1]))
        bad = np.nonzero(g != 1)[0]
        if bad.size:
            uni.fail(leaf=lf.id, segment=int(bad[0]), reason="segment is not primitive")
        axis = 0 if region.width > 0 else 1
        L = W if axis == 0 else HL
        other = simp[:, :, 1 - axis]
        lo = simp[:, :, axis].min(axis=1)
        hi = simp[:, :, axis].max(axis=1)
        order = np.argsort(lo, kind="stable")
        lo, hi = lo[order], hi[order]
        contiguous = (
            np.all(other == 0)
            and lo.size > 0
            and lo[0] == 0
            and hi[-1] == L
            and np.all(lo[1:] == hi[:-1])
        )
        if not contiguous:
            til.fail(leaf=lf.id, reason="segments do not tile the leaf interval")
        return
    if simp.shape[0] not in (0,):
        til.fail(leaf=lf.id, reason="point leaf carries simplices")


def covering_float_layout(cert: CoveringCertificate) -> list[dict]:
    """Display-only float placement of each leaf in root log_r coordinates."""
    model, tree = cert.model, cert.tree
    lr = -model.r.log_float()
    out = []
    for lf in cert.leaves:
        path = tree.path(lf.id)
        dx = dy = 0.0
        for parent, child in zip(path, path[1:]):
            sigma = -parent.split.s.log_float() / lr
            if child.variable == "t'_1":
                dx += sigma
            elif child.variable == "x'_0":
                dy += sigma
        out.append({"leaf": lf, "dx": dx, "dy": dy})
    return out
