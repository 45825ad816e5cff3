"""Cosets, balls, cell fibers and exact ultrametric distances in Q_p.

A 1-cell fiber over a fixed parameter is

    { x : x - c in xi * Q_{m,n},  l_min <= ord(x - c) <= l_max },

a disjoint union of the balls ``B_{l,c,m,xi}`` over the admissible orders l
(``l = ord(xi) mod n`` inside the bounds).  A 0-cell fiber is the point c.
Order bounds are stored inclusively; ``|alpha| < |x - c|`` becomes
``l_max = ord(alpha) - 1`` and ``|x - c| < |beta|`` becomes
``l_min = ord(beta) + 1`` (see :meth:`CellFiber.from_cell_bounds`).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Sequence, Tuple, Union

from .errors import EmptyFiber, NotClosed, ZeroCellHasNoBalls
from .padic import (
    PLUS_INFINITY,
    AngularClass,
    Scalar,
    ac,
    as_fraction,
    format_rational,
    lift_ac,
    norm,
    parse_rational,
    valuation,
)

__all__ = [
    "Ball",
    "CellFiber",
    "CosetSpec",
    "OrderRange",
    "Point",
    "PointSet",
    "ball_contains",
    "canonical_point",
    "distance_to_ball",
    "distance_to_set",
    "fiber_balls",
    "in_coset",
]


@dataclass(frozen=True)
class CosetSpec:
    """The coset ``xi * Q_{m,n}``; ``xi = 0`` encodes the singleton {0}."""

    p: int
    xi: Fraction
    m: int
    n: int

    def __post_init__(self):
        object.__setattr__(self, "xi", as_fraction(self.xi))
        if self.m < 1 or self.n < 1:
            raise ValueError("coset needs m >= 1 and n >= 1")

    @property
    def is_zero(self) -> bool:
        return self.xi == 0

    @property
    def ord_xi(self):
        return valuation(self.xi, self.p)

    @property
    def ac_xi(self) -> AngularClass:
        return ac(self.xi, self.m, self.p)

    def contains(self, x: Scalar) -> bool:
        if self.is_zero:
            return x == 0
        v = valuation(x, self.p)
        if v is PLUS_INFINITY:
            return False
        return (v - self.ord_xi) % self.n == 0 and ac(x, self.m, self.p) == self.ac_xi

    def to_dict(self) -> dict:
        return {"xi": format_rational(self.xi), "m": self.m, "n": self.n}

    @classmethod
    def from_dict(cls, p: int, d: dict) -> "CosetSpec":
        return cls(p, parse_rational(d["xi"]), int(d["m"]), int(d["n"]))


def in_coset(x: Scalar, coset: CosetSpec) -> bool:
    return coset.contains(x)


@dataclass(frozen=True)
class OrderRange:
    """Integers ``l = residue (mod step)`` with optional inclusive bounds."""

    residue: int
    step: int
    lo: Optional[int] = None
    hi: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "residue", self.residue % self.step)

    def contains(self, l: int) -> bool:
        return ((l - self.residue) % self.step == 0
                and (self.lo is None or l >= self.lo)
                and (self.hi is None or l <= self.hi))

    def at_or_above(self, l: int) -> Optional[int]:
        """Least admissible order >= l."""
        if self.lo is not None:
            l = max(l, self.lo)
        cand = l + (self.residue - l) % self.step
        if self.hi is not None and cand > self.hi:
            return None
        return cand

    def at_or_below(self, l: int) -> Optional[int]:
        """Greatest admissible order <= l."""
        if self.hi is not None:
            l = min(l, self.hi)
        cand = l - (l - self.residue) % self.step
        if self.lo is not None and cand < self.lo:
            return None
        return cand

    @property
    def first(self) -> Optional[int]:
        return None if self.lo is None else self.at_or_above(self.lo)

    @property
    def last(self) -> Optional[int]:
        return None if self.hi is None else self.at_or_below(self.hi)

    @property
    def is_empty(self) -> bool:
        if self.lo is None or self.hi is None:
            return False
        return self.at_or_above(self.lo) is None

    def within(self, lo: int, hi: int) -> Iterator[int]:
        l = self.at_or_above(lo)
        while l is not None and l <= hi:
            yield l
            l = self.at_or_above(l + 1)


@dataclass(frozen=True)
class Ball:
    """``B_{l,c,m,xi} = {x : ord(x - c) = l, ac_m(x - c) = ac_m(xi)}``.

    Equivalently the closed ball of radius ``p**-(l+m)`` around
    ``c + lift_ac(ac_m(xi)) * p**l``.
    """

    p: int
    l: int
    center: Fraction
    m: int
    residue: int

    def __post_init__(self):
        object.__setattr__(self, "center", as_fraction(self.center))
        AngularClass(self.p, self.m, self.residue)
        if self.residue == 0:
            raise ValueError("a ball needs a nonzero angular class")

    @property
    def ac_class(self) -> AngularClass:
        return AngularClass(self.p, self.m, self.residue)

    @property
    def radius(self) -> Fraction:
        return Fraction(self.p) ** (-(self.l + self.m))

    def canonical_point(self) -> Fraction:
        return self.center + lift_ac(self.ac_class) * Fraction(self.p) ** self.l

    def contains(self, x: Scalar) -> bool:
        d = x - self.center
        v = valuation(d, self.p)
        if v != self.l:
            return False
        return ac(d, self.m, self.p).residue == self.residue

    def distance(self, x: Scalar) -> Fraction:
        r = norm(x - self.canonical_point(), self.p)
        return Fraction(0) if r <= self.radius else r

    def nearest_point(self, x: Scalar):
        return x if self.contains(x) else self.canonical_point()

    def sample_points(self) -> list:
        return [self.canonical_point()]

    def to_dict(self) -> dict:
        return {"kind": "ball", "l": self.l, "center": format_rational(self.center),
                "m": self.m, "residue": self.residue}


def ball_contains(B: Ball, x: Scalar) -> bool:
    return B.contains(x)


def canonical_point(B: Ball) -> Fraction:
    return B.canonical_point()


def distance_to_ball(x: Scalar, B: Ball) -> Fraction:
    return B.distance(x)


@dataclass(frozen=True)
class Point:
    p: int
    value: Fraction

    def __post_init__(self):
        object.__setattr__(self, "value", as_fraction(self.value))

    def contains(self, x: Scalar) -> bool:
        return x == self.value

    def distance(self, x: Scalar) -> Fraction:
        return norm(x - self.value, self.p)

    def nearest_point(self, x: Scalar):
        return self.value

    def sample_points(self) -> list:
        return [self.value]

    def to_dict(self) -> dict:
        return {"kind": "point", "value": format_rational(self.value)}


@dataclass(frozen=True)
class CellFiber:
    """Fiber of a cell above one parameter tuple."""

    center: Fraction
    coset: CosetSpec
    l_min: Optional[int] = None
    l_max: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "center", as_fraction(self.center))
        if not self.is_zero_cell and self.orders.is_empty:
            raise EmptyFiber(f"no admissible order in [{self.l_min}, {self.l_max}]")

    @classmethod
    def from_cell_bounds(cls, center, coset: CosetSpec, ord_alpha=None,
                         ord_beta=None) -> "CellFiber":
        """Translate ``|alpha| < |x-c| < |beta|`` into inclusive order bounds."""
        return cls(center, coset,
                   None if ord_beta is None else ord_beta + 1,
                   None if ord_alpha is None else ord_alpha - 1)

    @property
    def p(self) -> int:
        return self.coset.p

    @property
    def is_zero_cell(self) -> bool:
        return self.coset.is_zero

    @property
    def orders(self) -> OrderRange:
        return OrderRange(self.coset.ord_xi, self.coset.n, self.l_min, self.l_max)

    @property
    def m(self) -> int:
        return self.coset.m

    @property
    def residue(self) -> int:
        return self.coset.ac_xi.residue

    def ball_at(self, l: int) -> Ball:
        if self.is_zero_cell:
            raise ZeroCellHasNoBalls("a 0-cell has no balls")
        if not self.orders.contains(l):
            raise ValueError(f"order {l} is not admissible for this fiber")
        return Ball(self.p, l, self.center, self.m, self.residue)

    def balls(self, lo: int, hi: int) -> list:
        if self.is_zero_cell:
            raise ZeroCellHasNoBalls("a 0-cell has no balls")
        return [self.ball_at(l) for l in self.orders.within(lo, hi)]

    def contains(self, x: Scalar) -> bool:
        if self.is_zero_cell:
            return x == self.center
        d = x - self.center
        v = valuation(d, self.p)
        if v is PLUS_INFINITY or not self.orders.contains(v):
            return False
        return ac(d, self.m, self.p).residue == self.residue

    def restrict(self, lo: Optional[int] = None, hi: Optional[int] = None) -> "CellFiber":
        """Sub-fiber keeping orders within the additional inclusive bounds."""
        new_lo = self.l_min if lo is None else (lo if self.l_min is None else max(lo, self.l_min))
        new_hi = self.l_max if hi is None else (hi if self.l_max is None else min(hi, self.l_max))
        return CellFiber(self.center, self.coset, new_lo, new_hi)

    def _candidates(self, x: Scalar):
        """(distance, nearest point) pairs, one per relevant order."""
        orders = self.orders
        if x == self.center:
            top = orders.last
            if top is None:
                return [(Fraction(0), None)]
            return [(Fraction(self.p) ** (-top), self.ball_at(top).canonical_point())]
        l0 = valuation(x - self.center, self.p)
        out = []
        if orders.contains(l0):
            ball = self.ball_at(l0)
            out.append((ball.distance(x), ball.nearest_point(x)))
        above = orders.at_or_above(l0 + 1)
        if above is not None:
            out.append((Fraction(self.p) ** (-l0), self.ball_at(above).canonical_point()))
        below = orders.at_or_below(l0 - 1)
        if below is not None:
            out.append((Fraction(self.p) ** (-below), self.ball_at(below).canonical_point()))
        return out

    def distance(self, x: Scalar) -> Fraction:
        if self.is_zero_cell:
            return norm(x - self.center, self.p)
        return min(d for d, _ in self._candidates(x))

    def nearest_point(self, x: Scalar):
        """A nearest member of the fiber; ties prefer the ball of x's own order."""
        if self.is_zero_cell:
            return self.center
        best = min(d for d, _ in self._candidates(x))
        for d, pt in self._candidates(x):
            if d == best:
                if pt is None:
                    raise NotClosed("the fiber center is a limit point, not a member")
                return pt
        raise AssertionError("unreachable")

    def sample_points(self) -> list:
        if self.is_zero_cell:
            return [self.center]
        orders = self.orders
        start = orders.first if orders.first is not None else orders.at_or_above(orders.residue)
        if start is None:
            start = orders.last
        pts, l = [], start
        for _ in range(3):
            if l is None:
                break
            pts.append(self.ball_at(l).canonical_point())
            l = orders.at_or_above(l + 1)
        return pts

    def to_dict(self) -> dict:
        return {"center": format_rational(self.center), "xi": format_rational(self.coset.xi),
                "m": self.coset.m, "n": self.coset.n, "l_min": self.l_min, "l_max": self.l_max}

    @classmethod
    def from_dict(cls, p: int, d: dict) -> "CellFiber":
        coset = CosetSpec(p, parse_rational(d["xi"]), int(d["m"]), int(d["n"]))
        lo, hi = d.get("l_min"), d.get("l_max")
        return cls(parse_rational(d["center"]), coset,
                   None if lo is None else int(lo), None if hi is None else int(hi))


def fiber_balls(S: CellFiber, l_window: Tuple[int, int]) -> list:
    """Balls of a 1-cell fiber with order in the inclusive window, ascending."""
    return S.balls(*l_window)


Constituent = Union[Ball, CellFiber, Point]


@dataclass(frozen=True)
class PointSet:
    """Finite union of balls, cell fibers and points."""

    constituents: Tuple[Constituent, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "constituents", tuple(self.constituents))

    def __iter__(self):
        return iter(self.constituents)

    def __len__(self):
        return len(self.constituents)

    def __add__(self, other: "PointSet") -> "PointSet":
        return PointSet(self.constituents + other.constituents)

    def contains(self, x: Scalar) -> bool:
        return any(c.contains(x) for c in self.constituents)

    def distance(self, x: Scalar) -> Fraction:
        if not self.constituents:
            raise ValueError("distance to an empty set")
        return min(c.distance(x) for c in self.constituents)

    def nearest(self, x: Scalar):
        """(index, point): first constituent at minimal distance, and its nearest point."""
        if not self.constituents:
            raise ValueError("nearest point of an empty set")
        dists = [c.distance(x) for c in self.constituents]
        best = min(dists)
        for i, (c, d) in enumerate(zip(self.constituents, dists)):
            if d == best:
                try:
                    return i, c.nearest_point(x)
                except NotClosed:
                    continue
        raise NotClosed(f"{x} is a limit point of the set but not a member")

    def sample_points(self) -> list:
        return [pt for c in self.constituents for pt in c.sample_points()]

    def to_dict(self) -> dict:
        out = []
        for c in self.constituents:
            if isinstance(c, CellFiber):
                out.append({"kind": "fiber", **c.to_dict()})
            else:
                out.append(c.to_dict())
        return {"kind": "pointset", "constituents": out}

    @classmethod
    def from_dict(cls, p: int, d: dict) -> "PointSet":
        return cls(tuple(constituent_from_dict(p, c) for c in d["constituents"]))


def constituent_from_dict(p: int, d: dict) -> Constituent:
    kind = d["kind"]
    if kind == "ball":
        return Ball(p, int(d["l"]), parse_rational(d["center"]), int(d["m"]), int(d["residue"]))
    if kind == "point":
        return Point(p, parse_rational(d["value"]))
    if kind == "fiber":
        return CellFiber.from_dict(p, d)
    raise ValueError(f"unknown constituent kind {kind!r}")


def distance_to_set(x: Scalar, A: Union[PointSet, Sequence[Constituent]]) -> Fraction:
    """Exact ``inf |x - a|`` over the set; unbounded fibers use closed forms."""
    if not isinstance(A, PointSet):
        A = PointSet(tuple(A))
    return A.distance(x)
