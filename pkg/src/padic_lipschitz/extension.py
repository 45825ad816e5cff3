"""Lipschitz extensions of prepared functions from a cell fiber to all of Q_p.

Three constructions, all acting fiber by fiber:

* :func:`extend_by_center` - f on the fiber, the image center c' elsewhere.
  Lipschitz constant ``p**m'``.
* :func:`extend_with_phi` - the same after rescaling the angular component
  of ``x - c`` into the fiber's class.  Constant ``max(1, p**(m'-m))``.
* :func:`extend_isometric` - keeps the constant 1.  Linear maps reuse the
  phi construction; for ``a/b != 1`` the fiber splits at the order where
  ``l' >= l`` starts to hold, the good part uses the phi construction and
  every remaining ball is extended by a constant, then everything is glued.

Gluing assigns each point to the part whose domain is nearest, ties going
to the earlier part, and is Lipschitz with the largest constant among the
parts.  Inputs are normalised to Lipschitz constant 1 by
:func:`rescale_to_unit`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .errors import (
    DisagreementOnSharedDomain,
    EmptyWindow,
    IndeterminateValuation,
    NotUnitLipschitz,
    UnsupportedLambda,
    UnsupportedRamifiedRoot,
)
from .functions import (
    RULE_LOADERS,
    Complement,
    Constant,
    Everywhere,
    NearerTo,
    Piece,
    PiecewiseFunction,
    PreparedFunction,
    derivative_order_formula,
    is_unit_lipschitz,
    piecewise_from_dict,
)
from .geometry import CellFiber, CosetSpec, PointSet
from .padic import (
    DEFAULT_PRECISION,
    PadicApprox,
    Scalar,
    ac,
    as_fraction,
    format_rational,
    lift_ac,
    parse_rational,
    valuation,
)

__all__ = [
    "ExtendedFunction",
    "constant_extension",
    "Family",
    "FamilyMember",
    "extend_by_center",
    "extend_family",
    "extend_isometric",
    "extend_with_phi",
    "glue",
    "isometric_split",
    "phi_rescale",
    "rescale_to_unit",
    "unscale",
]

PROVENANCE_TAGS = ("glue", "center", "phi", "iso-q1", "iso-qgt1", "iso-qlt1")


@dataclass(frozen=True)
class ExtendedFunction:
    """A total function on Q_p with the Lipschitz constant it was built to have."""

    p: int
    pieces: PiecewiseFunction
    claimed_lipschitz: Fraction
    provenance: str

    def __call__(self, x: Scalar) -> Scalar:
        return self.pieces(x)

    def to_dict(self) -> dict:
        return {"kind": "extension", "provenance": self.provenance,
                "claimed_lipschitz": format_rational(self.claimed_lipschitz),
                **self.pieces.to_dict()}

    @classmethod
    def from_dict(cls, p: int, d: dict, precision: int = DEFAULT_PRECISION):
        return cls(p, piecewise_from_dict(p, d, precision),
                   parse_rational(d["claimed_lipschitz"]), d["provenance"])


@dataclass(frozen=True)
class PhiComposed:
    """``x -> inner(phi(x))`` with phi the angular rescaling toward ``fiber``."""

    fiber: CellFiber
    inner: ExtendedFunction

    def __call__(self, x):
        return self.inner(phi_rescale(self.fiber, x))

    def to_dict(self) -> dict:
        return {"kind": "phi", "fiber": self.fiber.to_dict(), "inner": self.inner.to_dict()}


@dataclass(frozen=True)
class Scaled:
    """``x -> factor * inner(x)``."""

    factor: Fraction
    inner: object

    def __call__(self, x):
        return self.factor * self.inner(x)

    def to_dict(self) -> dict:
        inner = self.inner.to_dict()
        return {"kind": "scaled", "factor": format_rational(self.factor), "inner": inner}


def _load_phi(p, d, precision):
    return PhiComposed(CellFiber.from_dict(p, d["fiber"]),
                       ExtendedFunction.from_dict(p, d["inner"], precision))


def _load_scaled(p, d, precision):
    from .functions import rule_from_dict
    return Scaled(parse_rational(d["factor"]), rule_from_dict(p, d["inner"], precision))


RULE_LOADERS["extension"] = ExtendedFunction.from_dict
RULE_LOADERS["phi"] = _load_phi
RULE_LOADERS["scaled"] = _load_scaled


@dataclass(frozen=True)
class FamilyMember:
    y: Tuple[Fraction, ...]
    function: PreparedFunction

    @property
    def fiber(self) -> CellFiber:
        return self.function.source


@dataclass(frozen=True)
class Family:
    """Finitely many parameter tuples, each carrying one or more prepared cells.

    Members sharing a parameter tuple are cells covering one fiber and are
    glued in the order given.
    """

    p: int
    members: Tuple[FamilyMember, ...]

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))

    def parameters(self) -> List[Tuple[Fraction, ...]]:
        seen = []
        for member in self.members:
            if member.y not in seen:
                seen.append(member.y)
        return seen

    def cells(self, y) -> List[PreparedFunction]:
        return [m.function for m in self.members if m.y == y]


# --- rescaling -----------------------------------------------------------

def _p_power_exponent(lam, p: int) -> int:
    lam = as_fraction(lam)
    if lam <= 0:
        raise UnsupportedLambda(f"lambda={lam} must be positive")
    v = valuation(lam, p)
    if lam != Fraction(p) ** v:
        raise UnsupportedLambda(f"lambda={lam} is not an integer power of {p}")
    return v


def _rescale_function(g: PreparedFunction, factor: Fraction) -> PreparedFunction:
    if g.target.is_zero:
        return replace(g, c_prime=factor * g.c_prime)
    target = CosetSpec(g.p, factor * g.target.xi, g.target.m, g.target.n)
    return replace(g, e=factor**g.b * g.e, c_prime=factor * g.c_prime, target=target)


def rescale_to_unit(f: Union[Family, PreparedFunction], lam):
    """Multiply outputs by ``lam``; a lam-Lipschitz input becomes 1-Lipschitz.

    ``lam`` must be ``p**k``: a ratio ``|f(x)-f(y)| / |x-y|`` is always a
    power of p, so other constants are never attained exactly.
    """
    p = f.p
    lam = as_fraction(lam)
    _p_power_exponent(lam, p)
    if isinstance(f, PreparedFunction):
        return _rescale_function(f, lam)
    return Family(p, tuple(FamilyMember(m.y, _rescale_function(m.function, lam))
                           for m in f.members))


def unscale(ext: ExtendedFunction, lam) -> ExtendedFunction:
    """Undo :func:`rescale_to_unit` on an extension of the rescaled input."""
    lam = as_fraction(lam)
    _p_power_exponent(lam, ext.p)
    if lam == 1:
        return ext
    pieces = PiecewiseFunction((Piece(Everywhere(), Scaled(1 / lam, ext), ext.provenance),))
    return ExtendedFunction(ext.p, pieces, ext.claimed_lipschitz * lam, ext.provenance)


# --- constructions ---------------------------------------------------------

def constant_extension(p: int, value, provenance: str = "center",
                       claimed=1) -> ExtendedFunction:
    """The constant function ``value`` on all of Q_p, claiming ``claimed``."""
    pieces = PiecewiseFunction((Piece(Everywhere(), Constant(value), provenance),))
    return ExtendedFunction(p, pieces, Fraction(claimed), provenance)


def _require_unit_lipschitz(g: PreparedFunction) -> None:
    if not is_unit_lipschitz(g):
        raise NotUnitLipschitz("the input is not 1-Lipschitz on its fiber")


def _trivial_extension(g: PreparedFunction, provenance: str) -> Optional[ExtendedFunction]:
    if g.target.is_zero:
        return constant_extension(g.p, g.c_prime, provenance)
    if g.source.is_zero_cell or g.a == 0:
        return constant_extension(g.p, g(g.source.sample_points()[0]), provenance)
    return None


def extend_by_center(g: PreparedFunction) -> ExtendedFunction:
    """f on the source fiber, the image center c' off it."""
    _require_unit_lipschitz(g)
    trivial = _trivial_extension(g, "center")
    if trivial is not None:
        return trivial
    pieces = PiecewiseFunction((
        Piece(g.source, g, "center"),
        Piece(Complement(g.source), Constant(g.c_prime), "center"),
    ))
    return ExtendedFunction(g.p, pieces, Fraction(g.p) ** g.target.m, "center")


def phi_rescale(S: CellFiber, x: Scalar) -> Scalar:
    """Rescale the angular component of ``x - c`` to that of the fiber's xi.

    ``phi(x) = (x - c) * rep(ac_m(x - c)**-1 * ac_m(xi)) + c`` and
    ``phi(c) = c``; rep is the least positive integer representative.
    """
    d = x - S.center
    if d == 0:
        return S.center
    if S.is_zero_cell:
        return x
    ratio = ac(d, S.m, S.p).inverse() * S.coset.ac_xi
    return d * lift_ac(ratio) + S.center


def extend_with_phi(g: PreparedFunction) -> ExtendedFunction:
    """The center extension composed with :func:`phi_rescale`."""
    _require_unit_lipschitz(g)
    trivial = _trivial_extension(g, "phi")
    if trivial is not None:
        return trivial
    inner = extend_by_center(g)
    pieces = PiecewiseFunction((Piece(Everywhere(), PhiComposed(g.source, inner), "phi"),))
    claimed = Fraction(g.p) ** max(0, g.target.m - g.source.m)
    return ExtendedFunction(g.p, pieces, claimed, "phi")


def _single_ball_extension(g: PreparedFunction, ball, provenance: str) -> ExtendedFunction:
    """f on one ball, f(h) off it, h the canonical point of the ball."""
    sub = replace(g, source=g.source.restrict(ball.l, ball.l))
    h_value = sub(ball.canonical_point())
    pieces = PiecewiseFunction((
        Piece(sub.source, sub, provenance),
        Piece(Complement(sub.source), Constant(h_value), provenance),
    ))
    return ExtendedFunction(g.p, pieces, Fraction(1), provenance)


@dataclass(frozen=True)
class IsometricSplit:
    """Where the constant-1 construction splits a fiber.

    ``good`` holds the orders with ``l' >= l`` (handled like a linear map),
    ``rest`` the finitely many remaining orders.  ``validity`` and
    ``threshold`` are the exact rational bounds on l coming from
    ``ord(g') >= 0`` and ``ord(g') >= m' - m``.
    """

    exp_ratio: Fraction
    validity: Optional[Fraction]
    threshold: Optional[Fraction]
    good: Optional[CellFiber]
    rest: Tuple[int, ...]


def isometric_split(g: PreparedFunction) -> IsometricSplit:
    q = g.exp_ratio
    S = g.source
    if q == 1:
        return IsometricSplit(q, None, None, S, ())
    formula = derivative_order_formula(g.a, g.b, g.e, g.p)
    k = formula.constant_part          # ord(e)/b + ord(a/b)
    dm = g.target.m - S.m
    orders = S.orders
    if q > 1:
        validity = -k / (q - 1)
        threshold = (dm - k) / (q - 1)
        cut = math.ceil(threshold)
        if orders.first is None:
            raise NotUnitLipschitz("fiber unbounded below with a/b > 1")
        rest = tuple(orders.within(orders.first, cut - 1))
        good = None if orders.at_or_above(cut) is None else S.restrict(lo=cut)
    else:
        validity = k / (1 - q)
        threshold = (k - dm) / (1 - q)
        cut = math.floor(threshold)
        if orders.last is None:
            raise NotUnitLipschitz("fiber unbounded above with a/b < 1")
        rest = tuple(orders.within(cut + 1, orders.last))
        good = None if orders.at_or_below(cut) is None else S.restrict(hi=cut)
    return IsometricSplit(q, validity, threshold, good, rest)


def extend_isometric(g: PreparedFunction, window: Optional[Tuple[int, int]] = None
                     ) -> ExtendedFunction:
    """An extension with Lipschitz constant 1 of a 1-Lipschitz prepared function.

    ``window``, when given, must contain every ball that needs its own
    constant extension; :class:`EmptyWindow` is raised otherwise.
    """
    if g.b % g.p == 0:
        raise UnsupportedRamifiedRoot(f"p={g.p} divides b={g.b}")
    _require_unit_lipschitz(g)
    q = g.exp_ratio if g.a else None
    tag = "iso-q1" if q == 1 else ("iso-qgt1" if q is not None and q > 1 else "iso-qlt1")
    trivial = _trivial_extension(g, tag)
    if trivial is not None:
        return trivial
    split = isometric_split(g)
    if q == 1:
        ext = extend_with_phi(g)
        return ExtendedFunction(g.p, PiecewiseFunction(
            (Piece(Everywhere(), ext, "iso-q1"),)), Fraction(1), "iso-q1")
    if window is not None and any(not window[0] <= l <= window[1] for l in split.rest):
        raise EmptyWindow(f"orders {list(split.rest)} need extending but window is {window}")
    parts: List[Tuple[PointSet, ExtendedFunction]] = []
    if split.good is not None:
        good_g = replace(g, source=split.good)
        inner = extend_by_center(good_g)
        phi_ext = ExtendedFunction(g.p, PiecewiseFunction(
            (Piece(Everywhere(), PhiComposed(split.good, inner), tag),)), Fraction(1), tag)
        parts.append((PointSet((split.good,)), phi_ext))
    for l in split.rest:
        ball = g.source.ball_at(l)
        parts.append((PointSet((ball,)), _single_ball_extension(g, ball, tag)))
    if not parts:
        raise EmptyWindow("no balls to extend")
    glued = glue(parts)
    return ExtendedFunction(g.p, PiecewiseFunction((Piece(Everywhere(), glued, tag),)),
                            Fraction(1), tag)


# --- gluing ------------------------------------------------------------------

def _agree(u, v) -> bool:
    if u is v:
        return True
    if not isinstance(u, PadicApprox) and not isinstance(v, PadicApprox):
        return u == v
    diff = u - v
    return isinstance(diff, PadicApprox) and diff.is_indeterminate or diff == 0


def _check_agreement(parts: Sequence[Tuple[PointSet, ExtendedFunction]]) -> None:
    for i, (X_i, ext_i) in enumerate(parts):
        for x in X_i.sample_points():
            for j, (X_j, ext_j) in enumerate(parts):
                if j != i and X_j.contains(x) and not _agree(ext_i(x), ext_j(x)):
                    raise DisagreementOnSharedDomain(
                        f"parts {i} and {j} disagree at {format_rational(x)}")


def glue(parts: Sequence[Tuple[PointSet, ExtendedFunction]]) -> ExtendedFunction:
    """Left fold of the two-part gluing ``T1 = {x : d(x, X1) <= d(x, X2)}``."""
    parts = [(X if isinstance(X, PointSet) else PointSet(tuple(X)), ext) for X, ext in parts]
    if not parts:
        raise ValueError("nothing to glue")
    _check_agreement(parts)
    X_acc, acc = parts[0]
    for X_next, ext_next in parts[1:]:
        nearer = NearerTo(X_acc, X_next)
        pieces = PiecewiseFunction((
            Piece(nearer, acc, "glue"),
            Piece(Complement(nearer), ext_next, "glue"),
        ))
        claimed = max(acc.claimed_lipschitz, ext_next.claimed_lipschitz)
        acc = ExtendedFunction(acc.p, pieces, claimed, "glue")
        X_acc = X_acc + X_next
    return acc


# --- families ----------------------------------------------------------------

_METHODS = {"center": extend_by_center, "phi": extend_with_phi,
            "isometric": extend_isometric}


def extend_family(F: Family, method: str = "isometric",
                  window: Optional[Tuple[int, int]] = None) -> Dict[tuple, ExtendedFunction]:
    """Extend every fiber of a family; cells sharing a parameter are glued."""
    if method not in _METHODS:
        raise ValueError(f"unknown method {method!r}")
    build = _METHODS[method]
    out = {}
    for y in F.parameters():
        cells = F.cells(y)
        exts = [build(g, window) if method == "isometric" else build(g) for g in cells]
        if len(cells) == 1:
            out[y] = exts[0]
        else:
            out[y] = glue([(PointSet((g.source,)), ext) for g, ext in zip(cells, exts)])
    return out
