"""Prepared power-law functions on cell fibers.

Over one parameter tuple a prepared function is ``g = c' + z`` where

    z**b = e * (x - c)**a,      x in the source fiber,

and the b-th root branch is the one whose angular component matches the
target coset ``xi' Q_{m',n'}``.  The exponent ratio ``a/b`` is called
``exp_ratio`` here (it is unrelated to the residue-field size).

The order of the derivative is computed symbolically,

    ord(g'(x)) = ord(e)/b + ord(a) - ord(b) + (a/b - 1) * ord(x - c),

and balls map to balls with ``l' + m' = ord(g') + l + m``.
"""
from __future__ import annotations

import functools
import math
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .errors import (
    InsufficientPrecision,
    NoRoot,
    NonIntegerOrder,
    OutsideDomain,
)
from .geometry import (
    Ball,
    CellFiber,
    CosetSpec,
    OrderRange,
    Point,
    PointSet,
    constituent_from_dict,
)
from .padic import (
    DEFAULT_PRECISION,
    PLUS_INFINITY,
    AngularClass,
    PadicApprox,
    Scalar,
    ac,
    as_fraction,
    format_rational,
    hensel_root,
    lift_ac,
    parse_rational,
    reduce_mod,
    scalar_from_json,
    scalar_to_json,
    valuation,
)

__all__ = [
    "Complement",
    "CompatibilityReport",
    "Constant",
    "DerivativeOrder",
    "Everywhere",
    "JacobianReport",
    "NearerTo",
    "Piece",
    "PiecewiseFunction",
    "PreparedFunction",
    "check_compatible",
    "check_jacobian",
    "derivative_order",
    "derivative_order_formula",
    "eval_prepared",
    "image_ball",
    "image_matches",
    "is_unit_lipschitz",
    "lipschitz_exponent",
    "order_shift_violation",
    "prepare",
]


@dataclass(frozen=True)
class PreparedFunction:
    """``g = c_prime + (e * (x - c)**a)**(1/b)`` on ``source``.

    ``c`` is the center of the source fiber.  ``precision`` is the number of
    relative p-adic digits kept when a root has to be extracted.
    """

    a: int
    b: int
    e: Fraction
    c_prime: Fraction
    source: CellFiber
    target: CosetSpec
    precision: int = DEFAULT_PRECISION

    def __post_init__(self):
        object.__setattr__(self, "e", as_fraction(self.e))
        object.__setattr__(self, "c_prime", as_fraction(self.c_prime))
        if self.b < 1:
            raise ValueError("b must be positive")
        if math.gcd(self.a, self.b) != 1:
            raise ValueError(f"a={self.a} and b={self.b} are not coprime")
        if self.source.is_zero_cell and self.a != 0:
            raise ValueError("a must be 0 on a 0-cell")
        if self.target.p != self.source.p:
            raise ValueError("source and target use different primes")
        if self.target.is_zero:
            if self.a != 0 or self.e != 0:
                raise ValueError("a 0-cell target needs a = 0 and e = 0")
        elif self.e == 0:
            raise ValueError("e must be nonzero for a 1-cell target")

    @property
    def p(self) -> int:
        return self.source.p

    @property
    def c(self) -> Fraction:
        return self.source.center

    @property
    def exp_ratio(self) -> Fraction:
        return Fraction(self.a, self.b)

    def __call__(self, x: Scalar) -> Scalar:
        return eval_prepared(self, x)

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "e": format_rational(self.e),
                "c": format_rational(self.c), "c_prime": format_rational(self.c_prime),
                "source": self.source.to_dict(), "target": self.target.to_dict()}

    @classmethod
    def from_dict(cls, p: int, d: dict, precision: int = DEFAULT_PRECISION):
        source = CellFiber.from_dict(p, d["source"])
        if "c" in d and parse_rational(d["c"]) != source.center:
            raise ValueError("'c' disagrees with the source fiber center")
        return cls(int(d["a"]), int(d["b"]), parse_rational(d["e"]),
                   parse_rational(d["c_prime"]), source,
                   CosetSpec.from_dict(p, d["target"]), precision)


def prepare(a: int, b: int, e, source: CellFiber, c_prime=0, branch: Optional[int] = None,
            precision: int = DEFAULT_PRECISION) -> PreparedFunction:
    """Build a prepared function, inferring its target coset.

    ``branch`` picks the b-th root by its residue mod p (default: the least
    residue that is a root).  The target depth follows from the ball-size
    identity on the first admissible ball; ``n' = |a| n / b``.
    """
    p = source.p
    e, c_prime = as_fraction(e), as_fraction(c_prime)
    if source.is_zero_cell or a == 0:
        if a != 0:
            raise ValueError("a must be 0 on a 0-cell")
        if source.is_zero_cell or e == 0:
            return PreparedFunction(0, 1, 0, c_prime + e, source, CosetSpec(p, 0, 1, 1),
                                    precision)
        return PreparedFunction(0, 1, e, c_prime, source,
                                CosetSpec(p, e, source.m, 1), precision)
    if (a * source.coset.n) % b:
        raise ValueError(f"b={b} must divide a*n={a * source.coset.n}")
    orders = source.orders
    l0 = orders.first if orders.first is not None else orders.at_or_above(0)
    if l0 is None:
        l0 = orders.last
    w = source.ball_at(l0).canonical_point()
    t = e * (w - source.center) ** a
    if b == 1:
        z = t
    else:
        z = None
        residues = [branch] if branch is not None else range(1, p)
        for r in residues:
            try:
                z = hensel_root(t, b, p, AngularClass(p, 1, r % p), precision)
                break
            except NoRoot:
                continue
        if z is None:
            raise NoRoot(f"e*(x-c)^a = {t} has no {b}-th root with the requested branch")
    l_img = valuation(z, p)
    d = derivative_order_formula(a, b, e, p).at(l0)
    if d.denominator != 1:
        raise NonIntegerOrder(f"derivative order {d} at l={l0}")
    m_img = int(d) + l0 + source.m - l_img
    if m_img < 1:
        raise ValueError(f"image depth {m_img} < 1; function cannot be compatible")
    xi_img = lift_ac(ac(z, m_img, p)) * Fraction(p) ** l_img
    n_img = abs(a) * source.coset.n // b
    g = PreparedFunction(a, b, e, c_prime, source, CosetSpec(p, xi_img, m_img, n_img), precision)
    validate(g)
    return g


def validate(g: PreparedFunction) -> None:
    """Check the target coset on the canonical points of a few source balls."""
    for x in g.source.sample_points():
        y = eval_prepared(g, x) - g.c_prime
        if not g.target.contains(y):
            raise ValueError(f"g({x}) - c' is outside the target coset")


def eval_prepared(g: PreparedFunction, x: Scalar, precision: Optional[int] = None) -> Scalar:
    """Value of g at a point of its source fiber."""
    if not g.source.contains(x):
        raise OutsideDomain(f"{x} is not in the source fiber")
    if precision is not None and precision != g.precision:
        g = replace(g, precision=precision)
    return _evaluate(g, x)


@functools.lru_cache(maxsize=1 << 18)
def _evaluate(g: PreparedFunction, x: Scalar) -> Scalar:
    # cached so that repeated evaluation at one point yields one object;
    # verification treats identical objects as exactly equal
    if g.a == 0:
        return g.c_prime + g.e
    t = g.e * (x - g.c) ** g.a
    if g.b == 1:
        return g.c_prime + t
    target = AngularClass(g.p, g.target.m, g.target.ac_xi.residue)
    try:
        z = hensel_root(t, g.b, g.p, target, g.precision)
    except NoRoot as exc:
        raise NoRoot(f"ill-formed prepared function at x={x}: {exc}") from exc
    return g.c_prime + z


@dataclass(frozen=True)
class DerivativeOrder:
    """``constant_part + slope * l`` with l = ord(x - c)."""

    constant_part: Fraction
    slope: Fraction

    def at(self, l: int) -> Fraction:
        return self.constant_part + self.slope * l


def derivative_order_formula(a: int, b: int, e, p: int) -> DerivativeOrder:
    if a == 0:
        raise ValueError("a constant function has no finite derivative order")
    ratio = Fraction(a, b)
    const = (Fraction(valuation(as_fraction(e), p), b)
             + valuation(a, p) - valuation(b, p))
    return DerivativeOrder(const, ratio - 1)


def derivative_order(g: PreparedFunction, x: Scalar) -> int:
    if not g.source.contains(x):
        raise OutsideDomain(f"{x} is not in the source fiber")
    formula = derivative_order_formula(g.a, g.b, g.e, g.p)
    value = formula.at(valuation(x - g.c, g.p))
    if value.denominator != 1:
        raise NonIntegerOrder(f"derivative order {value} is not an integer")
    return int(value)


def _is_source_ball(g: PreparedFunction, B: Ball) -> bool:
    S = g.source
    return (not S.is_zero_cell and B.center == S.center and B.m == S.m
            and B.residue == S.residue and S.orders.contains(B.l))


def image_ball(g: PreparedFunction, B: Ball) -> Ball:
    """The ball ``g(B)`` predicted by ``l' + m' = ord(g') + l + m``."""
    if not _is_source_ball(g, B):
        raise OutsideDomain("not a ball of the source fiber")
    w = B.canonical_point()
    v = eval_prepared(g, w) - g.c_prime
    l_img = valuation(v, g.p)
    m_img = derivative_order(g, w) + B.l + B.m - l_img
    if m_img < 1:
        raise ValueError(f"predicted image depth {m_img} < 1")
    return Ball(g.p, l_img, g.c_prime, m_img, ac(v, m_img, g.p).residue)


def _max_linear(alpha: Fraction, beta: Fraction, lo: Optional[int], hi: Optional[int]):
    """max of alpha + beta*l over lo <= l <= hi (None = unbounded)."""
    if beta > 0:
        return PLUS_INFINITY if hi is None else alpha + beta * hi
    if beta < 0:
        return PLUS_INFINITY if lo is None else alpha + beta * lo
    return alpha


def lipschitz_exponent(g: PreparedFunction):
    """Exact ``sup ord(x-y) - ord(g(x)-g(y))`` over pairs in the source fiber.

    Returns None when there are no pairs to compare or g is constant, and
    PLUS_INFINITY when the supremum is unbounded.  Within one ball the
    value is ``-ord(g')`` (compatibility assumed); across two balls of
    orders l1 < l2 it is ``l1 - min(l1', l2')``.
    """
    S = g.source
    if S.is_zero_cell or g.a == 0:
        return None
    orders = S.orders
    n = S.coset.n
    first, last = orders.first, orders.last
    formula = derivative_order_formula(g.a, g.b, g.e, g.p)
    ord_e = valuation(g.e, g.p)
    # l'(l) = (ord(e) + a*l) / b
    img0, img1 = Fraction(ord_e, g.b), Fraction(g.a, g.b)
    best = _max_linear(-formula.constant_part, -formula.slope, first, last)
    if g.a > 0:
        hi = None if last is None else last - n
        if first is None or hi is None or hi >= first:
            best = max(best, _max_linear(-img0, 1 - img1, first, hi))
    else:
        lo = None if first is None else first + n
        if lo is None or last is None or lo <= last:
            best = max(best, _max_linear(-img0 - n, 1 - img1, lo, last))
    if best is PLUS_INFINITY:
        return best
    return int(best)


def is_unit_lipschitz(g: PreparedFunction) -> bool:
    e = lipschitz_exponent(g)
    return e is None or (e is not PLUS_INFINITY and e <= 0)


def order_shift_violation(points: Sequence, values: Sequence, shift: int, p: int):
    """Find a pair breaking ``ord(v_i - v_j) = ord(x_i - x_j) + shift``.

    Works level by level: at each j the classes of the points mod p**j must
    correspond one-to-one with the classes of the values mod p**(j+shift).
    That is equivalent to the identity for every pair, at O(n) per level.
    Returns None or a tuple ``(i, j)`` of indices into ``points``.
    """
    n = len(points)
    if n < 2:
        return None
    x0 = points[0]
    level = min(valuation(x - x0, p) for x in points[1:])
    while True:
        by_x: Dict[Fraction, int] = {}
        by_v: Dict[Fraction, int] = {}
        for i in range(n):
            kx = reduce_mod(points[i], level, p)
            kv = reduce_mod(values[i], level + shift, p)
            if kx in by_x:
                k = by_x[kx]
                if reduce_mod(values[k], level + shift, p) != kv:
                    return (k, i)
            else:
                by_x[kx] = i
            if kv in by_v:
                k = by_v[kv]
                if reduce_mod(points[k], level, p) != kx:
                    return (k, i)
            else:
                by_v[kv] = i
        if len(by_x) == n:
            return None
        level += 1


def _ord_or_none(x, p):
    try:
        v = valuation(x, p)
    except Exception:
        return None
    return None if v is PLUS_INFINITY else v


@dataclass
class JacobianReport:
    passed: bool
    ball: Ball
    derivative_order: Optional[int]
    points: int
    exhaustive: bool
    injective: bool
    witness: Optional[Tuple[Scalar, Scalar]] = None
    detail: str = ""

    def to_dict(self) -> dict:
        out = {"passed": self.passed, "ball": self.ball.to_dict(),
               "derivative_order": self.derivative_order, "points": self.points,
               "exhaustive": self.exhaustive, "injective": self.injective,
               "detail": self.detail}
        if self.witness is not None:
            out["witness"] = [scalar_to_json(w) for w in self.witness]
        return out


def ball_points(B: Ball, digits: int, samples: Optional[int] = None,
                seed: int = 0, cap: int = 4096) -> Tuple[list, bool]:
    """Representatives of B: all classes mod p**(l+m+digits) when that is at
    most ``cap`` points, otherwise a seeded sample of ``samples`` points."""
    p = B.p
    w = B.canonical_point()
    step = Fraction(p) ** (B.l + B.m)
    count = p**digits
    if count <= cap:
        return [w + step * t for t in range(count)], True
    rng = random.Random(seed)
    k = samples or cap
    ts = sorted(set(rng.randrange(count) for _ in range(k)) | {0})
    return [w + step * t for t in ts], False


def check_jacobian(g: PreparedFunction, B: Ball, samples: Optional[int] = None,
                   seed: int = 0, digits: int = 4, cap: int = 4096) -> JacobianReport:
    """Verify the Jacobian property of g on B against the symbolic ord(g').

    Checks that ord(g') is constant on B and finite, and that
    ``ord(g(x) - g(y)) = ord(g') + ord(x - y)`` for every pair of the
    enumerated (or sampled) points, which also gives injectivity.
    """
    points, exhaustive = ball_points(B, digits, samples, seed, cap)
    if g.a == 0:
        return JacobianReport(False, B, None, len(points), exhaustive, False,
                              (points[0], points[1]), "constant function is not a bijection")
    orders = {derivative_order(g, x) for x in points}
    if len(orders) != 1:
        return JacobianReport(False, B, None, len(points), exhaustive, True, None,
                              f"derivative order not constant: {sorted(orders)}")
    d = orders.pop()
    values = [eval_prepared(g, x) for x in points]
    bad = order_shift_violation(points, values, d, g.p)
    injective = True
    if bad is None:
        return JacobianReport(True, B, d, len(points), exhaustive, True)
    i, j = bad
    x, y = points[i], points[j]
    dv = values[i] - values[j]
    got = _ord_or_none(dv, g.p)
    if got is None and (values[i] is values[j] or dv == 0):
        injective = False
    detail = (f"ord(g(x)-g(y)) = {got if got is not None else '>=' + str(_absprec(dv))}"
              f" but ord(g') + ord(x-y) = {d + valuation(x - y, g.p)}")
    return JacobianReport(False, B, d, len(points), exhaustive, injective, (x, y), detail)


def _absprec(v):
    return v.absprec if isinstance(v, PadicApprox) else "inf"


def image_matches(g: PreparedFunction, B: Ball, k: int = 2) -> Tuple[bool, Ball, str]:
    """Compare g(B) with the predicted image ball modulo p**(l'+m'+k)."""
    target = image_ball(g, B)
    p = g.p
    modulus = target.l + target.m + k
    xs, _ = ball_points(B, k, cap=p**k)
    got = {reduce_mod(eval_prepared(g, x), modulus, p) for x in xs}
    w = target.canonical_point()
    step = Fraction(p) ** (target.l + target.m)
    want = {reduce_mod(w + step * s, modulus, p) for s in range(p**k)}
    if got == want:
        return True, target, ""
    return False, target, (f"image has {len(got)} classes mod {p}^{modulus}, "
                           f"{len(got & want)} inside the predicted ball of {len(want)}")


@dataclass
class CompatibilityReport:
    passed: bool
    entries: List[dict] = field(default_factory=list)
    detail: str = ""

    def to_dict(self) -> dict:
        return {"passed": self.passed, "detail": self.detail, "entries": self.entries}


def check_compatible(g: PreparedFunction, window: Tuple[int, int] = (0, 3),
                     samples: Optional[int] = None, seed: int = 0,
                     digits: int = 4, cap: int = 4096) -> CompatibilityReport:
    """Check every source ball in the window maps onto a target ball with the
    Jacobian property in both directions."""
    if g.target.is_zero:
        return CompatibilityReport(True, [], "image is a 0-cell")
    if g.source.is_zero_cell:
        return CompatibilityReport(True, [], "source is a 0-cell")
    entries, ok = [], True
    tgt = g.target
    for B in g.source.balls(*window):
        entry = {"l": B.l}
        try:
            img = image_ball(g, B)
        except (ValueError, OutsideDomain) as exc:
            entries.append({**entry, "passed": False, "detail": str(exc)})
            ok = False
            continue
        in_target = (img.m == tgt.m and img.residue == tgt.ac_xi.residue
                     and (img.l - tgt.ord_xi) % tgt.n == 0)
        jac = check_jacobian(g, B, samples, seed, digits, cap)
        onto, _, onto_detail = image_matches(g, B)
        inverse_ok = True
        if jac.passed:
            points, _ = ball_points(B, digits, samples, seed, cap)
            values = [eval_prepared(g, x) for x in points]
            inverse_ok = order_shift_violation(values, points, -jac.derivative_order, g.p) is None
        passed = in_target and jac.passed and onto and inverse_ok
        ok = ok and passed
        entries.append({**entry, "passed": passed, "image": img.to_dict(),
                        "image_in_target": in_target, "jacobian": jac.to_dict(),
                        "onto_image": onto, "inverse_jacobian": inverse_ok,
                        "detail": onto_detail})
    return CompatibilityReport(ok, entries)


# --- piecewise carrier -----------------------------------------------------

@dataclass(frozen=True)
class Everywhere:
    def contains(self, x) -> bool:
        return True

    def to_dict(self) -> dict:
        return {"kind": "everywhere"}


@dataclass(frozen=True)
class Complement:
    domain: object

    def contains(self, x) -> bool:
        return not self.domain.contains(x)

    def to_dict(self) -> dict:
        return {"kind": "complement", "domain": domain_to_dict(self.domain)}


@dataclass(frozen=True)
class NearerTo:
    """``{x : d(x, first) <= d(x, second)}``; ties go to ``first``."""

    first: PointSet
    second: PointSet

    def contains(self, x) -> bool:
        return self.first.distance(x) <= self.second.distance(x)

    def to_dict(self) -> dict:
        return {"kind": "nearer", "first": self.first.to_dict(),
                "second": self.second.to_dict()}


@dataclass(frozen=True)
class Constant:
    value: object

    def __call__(self, x):
        return self.value

    def to_dict(self) -> dict:
        return {"kind": "constant", "value": scalar_to_json(self.value)}


@dataclass(frozen=True)
class Piece:
    domain: object
    rule: Callable
    provenance: str = ""

    def to_dict(self) -> dict:
        return {"domain": domain_to_dict(self.domain), "rule": rule_to_dict(self.rule),
                "provenance": self.provenance}


@dataclass(frozen=True)
class PiecewiseFunction:
    """Ordered pieces with pairwise disjoint domains; evaluation is first match."""

    pieces: Tuple[Piece, ...]

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))

    def __call__(self, x):
        for piece in self.pieces:
            if piece.domain.contains(x):
                return piece.rule(x)
        raise OutsideDomain(f"no piece covers {x}")

    def matching(self, x) -> List[int]:
        return [i for i, piece in enumerate(self.pieces) if piece.domain.contains(x)]

    def to_dict(self) -> dict:
        return {"pieces": [piece.to_dict() for piece in self.pieces]}


def domain_to_dict(domain) -> dict:
    if isinstance(domain, CellFiber):
        return {"kind": "fiber", **domain.to_dict()}
    return domain.to_dict()


def rule_to_dict(rule) -> dict:
    if isinstance(rule, PreparedFunction):
        return {"kind": "prepared", **rule.to_dict()}
    return rule.to_dict()


DOMAIN_LOADERS: Dict[str, Callable] = {}
RULE_LOADERS: Dict[str, Callable] = {}


def domain_from_dict(p: int, d: dict, precision: int = DEFAULT_PRECISION):
    kind = d["kind"]
    if kind in ("ball", "point", "fiber"):
        return constituent_from_dict(p, d)
    if kind == "pointset":
        return PointSet.from_dict(p, d)
    if kind == "everywhere":
        return Everywhere()
    if kind == "complement":
        return Complement(domain_from_dict(p, d["domain"], precision))
    if kind == "nearer":
        return NearerTo(PointSet.from_dict(p, d["first"]), PointSet.from_dict(p, d["second"]))
    if kind in DOMAIN_LOADERS:
        return DOMAIN_LOADERS[kind](p, d, precision)
    raise ValueError(f"unknown domain kind {kind!r}")


def rule_from_dict(p: int, d: dict, precision: int = DEFAULT_PRECISION):
    kind = d["kind"]
    if kind == "prepared":
        return PreparedFunction.from_dict(p, d, precision)
    if kind == "constant":
        return Constant(scalar_from_json(d["value"]))
    if kind in RULE_LOADERS:
        return RULE_LOADERS[kind](p, d, precision)
    raise ValueError(f"unknown rule kind {kind!r}")


def piecewise_from_dict(p: int, d: dict, precision: int = DEFAULT_PRECISION) -> PiecewiseFunction:
    return PiecewiseFunction(tuple(
        Piece(domain_from_dict(p, item["domain"], precision),
              rule_from_dict(p, item["rule"], precision),
              item.get("provenance", ""))
        for item in d["pieces"]))
