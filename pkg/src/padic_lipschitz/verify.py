"""Exhaustive and sampled certification of Lipschitz constants and identities.

The central routine is :func:`max_ratio`, which computes the exact maximum
of ``ord(x - y) - ord(f(x) - f(y))`` over all pairs of a point list without
enumerating pairs.  Group the points by their class modulo ``p**j``; for a
class C with representative r put ``M_C = min ord(f(x) - f(r))``.  Every pair
in C with ``ord(x - y) = j`` has ``ord(f(x) - f(y)) >= M_C`` and the pair
(r, argmin) attains at least ``j - M_C``, so the maximum over pairs equals
the maximum of ``j - M_C`` over all levels and classes.
:func:`brute_force_ratio` is the quadratic reference used to test it.

Values that are zero to their precision only give ``ord >= absprec``.  They
contribute an upper bound, never an attained ratio, and a check passes only
if that upper bound is within the claim.
"""
from __future__ import annotations

import functools
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

from .errors import EmptyDomain, IndeterminateValuation, InsufficientPrecision
from .functions import (
    PreparedFunction,
    ball_points,
    check_jacobian,
    derivative_order,
    eval_prepared,
    image_ball,
    image_matches,
)
from .geometry import Ball, CellFiber, Point, PointSet
from .padic import (
    DEFAULT_PRECISION,
    PLUS_INFINITY,
    PadicApprox,
    Scalar,
    format_rational,
    reduce_mod,
    scalar_to_json,
    valuation,
)

__all__ = [
    "CheckResult",
    "Lattice",
    "LipschitzEstimate",
    "SampleConfig",
    "VerificationReport",
    "brute_force_ratio",
    "case1_chain_violations",
    "closure_oracle",
    "estimate_lipschitz",
    "max_ratio",
    "nearest_point_oracle",
    "sample_points",
    "verify_identities",
]


@dataclass(frozen=True)
class SampleConfig:
    """Deterministic sampling and exhaustion settings.

    ``exhaust`` is the exponent k of the modulus ``p**k`` used for exhaustive
    enumeration; it is used whenever the enumeration has at most ``cap``
    points.  ``quota`` caps the samples drawn per valuation stratum.
    """

    seed: int = 0
    samples: int = 2000
    precision: int = DEFAULT_PRECISION
    l_window: Tuple[int, int] = (0, 3)
    quota: Optional[int] = None
    exhaust: int = 5
    cap: int = 20000

    def to_dict(self) -> dict:
        return {"seed": self.seed, "samples": self.samples, "precision": self.precision,
                "l_window": list(self.l_window), "quota": self.quota,
                "exhaust": self.exhaust, "cap": self.cap}


@dataclass(frozen=True)
class Lattice:
    """``offset + p**lo * t`` for ``0 <= t < p**digits``: all classes of
    ``offset + p**lo Z_p`` modulo ``p**(lo + digits)``."""

    p: int
    lo: int
    digits: int
    offset: Fraction = Fraction(0)

    def __len__(self):
        return self.p**self.digits

    def points(self) -> List[Fraction]:
        step = Fraction(self.p) ** self.lo
        return [self.offset + step * t for t in range(self.p**self.digits)]

    def contains(self, x) -> bool:
        v = valuation(x - self.offset, self.p)
        return v is PLUS_INFINITY or v >= self.lo


def _pair_ord(u, v, p: int):
    """(ord(u - v), exact).  For an indeterminate difference returns the
    absolute precision with exact=False, meaning ``ord >= that``."""
    if u is v:
        return PLUS_INFINITY, True
    d = u - v
    if isinstance(d, PadicApprox) and d.is_indeterminate:
        return d.valuation, False
    return valuation(d, p), True


@dataclass
class RatioResult:
    """Exponents of the maximal ratio: ``attained`` is realised by ``witness``;
    ``bound`` is a certified upper bound (equal unless precision ran out).
    None stands for the empty maximum (ratio 0)."""

    attained: Optional[int]
    bound: Optional[int]
    witness: Optional[Tuple[Scalar, Scalar]]
    indeterminate: int


def _max_opt(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return max(a, b)


def max_ratio(points: Sequence[Scalar], values: Sequence[Scalar], p: int) -> RatioResult:
    """Exact ``max ord(x-y) - ord(f(x)-f(y))`` over pairs of distinct points."""
    n = len(points)
    attained = bound = None
    witness = None
    indeterminate = 0
    if n < 2:
        return RatioResult(None, None, None, 0)
    level = min(valuation(x - points[0], p) for x in points[1:])
    while True:
        groups = {}
        for i, x in enumerate(points):
            groups.setdefault(reduce_mod(x, level, p), []).append(i)
        if len(groups) == n:
            break
        for members in groups.values():
            if len(members) < 2:
                continue
            r = members[0]
            for i in members[1:]:
                o, exact = _pair_ord(values[i], values[r], p)
                if o is PLUS_INFINITY:
                    continue
                if exact:
                    # the actual pair exponent may exceed level - o; use it
                    e = valuation(points[i] - points[r], p) - o
                    if attained is None or e > attained:
                        attained, witness = e, (points[r], points[i])
                    bound = _max_opt(bound, level - o)
                else:
                    indeterminate += 1
                    bound = _max_opt(bound, level - o)
        level += 1
    bound = _max_opt(bound, attained)
    return RatioResult(attained, bound, witness, indeterminate)


def brute_force_ratio(points: Sequence[Scalar], values: Sequence[Scalar], p: int):
    """Quadratic reference for :func:`max_ratio` on exact values: (exponent, witness)."""
    best, witness = None, None
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            d = values[i] - values[j]
            if d == 0:
                continue
            e = valuation(points[i] - points[j], p) - valuation(d, p)
            if best is None or e > best:
                best, witness = e, (points[i], points[j])
    return best, witness


def _power(p: int, e: Optional[int]) -> Fraction:
    return Fraction(0) if e is None else Fraction(p) ** e


@dataclass
class LipschitzEstimate:
    p: int
    attained_exponent: Optional[int]
    bound_exponent: Optional[int]
    witness: Optional[Tuple[Scalar, Scalar]]
    points: int
    exhaustive: bool
    indeterminate: int
    claimed: Optional[Fraction] = None

    @property
    def ratio(self) -> Fraction:
        """The largest ratio attained by a pair; 0 when no pair separates."""
        return _power(self.p, self.attained_exponent)

    @property
    def bound(self) -> Fraction:
        return _power(self.p, self.bound_exponent)

    @property
    def passed(self) -> bool:
        return self.claimed is None or self.bound <= self.claimed

    def to_dict(self) -> dict:
        out = {"ratio": format_rational(self.ratio), "bound": format_rational(self.bound),
               "points": self.points, "exhaustive": self.exhaustive,
               "indeterminate_pairs": self.indeterminate, "passed": self.passed}
        if self.claimed is not None:
            out["claimed"] = format_rational(self.claimed)
        if self.witness is not None:
            out["witness"] = [scalar_to_json(w) for w in self.witness]
        return out


# --- point generation ----------------------------------------------------------

def _constituent_points(c, cfg: SampleConfig, p: int, rng: Optional[random.Random],
                        per_stratum: int) -> List[Fraction]:
    """Exhaustive (rng None) or sampled members of one constituent, mod p**exhaust."""
    if isinstance(c, Point):
        return [c.value]
    if isinstance(c, CellFiber):
        if c.is_zero_cell:
            return [c.center]
        balls = c.balls(*cfg.l_window)
    else:
        balls = [c]
    out = []
    for B in balls:
        w = B.canonical_point()
        step = Fraction(p) ** (B.l + B.m)
        digits = cfg.exhaust - B.l - B.m
        if rng is None:
            count = p**max(digits, 0)
            out.extend(w + step * t for t in range(count))
        else:
            span = p**max(digits, cfg.precision // 2)
            out.append(w)
            out.extend(w + step * rng.randrange(span) for _ in range(per_stratum - 1))
    return out


def _dedupe(points: Iterable[Fraction]) -> List[Fraction]:
    seen, out = set(), []
    for x in points:
        if x not in seen:
            seen.add(x)
            out.append(x)
    return out


def exhaustive_points(domain: Union[PointSet, Lattice, None], cfg: SampleConfig, p: int
                      ) -> Optional[List[Fraction]]:
    """All representatives mod ``p**exhaust`` in the window, or None if over cap."""
    if domain is None:
        domain = Lattice(p, cfg.l_window[0], cfg.exhaust - cfg.l_window[0])
    if isinstance(domain, Lattice):
        return domain.points() if len(domain) <= cfg.cap else None
    pts = _dedupe(x for c in domain for x in _constituent_points(c, cfg, p, None, 0))
    return pts if len(pts) <= cfg.cap else None


def sample_points(domain: Union[PointSet, Lattice, None], cfg: SampleConfig, p: int
                  ) -> List[Fraction]:
    """Seeded sample stratified by valuation over the window, digits uniform.

    Strata are the balls of each fiber in the window (one per order) or, for
    a lattice, the annuli ``ord(x - offset) = l``.
    """
    rng = random.Random(cfg.seed)
    lo, hi = cfg.l_window
    if domain is None or isinstance(domain, Lattice):
        offset = Fraction(0) if domain is None else domain.offset
        lo = lo if domain is None else max(lo, domain.lo)
        strata = list(range(lo, hi + 1))
        quota = cfg.quota or max(1, cfg.samples // (len(strata) + 1))
        pts = [offset]
        for l in strata:
            scale = Fraction(p) ** l
            for _ in range(quota):
                u = rng.randrange(1, p**cfg.exhaust)
                while u % p == 0:
                    u = rng.randrange(1, p**cfg.exhaust)
                pts.append(offset + scale * (u + p**cfg.exhaust * rng.randrange(p**8)))
        return _dedupe(pts)
    strata = 0
    for c in domain:
        if isinstance(c, CellFiber) and not c.is_zero_cell:
            strata += len(c.balls(lo, hi))
        else:
            strata += 1
    quota = cfg.quota or max(1, cfg.samples // max(strata, 1))
    return _dedupe(x for c in domain for x in _constituent_points(c, cfg, p, rng, quota))


def domain_points(domain, cfg: SampleConfig, p: int) -> Tuple[List[Fraction], bool]:
    pts = exhaustive_points(domain, cfg, p)
    if pts is not None:
        return pts, True
    return sample_points(domain, cfg, p), False


def estimate_lipschitz(f: Callable, domain: Union[PointSet, Lattice, None], cfg: SampleConfig,
                       claimed=None, p: Optional[int] = None) -> LipschitzEstimate:
    """Largest ``|f(x)-f(y)| / |x-y|`` over exhausted (or sampled) pairs.

    ``domain`` None means the whole window lattice ``p**lo Z_p``.
    """
    if p is None:
        p = getattr(f, "p", None) or getattr(domain, "p", None)
        if p is None and isinstance(domain, PointSet) and len(domain):
            c = domain.constituents[0]
            p = c.p
    if p is None:
        raise ValueError("cannot infer the prime")
    points, exhaustive = domain_points(domain, cfg, p)
    values = [f(x) for x in points]
    r = max_ratio(points, values, p)
    return LipschitzEstimate(p, r.attained, r.bound, r.witness, len(points), exhaustive,
                             r.indeterminate, None if claimed is None else Fraction(claimed))


# --- nearest-point oracle ------------------------------------------------------

def nearest_point_oracle(X: PointSet, f: Callable) -> Callable:
    """``x -> f(nearest(x))``; ties go to the first constituent, then to the
    canonical point of the nearest ball."""
    if not isinstance(X, PointSet):
        X = PointSet(tuple(X))
    if not len(X):
        raise EmptyDomain("the oracle needs a nonempty domain")

    @functools.lru_cache(maxsize=None)
    def oracle(x):
        _, y = X.nearest(x)
        return f(y)

    return oracle


def closure_oracle(g: PreparedFunction) -> Callable:
    """Nearest-point oracle of a prepared function on the closure of its fiber.

    A fiber unbounded above has its center as a limit point; it is added as
    a point with value c', the limit of g there.
    """
    S = g.source
    if S.is_zero_cell or S.l_max is not None:
        return nearest_point_oracle(PointSet((S,)), g)
    closure = PointSet((Point(S.p, S.center), S))

    def f(x):
        return g.c_prime if x == S.center else g(x)

    return nearest_point_oracle(closure, f)


# --- reports -------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    passed: bool
    count: int
    witness: Optional[Tuple[Scalar, Scalar]] = None
    ratio: Optional[Fraction] = None
    detail: str = ""

    def to_dict(self) -> dict:
        out = {"name": self.name, "status": "pass" if self.passed else "fail",
               "count": self.count, "detail": self.detail}
        out["witness"] = None if self.witness is None else [scalar_to_json(w) for w in self.witness]
        out["ratio"] = None if self.ratio is None else format_rational(self.ratio)
        return out


@dataclass
class VerificationReport:
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"overall": "pass" if self.passed else "fail",
                "checks": [c.to_dict() for c in self.checks]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def summary(self) -> str:
        lines = [f"{'PASS' if c.passed else 'FAIL'} {c.name} ({c.count})"
                 + (f": {c.detail}" if c.detail and not c.passed else "")
                 for c in self.checks]
        lines.append(f"overall: {'pass' if self.passed else 'fail'}")
        return "\n".join(lines)


def _ball_digits(B: Ball, cfg: SampleConfig) -> int:
    return max(2, cfg.exhaust - B.l - B.m)


def verify_identities(g: PreparedFunction, cfg: SampleConfig = SampleConfig()
                      ) -> VerificationReport:
    """Derivative-order, ball-image, order-of-g and chain-rule checks on
    every source ball in the window."""
    report = VerificationReport()
    S = g.source
    if S.is_zero_cell or g.a == 0:
        report.checks.append(CheckResult("constant", True, 0, detail="constant on its fiber"))
        return report
    p = g.p
    ord_e = valuation(g.e, p)
    ord_a, ord_b = valuation(g.a, p), valuation(g.b, p)
    for B in S.balls(*cfg.l_window):
        tag = f"l={B.l}"
        digits = _ball_digits(B, cfg)
        jac = check_jacobian(g, B, cfg.samples, cfg.seed, digits, cfg.cap)
        report.checks.append(CheckResult(f"jacobian[{tag}]", jac.passed, jac.points,
                                         jac.witness, detail=jac.detail))
        try:
            ok, img, detail = image_matches(g, B)
            additive = img.l + img.m == derivative_order(g, B.canonical_point()) + B.l + B.m
            report.checks.append(CheckResult(f"image_ball[{tag}]", ok and additive, p**2, detail=detail))
        except (ValueError, InsufficientPrecision) as exc:
            report.checks.append(CheckResult(f"image_ball[{tag}]", False, 0, detail=str(exc)))
        points, _ = ball_points(B, digits, cfg.samples, cfg.seed, cfg.cap)
        bad_ord = bad_chain = None
        for x in points:
            l = valuation(x - g.c, p)
            z = eval_prepared(g, x) - g.c_prime
            oz = valuation(z, p)
            if bad_ord is None and Fraction(ord_e + g.a * l, g.b) != oz:
                bad_ord = x
            # differentiating z**b = e (x-c)**a:  b z**(b-1) z' = e a (x-c)**(a-1)
            lhs = ord_e + ord_a + (g.a - 1) * l
            if bad_chain is None and lhs != ord_b + (g.b - 1) * oz + derivative_order(g, x):
                bad_chain = x
        report.checks.append(CheckResult(
            f"ord_g[{tag}]", bad_ord is None, len(points),
            None if bad_ord is None else (bad_ord, bad_ord),
            detail="" if bad_ord is None else f"ord(g - c') mismatch at {format_rational(bad_ord)}"))
        report.checks.append(CheckResult(
            f"chain_rule[{tag}]", bad_chain is None, len(points),
            None if bad_chain is None else (bad_chain, bad_chain),
            detail="" if bad_chain is None else f"mismatch at {format_rational(bad_chain)}"))
    return report


def case1_chain_violations(ext: Callable, S: CellFiber, points: Sequence[Fraction],
                           p: int) -> List[Tuple[Fraction, Fraction]]:
    """Pairs (t1 in S, t2 outside the annuli of S) with
    ``|ext(t1) - ext(t2)| > |t1 - c|``; empty when the chain holds."""
    inside = [x for x in points if S.contains(x)]
    outside = [x for x in points
               if x == S.center or not S.orders.contains(valuation(x - S.center, p))]
    if not inside or not outside:
        return []
    out_vals = list(dict.fromkeys(ext(x) for x in outside))
    bad = []
    for t1 in inside:
        l1 = valuation(t1 - S.center, p)
        v1 = ext(t1)
        for v2 in out_vals:
            o, _ = _pair_ord(v1, v2, p)
            if o < l1:
                t2 = next(x for x in outside if ext(x) == v2)
                bad.append((t1, t2))
                break
    return bad
