"""Exact arithmetic in Q_p.

Values come in two flavours.  Plain ``int``/``Fraction`` objects are exact
rationals; their valuation and angular components are computed exactly.
:class:`PadicApprox` holds a value known only modulo a power of p, and is
what root extraction produces.  Precision bookkeeping on approximations is
pessimistic: the reported absolute precision is always provable.

The residue field has p elements, so the norm is ``|x| = p**(-ord(x))``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .errors import (
    AmbiguousRoot,
    DivisionByZero,
    IndeterminateValuation,
    InsufficientPrecision,
    NoRoot,
    PadicError,
    UnsupportedRamifiedRoot,
    ZeroClass,
)

__all__ = [
    "DEFAULT_PRECISION",
    "PLUS_INFINITY",
    "AngularClass",
    "PadicApprox",
    "Scalar",
    "ac",
    "arith",
    "as_fraction",
    "format_rational",
    "hensel_root",
    "is_prime",
    "lift_ac",
    "norm",
    "ord",
    "parse_rational",
    "reduce_mod",
    "scalar_from_json",
    "scalar_to_json",
    "to_approx",
    "valuation",
    "valuation_array",
]

DEFAULT_PRECISION = 40


class _PlusInfinity:
    """ord(0): larger than every integer, absorbing under addition."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "PLUS_INFINITY"

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("PLUS_INFINITY")

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True

    def __add__(self, other):
        return self

    __radd__ = __add__

    def __sub__(self, other):
        if other is self:
            raise PadicError("PLUS_INFINITY - PLUS_INFINITY is undefined")
        return self

    def __reduce__(self):
        return (_PlusInfinity, ())


PLUS_INFINITY = _PlusInfinity()

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)(?:\s*/\s*(\d+))?\s*$")


def parse_rational(text) -> Fraction:
    """Parse ``"a/b"`` or ``"a"`` (optional sign, decimal integers)."""
    if isinstance(text, bool):
        raise ValueError(f"not a rational literal: {text!r}")
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    match = _RATIONAL_RE.match(str(text))
    if not match:
        raise ValueError(f"not a rational literal: {text!r}")
    num = int(match.group(1))
    den = int(match.group(2)) if match.group(2) else 1
    if den == 0:
        raise ValueError(f"zero denominator in {text!r}")
    return Fraction(num, den)


def format_rational(x) -> str:
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int) and not isinstance(x, bool):
        return Fraction(x)
    if isinstance(x, str):
        return parse_rational(x)
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    return all(n % d for d in range(3, math.isqrt(n) + 1, 2))


def _int_ord(n: int, p: int) -> int:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def _split(x: Fraction, p: int):
    """x = p**v * num/den with num, den prime to p; x must be nonzero."""
    num, den = x.numerator, x.denominator
    vn = _int_ord(num, p)
    vd = _int_ord(den, p)
    return vn - vd, num // p**vn, den // p**vd


@dataclass(frozen=True)
class PadicApprox:
    """``p**valuation * unit`` known modulo ``p**(valuation + precision)``.

    A value indistinguishable from zero is stored with ``unit == 0`` and
    ``precision == 0``; its ``valuation`` field then holds the absolute
    precision to which it is known to vanish.
    """

    p: int
    valuation: int
    unit: int
    precision: int

    def __post_init__(self):
        if self.precision < 0:
            raise ValueError("negative precision")
        if self.unit == 0:
            if self.precision != 0:
                raise ValueError("zero approximation must carry precision 0")
        else:
            if not 0 < self.unit < self.p**self.precision:
                raise ValueError("unit out of range")
            if self.unit % self.p == 0:
                raise ValueError("unit part is divisible by p")

    @property
    def absprec(self) -> int:
        return self.valuation + self.precision

    @property
    def is_indeterminate(self) -> bool:
        return self.unit == 0

    @property
    def digits(self) -> list:
        out, u = [], self.unit
        for _ in range(self.precision):
            u, d = divmod(u, self.p)
            out.append(d)
        return out

    def representative(self) -> Fraction:
        """The least non-negative rational in this residue class."""
        return Fraction(self.unit) * Fraction(self.p) ** self.valuation

    def __repr__(self):
        if self.is_indeterminate:
            return f"PadicApprox(O({self.p}^{self.valuation}))"
        return (f"PadicApprox({self.p}^{self.valuation} * {self.unit}"
                f" + O({self.p}^{self.absprec}))")

    def __str__(self):
        if self.is_indeterminate:
            return f"O({self.p}^{self.valuation})"
        terms = [f"{d}*{self.p}^{self.valuation + i}"
                 for i, d in enumerate(self.digits) if d]
        return " + ".join(terms) + f" + O({self.p}^{self.absprec})"

    def __neg__(self):
        if self.is_indeterminate:
            return self
        mod = self.p**self.precision
        return PadicApprox(self.p, self.valuation, (-self.unit) % mod, self.precision)

    def __add__(self, other):
        return arith("add", self, other)

    def __radd__(self, other):
        return arith("add", other, self)

    def __sub__(self, other):
        return arith("sub", self, other)

    def __rsub__(self, other):
        return arith("sub", other, self)

    def __mul__(self, other):
        return arith("mul", self, other)

    def __rmul__(self, other):
        return arith("mul", other, self)

    def __truediv__(self, other):
        return arith("div", self, other)

    def __rtruediv__(self, other):
        return arith("div", other, self)

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return arith("div", 1, self**(-k))
        result = to_approx(1, self.p, self.precision) if k == 0 else self
        for _ in range(k - 1):
            result = arith("mul", result, self)
        return result


Scalar = Union[int, Fraction, PadicApprox]


def _prime_of(x, p: Optional[int]) -> int:
    if isinstance(x, PadicApprox):
        if p is not None and p != x.p:
            raise PadicError(f"mixed primes {p} and {x.p}")
        return x.p
    if p is None:
        raise PadicError("a prime must be given for exact rationals")
    return p


def valuation(x: Scalar, p: Optional[int] = None):
    """ord(x); PLUS_INFINITY for exact zero."""
    if isinstance(x, PadicApprox):
        if x.is_indeterminate:
            raise IndeterminateValuation(f"{x!r} is zero to its precision")
        return x.valuation
    p = _prime_of(x, p)
    x = as_fraction(x)
    if x == 0:
        return PLUS_INFINITY
    return _split(x, p)[0]


ord = valuation


def norm(x, p: Optional[int] = None) -> Fraction:
    """``p**(-ord(x))``, 0 for zero; tuples take the max over components."""
    if isinstance(x, (tuple, list)):
        return max((norm(xi, p) for xi in x), default=Fraction(0))
    v = valuation(x, p)
    if v is PLUS_INFINITY:
        return Fraction(0)
    return Fraction(_prime_of(x, p)) ** (-v)


@dataclass(frozen=True)
class AngularClass:
    """An element of (Z/p^depth)^x, or 0 for the zero element."""

    p: int
    depth: int
    residue: int

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if not 0 <= self.residue < self.p**self.depth:
            raise ValueError("residue out of range")
        if self.residue and self.residue % self.p == 0:
            raise ValueError("nonzero residue must be a unit")

    @property
    def is_zero(self) -> bool:
        return self.residue == 0

    def __mul__(self, other):
        if not isinstance(other, AngularClass) or other.p != self.p or other.depth != self.depth:
            return NotImplemented
        return AngularClass(self.p, self.depth,
                            self.residue * other.residue % self.p**self.depth)

    def inverse(self) -> "AngularClass":
        if self.is_zero:
            raise ZeroClass("zero class has no inverse")
        mod = self.p**self.depth
        return AngularClass(self.p, self.depth, pow(self.residue, -1, mod))


def ac(x: Scalar, m: int, p: Optional[int] = None) -> AngularClass:
    """Angular component of depth m: the unit part of x modulo p**m."""
    p = _prime_of(x, p)
    mod = p**m
    if isinstance(x, PadicApprox):
        if x.precision < m:
            raise InsufficientPrecision(
                f"ac of depth {m} needs {m} digits, value has {x.precision}")
        return AngularClass(p, m, x.unit % mod)
    x = as_fraction(x)
    if x == 0:
        return AngularClass(p, m, 0)
    _, num, den = _split(x, p)
    return AngularClass(p, m, num * pow(den, -1, mod) % mod)


def lift_ac(a: AngularClass) -> int:
    """Canonical representative of a nonzero class: the least positive integer."""
    if a.is_zero:
        raise ZeroClass("the zero class has no unit representative")
    return a.residue


def to_approx(x: Scalar, p: int, precision: int = DEFAULT_PRECISION) -> PadicApprox:
    """Truncate an exact rational to ``precision`` relative digits."""
    if isinstance(x, PadicApprox):
        return x
    x = as_fraction(x)
    if x == 0:
        return PadicApprox(p, precision, 0, 0)
    v, num, den = _split(x, p)
    mod = p**precision
    return PadicApprox(p, v, num * pow(den, -1, mod) % mod, precision)


def _zero(p: int, absprec: int) -> PadicApprox:
    return PadicApprox(p, absprec, 0, 0)


def _normalize(p: int, k: int, s: int, absprec: int) -> PadicApprox:
    """Build the approximation of p**k * s known modulo p**absprec."""
    if s == 0:
        return _zero(p, absprec)
    t = _int_ord(s, p)
    v = k + t
    n = absprec - v
    return PadicApprox(p, v, (s // p**t) % p**n, n)


def _scaled(x, p: int, k: int, digits: int) -> int:
    """Integer congruent to x / p**k modulo p**digits (requires ord(x) >= k)."""
    mod = p**digits
    if isinstance(x, PadicApprox):
        if x.is_indeterminate:
            return 0
        return x.unit * p**(x.valuation - k) % mod
    if x == 0:
        return 0
    v, num, den = _split(x, p)
    return num * p**(v - k) * pow(den, -1, mod) % mod


def _add(x, y, p: int) -> Scalar:
    if not isinstance(x, PadicApprox) and not isinstance(y, PadicApprox):
        return as_fraction(x) + as_fraction(y)
    precs = [z.absprec for z in (x, y) if isinstance(z, PadicApprox)]
    absprec = min(precs)
    lows = []
    for z in (x, y):
        if isinstance(z, PadicApprox):
            lows.append(z.valuation)
        elif z != 0:
            lows.append(valuation(z, p))
    k = min(lows)
    if k >= absprec:
        return _zero(p, absprec)
    digits = absprec - k
    s = (_scaled(x, p, k, digits) + _scaled(y, p, k, digits)) % p**digits
    return _normalize(p, k, s, absprec)


def _mul(x, y, p: int) -> Scalar:
    if not isinstance(x, PadicApprox) and not isinstance(y, PadicApprox):
        return as_fraction(x) * as_fraction(y)
    if not isinstance(x, PadicApprox):
        x, y = y, x
    # x is approximate from here on
    if not isinstance(y, PadicApprox):
        y = as_fraction(y)
        if y == 0:
            return Fraction(0)
        w, num, den = _split(y, p)
        if x.is_indeterminate:
            return _zero(p, x.absprec + w)
        mod = p**x.precision
        return PadicApprox(p, x.valuation + w, x.unit * num * pow(den, -1, mod) % mod,
                           x.precision)
    if x.is_indeterminate and y.is_indeterminate:
        return _zero(p, x.absprec + y.absprec)
    if x.is_indeterminate or y.is_indeterminate:
        zero, other = (x, y) if x.is_indeterminate else (y, x)
        return _zero(p, zero.absprec + other.valuation)
    n = min(x.precision, y.precision)
    mod = p**n
    return PadicApprox(p, x.valuation + y.valuation, x.unit * y.unit % mod, n)


def _inverse(y, p: int) -> Scalar:
    if isinstance(y, PadicApprox):
        if y.is_indeterminate:
            raise IndeterminateValuation("division by a value indistinguishable from 0")
        mod = p**y.precision
        return PadicApprox(p, -y.valuation, pow(y.unit, -1, mod), y.precision)
    y = as_fraction(y)
    if y == 0:
        raise DivisionByZero("division by exact zero")
    return 1 / y


def arith(op: str, x: Scalar, y: Scalar, p: Optional[int] = None) -> Scalar:
    """Apply ``op`` in {"add", "sub", "mul", "div"} to two p-adic scalars.

    Exact operands give an exact ``Fraction``; any approximate operand gives
    a :class:`PadicApprox` whose absolute precision is provable.
    """
    if isinstance(x, PadicApprox) or isinstance(y, PadicApprox):
        p = _prime_of(x if isinstance(x, PadicApprox) else y, p)
        if isinstance(x, PadicApprox) and isinstance(y, PadicApprox) and x.p != y.p:
            raise PadicError(f"mixed primes {x.p} and {y.p}")
    if op == "add":
        return _add(x, y, p)
    if op == "sub":
        neg = -y if isinstance(y, PadicApprox) else -as_fraction(y)
        return _add(x, neg, p)
    if op == "mul":
        return _mul(x, y, p)
    if op == "div":
        if not isinstance(x, PadicApprox) and not isinstance(y, PadicApprox):
            y = as_fraction(y)
            if y == 0:
                raise DivisionByZero("division by exact zero")
            return as_fraction(x) / y
        return _mul(x, _inverse(y, p), p)
    raise ValueError(f"unknown operation {op!r}")


def reduce_mod(x: Scalar, k: int, p: Optional[int] = None) -> Fraction:
    """Canonical representative of x modulo p**k Z_p.

    The result is ``p**v * r`` with ``0 < r < p**(k - v)`` prime to p, or 0
    when ``ord(x) >= k``; two values are congruent iff the results agree.
    """
    p = _prime_of(x, p)
    if isinstance(x, PadicApprox):
        if x.absprec < k:
            raise InsufficientPrecision(
                f"need absolute precision {k}, value has {x.absprec}")
        if x.is_indeterminate or x.valuation >= k:
            return Fraction(0)
        return Fraction(x.unit % p**(k - x.valuation)) * Fraction(p) ** x.valuation
    x = as_fraction(x)
    if x == 0:
        return Fraction(0)
    v, num, den = _split(x, p)
    if v >= k:
        return Fraction(0)
    mod = p**(k - v)
    r = num * pow(den, -1, mod) % mod
    return Fraction(r) * Fraction(p) ** v


def _newton_lift(z: int, u: int, b: int, p: int, n: int) -> int:
    """Lift a simple root z of T**b - u from mod p to mod p**n."""
    k = 1
    while k < n:
        k = min(2 * k, n)
        mod = p**k
        fz = (pow(z, b, mod) - u) % mod
        dz = b * pow(z, b - 1, mod) % mod
        z = (z - fz * pow(dz, -1, mod)) % mod
    return z


def hensel_root(u: Scalar, b: int, p: Optional[int] = None,
                target_ac: Optional[AngularClass] = None,
                precision: int = DEFAULT_PRECISION) -> Scalar:
    """A b-th root of u in Q_p, selected by its angular class.

    Exact rationals are worked to ``precision`` relative digits; an
    approximate u keeps its own relative precision (z -> z**b is an isometry
    on a residue class of units when p does not divide b).  For b = 1 the
    input is returned unchanged.
    """
    p = _prime_of(u, p)
    if b < 1:
        raise ValueError("root index must be >= 1")
    if b == 1:
        return u
    if b % p == 0:
        raise UnsupportedRamifiedRoot(f"p={p} divides b={b}")
    v = valuation(u, p)
    if v is PLUS_INFINITY:
        raise NoRoot("zero has no unit-part root")
    if v % b:
        raise NoRoot(f"ord(u)={v} is not divisible by {b}")
    if isinstance(u, PadicApprox):
        n, unit = u.precision, u.unit
    else:
        n = precision
        _, num, den = _split(as_fraction(u), p)
        unit = num * pow(den, -1, p**n) % p**n
    seeds = [r for r in range(1, p) if (pow(r, b, p) - unit) % p == 0]
    if not seeds:
        raise NoRoot(f"unit part of {u} is not a {b}-th power mod {p}")
    roots = [_newton_lift(r, unit % p**n, b, p, n) for r in seeds]
    if target_ac is None:
        if len(roots) > 1:
            raise AmbiguousRoot(f"{len(roots)} roots and no target class given")
        chosen = roots[0]
    else:
        if target_ac.depth > n:
            raise InsufficientPrecision("target class is deeper than the working precision")
        matches = [z for z in roots if z % p**target_ac.depth == target_ac.residue]
        if not matches:
            raise NoRoot(f"no {b}-th root of {u} in angular class {target_ac.residue}")
        chosen = matches[0]
    return PadicApprox(p, v // b, chosen, n)


def valuation_array(values, p: int) -> np.ndarray:
    """Vectorised ord_p over an integer array; zero entries map to int64 max."""
    a = np.abs(np.asarray(values, dtype=np.int64)).ravel()
    out = np.zeros(a.shape, dtype=np.int64)
    zero = a == 0
    # each pass only touches the entries still divisible by p
    idx = np.flatnonzero((a % p == 0) & ~zero)
    sub = a[idx]
    while idx.size:
        out[idx] += 1
        sub = sub // p
        keep = sub % p == 0
        idx, sub = idx[keep], sub[keep]
    out[zero] = np.iinfo(np.int64).max
    return out.reshape(np.shape(values))


def scalar_to_json(x: Scalar):
    if isinstance(x, PadicApprox):
        return {"ord": x.valuation, "digits": x.digits, "p": x.p}
    return format_rational(x)


def scalar_from_json(obj) -> Scalar:
    if isinstance(obj, dict):
        p = int(obj["p"])
        digits: Sequence[int] = obj["digits"]
        if any(not 0 <= d < p for d in digits):
            raise ValueError("digit out of range")
        unit = sum(d * p**i for i, d in enumerate(digits))
        v = int(obj["ord"])
        return _normalize(p, v, unit, v + len(digits))
    return parse_rational(obj)
