"""Valuations, angular components and Hensel roots over Q_p."""
from fractions import Fraction

from padic_lipschitz import AngularClass, ac, hensel_root, norm, reduce_mod, valuation
from padic_lipschitz.padic import to_approx

p = 3
for x in [18, Fraction(1, 3), Fraction(-12, 5), 0]:
    print(f"ord_3({x}) = {valuation(x, p)}, |{x}|_3 = {norm(x, p)}")

# The angular component remembers the leading digits of the unit part.
print("ac_2(18) over Q_3:", ac(18, 2, 3).residue)
print("ac_1(1/2) over Q_5:", ac(Fraction(1, 2), 1, 5).residue)

# Truncated expansions carry their own precision.  Subtracting two close
# numbers loses digits, and the result says so.
x = to_approx(Fraction(1, 2), 3, 8)
y = to_approx(Fraction(1, 2) + 3**5, 3, 8)
print("1/2 to 8 digits:", x)
print("difference:", x - y, "absolute precision", (x - y).absprec)

# Square roots of 6 in Q_5: two branches, told apart by their residue mod 5.
for r in (1, 4):
    z = hensel_root(6, 2, 5, AngularClass(5, 1, r), precision=6)
    print(f"sqrt(6) with residue {r}: {z}   z^2 mod 5^6 = {reduce_mod(z * z, 6)}")
