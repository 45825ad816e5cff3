"""Gluing extensions defined on pieces of a cover: each point follows the nearest piece."""
from fractions import Fraction

from padic_lipschitz import Ball, Lattice, PointSet, SampleConfig, constant_extension, estimate_lipschitz, glue

X1, X2, X3 = (Ball(5, 0, 0, 1, r) for r in (1, 2, 3))
glued = glue([(PointSet((X1,)), constant_extension(5, 5)),
              (PointSet((X2,)), constant_extension(5, 10, claimed=Fraction(1, 5))),
              (PointSet((X3,)), constant_extension(5, 15))])

print("values on 1, 2, 3:", [glued(x) for x in (1, 2, 3)])
# 0 and 4 are at distance 1 from all three balls; ties go to the earliest piece.
print("values on 0, 4:", [glued(x) for x in (0, 4)])
print("claimed constant:", glued.claimed_lipschitz)

est = estimate_lipschitz(glued, Lattice(5, 0, 3), SampleConfig(exhaust=3), glued.claimed_lipschitz)
print("largest ratio mod 5^3:", est.ratio, "passed:", est.passed)
