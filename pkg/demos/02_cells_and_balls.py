"""A cell fiber is a disjoint union of closed balls, one per admissible order."""
from fractions import Fraction

from padic_lipschitz import Ball, CellFiber, CosetSpec

# Points x with ord(x) = 0 mod 2, ord(x) between 0 and 4 and ac_1(x) = 1, over Q_5.
S = CellFiber(0, CosetSpec(5, 1, 1, 2), 0, 4)
for B in S.balls(0, 4):
    print(f"order {B.l}: ball of radius {B.radius} around {B.canonical_point()}")

for x in [1, 6, 25, 2, 5, Fraction(1, 5)]:
    print(f"x = {x}: in S? {S.contains(x)}, distance to S = {S.distance(x)}")

# The nearest point of S is a canonical point of the closest ball.
print("nearest point of S to 5**7:", S.nearest_point(5**7))

# A single ball: ord(x) = 1 and ac_2(x) = 1 over Q_3, i.e. x in 3 + 27 Z_3.
B = Ball(3, 1, 0, 2, 1)
print("B contains 3, 30, 12:", [B.contains(x) for x in (3, 30, 12)])

# If the fiber has no upper bound on the order, its center is a limit
# point and not a member, so there is no nearest point there.
U = CellFiber(0, CosetSpec(5, 1, 1, 1), 0, None)
print("distance from 0 to the unbounded fiber:", U.distance(0))
