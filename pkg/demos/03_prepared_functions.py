"""Prepared functions x -> (e (x-c)^a)^(1/b) + c' and their Jacobian property."""
from fractions import Fraction

from padic_lipschitz import Ball, CellFiber, CosetSpec, PreparedFunction, prepare
from padic_lipschitz.functions import check_jacobian, derivative_order, image_ball, lipschitz_exponent

square = prepare(2, 1, 1, CellFiber(0, CosetSpec(3, 1, 2, 1), 0, None))
print("x^2 maps into the coset", square.target)

B = Ball(3, 1, 0, 2, 1)
print("ord of the derivative on B:", derivative_order(square, 3))
print("image of B:", image_ball(square, B))
rep = check_jacobian(square, B, digits=3)
print(f"Jacobian check over {rep.points} points (exhaustive={rep.exhaustive}): {rep.passed}")

# Over Q_2 the same formula breaks: 2 divides the exponent.
bad = PreparedFunction(2, 1, 1, 0, CellFiber(0, CosetSpec(2, 1, 1, 1), 0, 3), CosetSpec(2, 1, 2, 2))
rep = check_jacobian(bad, Ball(2, 1, 0, 1, 1), digits=4)
print("Q_2 squaring passes?", rep.passed, "witness", rep.witness)

# Exact Lipschitz exponent: 0 means 1-Lipschitz on the fiber with the bound attained.
for a, b, e, hi in [(2, 1, 1, None), (-1, 1, 9, 1), (1, 1, Fraction(1, 3), None)]:
    g = prepare(a, b, e, CellFiber(0, CosetSpec(3, 1, 1, 1), -2 if a < 0 else 0, hi))
    print(f"a={a} e={e}: max ord(x-y) - ord(g(x)-g(y)) = {lipschitz_exponent(g)}")
