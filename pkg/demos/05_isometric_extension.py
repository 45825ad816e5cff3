"""Extensions with constant 1 in the three regimes of a/b."""
from fractions import Fraction

from padic_lipschitz import CellFiber, CosetSpec, Lattice, SampleConfig, prepare
from padic_lipschitz import estimate_lipschitz, extend_isometric, isometric_split

cases = {
    "2x on Q_5": prepare(1, 1, 2, CellFiber(0, CosetSpec(5, 1, 1, 1), 0, None)),
    "x^3/3 on one ball of Q_3": prepare(3, 1, Fraction(1, 3), CellFiber(0, CosetSpec(3, 1, 1, 1), 0, 0)),
    "27/x^3 on Q_3, ord x <= 1": prepare(-3, 1, 27, CellFiber(0, CosetSpec(3, 1, 1, 1), None, 1)),
}
cfg = SampleConfig(exhaust=5)
for name, g in cases.items():
    split = isometric_split(g)
    ext = extend_isometric(g)
    lo = -2 if g.a < 0 else 0
    est = estimate_lipschitz(ext, Lattice(g.p, lo, 5 - lo), cfg, 1)
    if split.threshold is None:
        print(f"{name}: a/b = 1, every ball keeps its order, no split needed")
    else:
        print(f"{name}: a/b = {g.exp_ratio}, threshold {split.threshold}, "
              f"balls handled one by one {list(split.rest)}")
    print(f"    {ext.provenance}: bound {est.bound} over {est.points} points, passed={est.passed}")
