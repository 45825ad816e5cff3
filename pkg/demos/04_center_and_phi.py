"""Two cheap extensions and the constants they achieve.

Sending every point outside the fiber to c' costs a factor p^m'.  Moving
x onto the fiber first along phi brings this down to p^(m'-m).
"""
from padic_lipschitz import CellFiber, CosetSpec, Lattice, SampleConfig, prepare
from padic_lipschitz import extend_by_center, extend_with_phi, estimate_lipschitz, phi_rescale

S = CellFiber(0, CosetSpec(3, 1, 2, 1), 0, None)   # ac_2(x) = 1, ord x >= 0
g = prepare(1, 1, 1, S)                            # the identity on S

print("phi(2) =", phi_rescale(S, 2), " phi(4) =", phi_rescale(S, 4), " phi(0) =", phi_rescale(S, 0))

cfg = SampleConfig(exhaust=5)
for build in (extend_by_center, extend_with_phi):
    ext = build(g)
    est = estimate_lipschitz(ext, Lattice(3, 0, 5), cfg, ext.claimed_lipschitz)
    print(f"{ext.provenance:7} claims {ext.claimed_lipschitz}, largest ratio mod 3^5 "
          f"is {est.ratio} between {est.witness}")
