"""Exact p-adic arithmetic and Lipschitz extensions of prepared functions over Q_p."""
from .errors import *  # noqa: F401,F403
from .extension import (
    ExtendedFunction,
    Family,
    FamilyMember,
    constant_extension,
    extend_by_center,
    extend_family,
    extend_isometric,
    extend_with_phi,
    glue,
    isometric_split,
    phi_rescale,
    rescale_to_unit,
    unscale,
)
from .functions import (
    PreparedFunction,
    check_compatible,
    check_jacobian,
    derivative_order,
    eval_prepared,
    image_ball,
    lipschitz_exponent,
    prepare,
)
from .geometry import Ball, CellFiber, CosetSpec, Point, PointSet, distance_to_set
from .padic import (
    PLUS_INFINITY,
    AngularClass,
    PadicApprox,
    ac,
    arith,
    hensel_root,
    lift_ac,
    norm,
    parse_rational,
    reduce_mod,
    valuation,
)
from .verify import (
    Lattice,
    SampleConfig,
    VerificationReport,
    closure_oracle,
    estimate_lipschitz,
    nearest_point_oracle,
    verify_identities,
)

__version__ = "0.1.0"
