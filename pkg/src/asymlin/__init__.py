"""Nehari-manifold solver for asymptotically linear Dirichlet problems.

Solves -Lap u = f(x, u) on a box with u = 0 on the boundary, for
nonlinearities whose ratio f(x, t)/t increases from alpha(x) at t = 0 to
eta(x) as |t| grows.
"""

from .errors import (
    BoundaryStall,
    BracketOverflow,
    ConfigError,
    GridMismatch,
    MaxIter,
    NehariError,
    NotInA,
    UnsupportedDimension,
)
from .grid import (
    Field,
    Grid,
    SupportMeasure,
    fatou_support_check,
    h10_inner,
    h10_norm,
    sobolev_constant,
    support_measure,
    weighted_l2_inner,
)
from .nonlinearity import (
    CustomNonlinearity,
    Nonlinearity,
    SmoothSaturation,
    StrongResonance,
    beta_pointwise,
    validate_f1,
)
from .spectrum import EigenPair, SpectrumResult, lambda1, weighted_eigs
from .nehari import (
    EnergyModel,
    FiberingResult,
    MultiplicityReport,
    SolveOptions,
    SolveReport,
    energy,
    energy_gradient,
    fibering,
    in_A,
    minimize_psi,
    multiplicity_search,
    psi_gradient,
    split_signs,
)
from .conditions import (
    ConditionReport,
    TauEstimate,
    check_beta,
    check_f2,
    estimate_tau,
    estimate_tau_m,
)

__version__ = "0.1.0"
