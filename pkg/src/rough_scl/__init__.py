"""Pathwise kinetic machinery for scalar conservation laws with rough fluxes.

Subpackage map:

* :mod:`rough_scl.roughpath` -- signatures, Hoelder norms, Brownian drivers
* :mod:`rough_scl.flux` -- flux catalog A(x,u) with derived coefficients
* :mod:`rough_scl.characteristics` -- forward/backward characteristic flows
* :mod:`rough_scl.kinetic` -- chi-lift, finite-volume solver, defect ledger,
  transported test functions
* :mod:`rough_scl.validation` -- desk-scale suites for contraction, a priori
  bounds, cancellation, driver convergence, scaling and flow stability
* :mod:`rough_scl.cli` -- the ``rough-scl`` experiment runner
"""

from .roughpath import (
    GroupElement,
    PwlPath,
    GeometricRoughPath,
    chen_concat,
    group_inverse,
    identity_element,
    lift_pwl,
    time_reverse,
    holder_norm,
    rho_dist,
    brownian_pwl,
    dyadic_approx,
)
from .flux import FluxModel, builtin, check_assumptions
from .characteristics import (
    CharState,
    FlowResult,
    forward_flow,
    backward_flow,
    flow_jacobian,
    forward_flow_level2,
    save_trajectory_csv,
)
from .kinetic import (
    Grid,
    SolutionField,
    KineticField,
    DefectLedger,
    TestFunction,
    chi_of,
    reconstruct_u,
    fv_step,
    solve_pathwise,
    initial_data,
    transport_test_function,
    convolve_along_char,
    kinetic_residual,
)

__version__ = "0.1.0"
