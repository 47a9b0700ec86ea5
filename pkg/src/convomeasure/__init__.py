"""Convolutions of surface measure on perturbed paraboloids.

The public surface is re-exported here; see the submodules for details.
"""

from .comparison import (
    ComparisonReport,
    ComparisonRow,
    compare_point,
    comparison_sweep,
    shift_consistency,
    support_inclusion_check,
)
from .density import (
    DensityQuery,
    DensityResult,
    Regime,
    asymptotic_d1n2,
    boundary_value,
    closed_form_constant,
    density,
    nfold_density,
    paraboloid_closed_form,
)
from .errors import (
    ConfigurationError,
    ContractViolation,
    ConvergenceError,
    DomainError,
    OutsideSupportError,
)
from .extension import (
    Extremizer,
    ExtremizerSpec,
    QGrid,
    QResult,
    SweepTable,
    build_extremizer,
    q_functional,
    select_a_n,
    sharp_constant_sweep,
)
from .implicit_maps import (
    LambdaSolution,
    MapJacobian,
    alpha,
    det_S_prime,
    det_T_prime,
    map_S,
    map_T,
    solve_lambda_cross,
    solve_lambda_self,
    solve_rho_cross,
)
from .oracle import (
    OracleEstimate,
    extension_norm_roots,
    root_sum_density_1d,
    thin_shell_density,
)
from .quadrature import (
    IntegralEstimate,
    SphereRule,
    adaptive_1d,
    default_rule,
    integrate_sphere,
    semi_infinite_1d,
)
from .surfaces import (
    PerturbationSpec,
    SurfaceSpec,
    WeightSpec,
    make_perturbation,
    make_surface,
    profile,
)

__version__ = "0.1.0"
