"""Closed-form entropy-regularized 2-Wasserstein geometry on Gaussians.

Distances, optimal plans, interpolants, divergences, and barycenters for
multivariate normal distributions under quadratic-cost entropic optimal
transport, together with a discretized Sinkhorn oracle for independent
validation.
"""

from .barycenter import (
    BarycenterResult,
    FixedPointConfig,
    INIT_EUCLIDEAN_MEAN,
    INIT_FIRST_MEMBER,
    IterationReport,
    KINDS,
    SpanCell,
    WeightedPopulation,
    barycenter_objective,
    barycentric_span,
    bilinear_weights,
    entropic_barycenter,
    objective_gradient_norm,
    sinkhorn_barycenter,
    w2_barycenter,
)
from .entropic import (
    EntropicPlan,
    EntropicPotentials,
    dual_objective,
    entropic_cost,
    interpolant_forms_agree,
    interpolate,
    limit_mmd_gap,
    limit_w2_gap,
    make_plan,
    optimal_plan,
    plan_objective,
    potential_identity_residual,
    riccati_cross,
    riccati_residual,
    riccati_schur,
    sinkhorn_divergence,
    solve_potentials,
)
from .errors import (
    ConditioningWarning,
    ConfigError,
    CoverageError,
    DegenerateMatrix,
    DimensionMismatch,
    GaussEotError,
    MarginalMismatch,
    NotConverged,
    NumericalUnderflow,
    PotentialMismatch,
    TOutOfRange,
)
from .gaussian import (
    Gaussian,
    entropy,
    kl_divergence,
    kl_identity_check,
    log_density,
    sample,
    w2_distance_sq,
    w2_geodesic,
)
from .oracle import (
    DiscreteMeasure,
    GridSpec,
    SinkhornState,
    convexity_probe,
    discretize,
    grid_weights,
    mc_entropic_cost,
    measure_from_grid,
    oracle_ot_eps,
    plan_from_scalings,
    primal_value,
    sinkhorn_knopp,
)
from .spd import (
    SpdMatrix,
    SymMatrix,
    cross_sqrt,
    eps_floor,
    psd_sqrt,
    random_spd,
    shifted_cross_sqrt,
    solve_sylvester,
    spd_inv,
    spd_inv_sqrt,
    spd_logdet,
    spd_sqrt,
    sym_part,
)

__version__ = "0.1.0"

__all__ = [
    "BarycenterResult",
    "ConditioningWarning",
    "ConfigError",
    "CoverageError",
    "DegenerateMatrix",
    "DimensionMismatch",
    "DiscreteMeasure",
    "EntropicPlan",
    "EntropicPotentials",
    "FixedPointConfig",
    "Gaussian",
    "GaussEotError",
    "GridSpec",
    "INIT_EUCLIDEAN_MEAN",
    "INIT_FIRST_MEMBER",
    "IterationReport",
    "KINDS",
    "MarginalMismatch",
    "NotConverged",
    "NumericalUnderflow",
    "PotentialMismatch",
    "SinkhornState",
    "SpanCell",
    "SpdMatrix",
    "SymMatrix",
    "TOutOfRange",
    "WeightedPopulation",
    "barycenter_objective",
    "barycentric_span",
    "bilinear_weights",
    "convexity_probe",
    "cross_sqrt",
    "discretize",
    "dual_objective",
    "entropic_barycenter",
    "entropic_cost",
    "entropy",
    "eps_floor",
    "interpolant_forms_agree",
    "interpolate",
    "kl_divergence",
    "kl_identity_check",
    "limit_mmd_gap",
    "grid_weights",
    "limit_w2_gap",
    "log_density",
    "make_plan",
    "mc_entropic_cost",
    "measure_from_grid",
    "objective_gradient_norm",
    "optimal_plan",
    "oracle_ot_eps",
    "plan_from_scalings",
    "plan_objective",
    "potential_identity_residual",
    "primal_value",
    "psd_sqrt",
    "random_spd",
    "riccati_cross",
    "riccati_residual",
    "riccati_schur",
    "sample",
    "shifted_cross_sqrt",
    "sinkhorn_barycenter",
    "sinkhorn_divergence",
    "sinkhorn_knopp",
    "solve_potentials",
    "solve_sylvester",
    "spd_inv",
    "spd_inv_sqrt",
    "spd_logdet",
    "spd_sqrt",
    "sym_part",
    "w2_barycenter",
    "w2_distance_sq",
    "w2_geodesic",
    "__version__",
]
