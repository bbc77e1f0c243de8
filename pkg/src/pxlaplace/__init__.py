"""Variable-exponent p(x)-Laplacian solves and their infinity-Laplacian limit.

The package minimizes Dirichlet integrals with spatially varying, possibly
astronomically large exponents, solves the degenerate limit equation

    -D_inf u - |grad u|^2 ln|grad u| <xi, grad u> = 0

with a monotone wide-stencil scheme, and orchestrates exponent sequences to
measure uniform convergence of the variable-exponent solutions toward the
limit solution, together with the modular energy and Luxemburg-norm bounds
that control the sequence.
"""

from .grids import (
    BOUNDARY,
    EXTERIOR,
    INTERIOR,
    CellGradients,
    Grid,
    ScalarField,
    build_grid,
    cell_gradients,
    energy_divergence,
)
from .exponents import (
    ExponentSequence,
    XiField,
    eval_exponent,
    log_gradient,
    make_exponent_family,
    validate_admissibility,
)
from .modulars import (
    ModularValue,
    embedding_check,
    luxemburg_norm,
    modular_rho,
    sobolev_modular,
    uc_inequality_check,
)
from .energy import (
    EnergyFunctional,
    Solution,
    energy_gradient,
    energy_value,
    minimize,
    monotonicity_gap,
    solve_1d_quadrature_oracle,
    solve_p2_reference,
)
from .infinity import (
    InfinityProblem,
    exact_solution,
    expand_plaplacian,
    residual_infinity,
    solve_infinity,
)
from .harness import (
    ConvergenceReport,
    RunConfig,
    emit_report,
    holder_seminorm,
    report_from_json,
    run_sequence,
)
from .presets import PRESETS, get_preset

__all__ = [
    "INTERIOR", "BOUNDARY", "EXTERIOR",
    "Grid", "ScalarField", "CellGradients",
    "build_grid", "cell_gradients", "energy_divergence",
    "ExponentSequence", "XiField", "make_exponent_family", "eval_exponent",
    "log_gradient", "validate_admissibility",
    "ModularValue", "modular_rho", "sobolev_modular", "luxemburg_norm",
    "uc_inequality_check", "embedding_check",
    "EnergyFunctional", "Solution", "energy_value", "energy_gradient",
    "minimize", "solve_1d_quadrature_oracle", "solve_p2_reference",
    "monotonicity_gap",
    "InfinityProblem", "residual_infinity", "expand_plaplacian",
    "solve_infinity", "exact_solution",
    "RunConfig", "ConvergenceReport", "run_sequence", "holder_seminorm",
    "emit_report", "report_from_json",
    "PRESETS", "get_preset",
]

__version__ = "0.1.0"
