"""Reduced-order modeling of parametric evolution equations through
contour-integral inversion of the Laplace transform."""

__version__ = "0.1.0"

from .affine import (
    AffineOperator,
    AffineSource,
    OperatorTerm,
    ParameterBox,
    ParameterGrid,
    SourceTerm,
    assemble_operator,
    assemble_source,
    operator_derivative,
)
from .contour import (
    ParabolicContour,
    QuadratureGrid,
    build_grid,
    choose_node_count,
    choose_truncation,
    design_grid,
    eval_contour,
)
from .fom import (
    TimeWindow,
    TransformSnapshot,
    full_solution,
    invert,
    solve_grid,
    solve_transform,
)
from .models import (
    DiscretizedModel,
    Trajectory,
    advection,
    black_scholes,
    from_matrices,
    heaviside_snapshot_matrices,
    heston,
    step_reference,
)
from .rom import (
    ContourROM,
    EstimatorContext,
    GreedyLog,
    LocalBases,
    ReducedBasis,
    ReducedModel,
    error_estimator,
    error_estimator_node,
    galerkin_project,
    greedy_local,
    greedy_local_all,
    greedy_pod,
    online_solution,
    online_solve,
    orthonormalize,
    pod,
    residual_norm,
    residual_norms,
)
from .sigma import (
    SigmaLowerBounds,
    SigmaResult,
    lower_bounds_grid,
    lower_bounds_optimize,
    pseudospectrum_indicator,
    sigma_gradient,
    sigma_lb_optimize,
    sigma_min,
    sigma_min_on_grid,
    sigma_min_value,
    validate_profile,
)
