"""Sub-Riemannian landmark matching on the flat torus."""

from .dynamics import (
    ControlState,
    IntegratorSpec,
    SystemState,
    Trajectory,
    control_velocity,
    frozen_path_integrate,
    integrate,
    momentum_rhs_closed_form,
    momentum_rhs_quadrature,
    step,
)
from .energy import (
    BAND,
    IDENTITY,
    ForwardModel,
    LandmarkProblem,
    accuracy,
    classify,
    forward_model_eval,
    matching_term,
    path_energy,
    shooting_energy,
)
from .fields import (
    BasisField,
    FieldFamily,
    MetricOperator,
    apply_L,
    bracket_rank_probe,
    compute_a_matrix,
    constant_family,
    eval_field,
    family_from_config,
    field_inner_product,
    fourier10_family,
    lie_bracket,
    linear_family,
    scalar_field,
    trig_family,
)
from .optimize import (
    GradientSpec,
    OptimizationReport,
    OptimizerSpec,
    grad_path_energy,
    grad_shooting_energy,
    optimize_path,
    optimize_shooting,
)
from .torus import QuadratureGrid, TangentVector, TorusPoint, canonicalize, integrate_scalar, torus_distance

__version__ = "0.1.0"
