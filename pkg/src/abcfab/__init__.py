"""Two-step fractional Adams-Bashforth solvers for ABC initial-value problems."""

__version__ = "0.1.0"

from .analysis import (
    CLAIMED_CLASSICAL_PHI,
    ContractionReport,
    ConvergenceRow,
    classical_ab2_bound,
    contraction_check,
    contraction_constant,
    convergence_table,
    local_error_factor,
    observed_orders,
    phi_factor,
    phi_grid,
    remainder_bound,
)
from .core import (
    Order,
    SeriesControl,
    ab_norm,
    abc_derivative_quadrature,
    as_order,
    gamma_fn,
    mittag_leffler,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DomainError,
    EvaluationError,
    FabError,
    UnknownSystemError,
)
from .integrators import (
    Grid,
    SchemeWeights,
    Trajectory,
    bootstrap,
    full_history_increment,
    integrate,
    integrate_full_history,
    integrate_reference,
    integrate_two_step,
    moment_integrals,
    weight_table,
    weights,
)
from .systems import (
    HYPER4D_F3_VARIANTS,
    SystemSpec,
    available_systems,
    builtin_system,
    exact_tbeta,
    exact_tbeta_derivative,
    register_system,
    unregister_system,
)
