"""Collaged quadrature for the standard Gaussian measure on R^d.

Builds full-space quadrature rules by copying base cube rules into
integer-shifted cells with exponentially decaying node budgets, provides
the Hermite hyperbolic-cross approximation machinery behind them, and
certifies d = 1 rules by their exact worst-case error over unit balls of
Hermite-weighted smoothness spaces.
"""

from .core import (
    BudgetSchedule,
    Cell,
    DeltaCheck,
    RateParams,
    budget_schedule,
    check_delta,
    default_delta,
    gaussian_density,
)
from .cube_rules import (
    PsiMap,
    QuadratureRule,
    change_of_variable_rule,
    fibonacci_index_for_budget,
    fibonacci_rule,
    frolov_rule,
    psi_deriv,
    psi_eval,
    smolyak_grid,
    smolyak_grid_size,
    smolyak_rule,
)
from .collage import (
    CollageRule,
    IntegrationError,
    UnitPartition,
    bump_partition,
    collage_direct,
    collage_partition,
    integrate,
)
from .hermite import (
    HermiteSeries,
    HyperbolicCross,
    count_hyperbolic_cross,
    gauss_hermite,
    hermite_coefficients,
    hermite_eval,
    hermite_eval_multi,
    hnorm,
    hyperbolic_cross,
    kernel_eval,
    sobolev_norm_oracle,
    truncate,
    xi_for_budget,
)
from .wce import (
    SweepConfig,
    SweepRow,
    WceReport,
    convergence_sweep,
    slope_fit,
    wce_gram,
    wce_spectral,
)

__version__ = "0.1.0"
