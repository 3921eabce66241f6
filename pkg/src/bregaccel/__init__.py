"""Solvers for linearly constrained minimization of a positive definite
quadratic plus joint l1 penalties (sparsity and fused differences), with a
multi-period portfolio application on top.

Solver modes: sbsa (split Bregman with subspace acceleration), sbsa_lsa
(same, final step forced to be an acceleration), sb (plain split Bregman)
and admm (three-block ADMM baseline with a 1-d acceleration).
"""

from ._kernels import BACKEND as kernel_backend
from .admm import AdmmState, admm_solve
from .driver import (
    IterationRecord,
    SafeguardDecision,
    SolveReport,
    SolverConfig,
    safeguard,
    solve,
)
from .errors import (
    BregaccelError,
    DimensionMismatchError,
    EmptyFaceError,
    InfeasibleProblemError,
    InputError,
    LineSearchError,
    NotPositiveDefiniteError,
    NumericalError,
    SizeLimitError,
)
from .model import (
    ConstrainedL1Problem,
    StackedProblem,
    SubproblemState,
    advance_state,
    composite_value,
    constraint_violations,
    initial_state,
    lipschitz_bound,
    original_objective,
    smooth_value_grad,
    stack,
    stacked_violation,
)
from .oracle import OracleSolution, SignPattern, enumerate_solve
from .portfolio import (
    MetricSet,
    PortfolioMetrics,
    PortfolioModel,
    ReturnPanel,
    build_model,
    compute_metrics,
    drop_most_volatile,
    estimate_moments,
    naive_wealth,
)
from .prox import FistaConfig, FistaResult, fista_minimize, prox_weighted_l1, soft_threshold
from .subspace import (
    ActiveSetPartition,
    GammaState,
    OptimalityMeasures,
    ReducedQuadratic,
    cg_solve,
    compute_beta_phi,
    line_search,
    min_norm_subgradient,
    partition,
    project_onto_face,
    restricted_problem,
    switching_test,
)
from .synth import load_problem, random_model, random_panel, save_problem

__version__ = "0.1.0"
