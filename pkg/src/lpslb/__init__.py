"""Index-based load balancing across heterogeneous limited-processor-sharing
queues: Whittle index computation, dispatching policies, an exact joint-MDP
solver, and a slotted-time Monte Carlo simulator."""

from .config import ExperimentConfig, default_p_grid, load_config
from .costs import (
    CostSpec,
    LinearCost,
    MeanVarianceCost,
    cost_from_config,
    cost_to_config,
    cost_value,
    cost_values,
    expected_cost,
    validate_monotone,
)
from .errors import (
    ConfigError,
    CostMonotonicityError,
    DegenerateParametersError,
    IndexDegeneracyError,
    LpslbError,
    NonConvergenceError,
    QueueOverflowError,
    SingularSystemError,
    TableRangeError,
    TruncationError,
)
from .mdp import (
    EvalResult,
    JointMdp,
    SolveResult,
    build_joint_mdp,
    evaluate_with_adequate_truncation,
    policy_evaluation,
    transition_matrix,
    value_iteration,
)
from .policies import (
    BLOCK,
    Action,
    JsewPolicy,
    JsqPolicy,
    Policy,
    RsaPolicy,
    WhittleIndexPolicy,
    switching_grid,
)
from .queueing import (
    ServerParams,
    ThresholdChain,
    build_threshold_chain,
    cumulative_mass_increment,
    departure_kernel,
    departure_kernel_row,
    fcfs_stationary_closed_form,
    stationary_distribution,
    threshold_stationary,
    threshold_transition_matrix,
)
from .sim import SimConfig, SimEstimate, simulate
from .whittle import (
    BlockingCost,
    IndexTable,
    indexability_report,
    subsidy_cost,
    whittle_index_fcfs,
    whittle_index_fcfs_linear,
    whittle_index_general,
)

__version__ = "0.1.0"
