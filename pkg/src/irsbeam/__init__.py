"""Weighted-sum-rate maximization for the IRS-assisted MIMO cognitive-radio downlink.

A library plus CLI simulator: a scenario generator (Rician channels over a
planar geometry), the WMMSE objective machinery, a self-contained log-barrier
QCQP solver for the general multi-PU block updates, a low-complexity
closed-form pipeline for the single-PU case, and alternating-optimization
drivers with benchmark variants.
"""

from .driver import (
    ALGORITHMS,
    BeamformingState,
    IterationRecord,
    SolveReport,
    initialize,
    solve,
    solve_baseline,
    solve_fast,
    solve_general,
)
from .errors import (
    ConfigError,
    DimensionMismatchError,
    InfeasibleProblemError,
    InfeasibleThetaStepError,
    NotPsdError,
    NumericalError,
)
from .model import (
    effective_channel,
    interference_power,
    mse_matrix,
    optimal_decoder,
    optimal_weight,
    surrogate_h,
    transmit_power,
    user_rate,
    wmmse_update,
    wsr,
)
from .qcqp import BarrierSettings, QcqpProblem, QuadConstraint, solve_qcqp_barrier
from .scenario import (
    ChannelSet,
    ScenarioConfig,
    generate_scenario,
    load_config,
    paper_default_config,
    path_loss_linear,
    sample_rician,
    single_pu_config,
)

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "BarrierSettings",
    "BeamformingState",
    "ChannelSet",
    "ConfigError",
    "DimensionMismatchError",
    "InfeasibleProblemError",
    "InfeasibleThetaStepError",
    "IterationRecord",
    "NotPsdError",
    "NumericalError",
    "QcqpProblem",
    "QuadConstraint",
    "ScenarioConfig",
    "SolveReport",
    "effective_channel",
    "generate_scenario",
    "initialize",
    "interference_power",
    "load_config",
    "mse_matrix",
    "optimal_decoder",
    "optimal_weight",
    "paper_default_config",
    "path_loss_linear",
    "sample_rician",
    "single_pu_config",
    "solve",
    "solve_baseline",
    "solve_fast",
    "solve_general",
    "solve_qcqp_barrier",
    "surrogate_h",
    "transmit_power",
    "user_rate",
    "wmmse_update",
    "wsr",
]
