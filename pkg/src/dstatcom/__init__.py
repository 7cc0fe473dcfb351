"""DSTATCOM feedback-linearizing control with particle-swarm PI tuning."""
from .control import (
    ControllerGains,
    ModulationCommand,
    PiState,
    VdcTooLow,
    feedback_linearize,
    inner_loop,
    pi_update,
    saturate,
    to_modulation,
)
from .criteria import (
    Criterion,
    ErrorSeries,
    ObjectiveSpec,
    ObjectiveTerm,
    canonical_objective,
    integrate_criterion,
    objective_value,
)
from .model import (
    ControlInput,
    IntegrationDiverged,
    PlantParams,
    PlantState,
    StateDerivative,
    canonical_params,
    compute_power,
    derivative,
    step_rk4,
)
from .pso import SwarmConfig, SwarmResult, init_swarm, optimize, pso_step
from .simharness import (
    PAPER_GAIN_SETS,
    GainSet,
    PerfMetrics,
    Scenario,
    StepSpec,
    Trajectory,
    canonical_scenario,
    compare_gains,
    make_fitness,
    run_closed_loop,
    step_metrics,
)

__version__ = "0.1.0"
