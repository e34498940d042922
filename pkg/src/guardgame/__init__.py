"""One-defender, many-attacker target-guarding game: capture-point solver, strategies and simulation."""

from .errors import (
    AmbiguousPlanError,
    CoincidentPositionsError,
    ConfigError,
    DegeneratePointError,
    GuardGameError,
    InfeasibleStartError,
    InvalidArgumentError,
    MaxIterationsError,
    SolverFailure,
    StageInfeasibleError,
    UncertifiedPlanError,
)
from .game import (
    GameConfig,
    GameState,
    Tolerances,
    constraint_g,
    constraint_gradients,
    objective_f,
    validate_config,
)
from .geometry import Ball, Ellipsoid, HalfSpace, ProximityShape, shape_from_dict
from .simulator import CaptureEvent, Trajectory, detect_capture, saddle_check, simulate, step
from .solver import (
    CapturePlan,
    Certificates,
    SolveReport,
    apollonius_ball,
    ccp_solve,
    certify,
    isaacs_residual,
    kkt_residual,
    multistart_solve,
    noncooperative_plan,
    solve_single,
    value_gradient,
)
from .strategies import ControlProfile, cooperative_controls, replan

__version__ = "0.1.0"
