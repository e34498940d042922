from .baseline import noncooperative_plan
from .ccp import ccp_solve
from .multistart import multistart_solve, sample_start
from .plan import CapturePlan, Certificates, SolveReport
from .sensitivity import certify, isaacs_residual, kkt_residual, value_gradient
from .single import apollonius_ball, solve_single

__all__ = [
    "CapturePlan",
    "Certificates",
    "SolveReport",
    "apollonius_ball",
    "ccp_solve",
    "certify",
    "isaacs_residual",
    "kkt_residual",
    "multistart_solve",
    "noncooperative_plan",
    "sample_start",
    "solve_single",
    "value_gradient",
]
