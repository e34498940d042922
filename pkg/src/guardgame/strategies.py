"""Feedback strategies built from capture plans."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePointError
from .game import KERNEL_EPS, GameConfig, GameState
from .solver import CapturePlan, SolveReport, multistart_solve, noncooperative_plan

__all__ = [
    "ControlProfile",
    "cooperative_controls",
    "noncooperative_plan",
    "replan",
    "rotate",
]


@dataclass(frozen=True)
class ControlProfile:
    attacker_controls: np.ndarray
    defender_control: np.ndarray

    def norms(self) -> tuple[np.ndarray, float]:
        return np.linalg.norm(self.attacker_controls, axis=1), float(np.linalg.norm(self.defender_control))


def _unit(v: np.ndarray, what: str) -> np.ndarray:
    r = float(np.linalg.norm(v))
    if r < KERNEL_EPS:
        raise DegeneratePointError(f"{what}: heading undefined (distance {r:.1e})")
    return v / r


def rotate(u: np.ndarray, angle: float) -> np.ndarray:
    """Rotate a planar heading counter-clockwise by ``angle`` radians."""
    if u.size != 2:
        raise ValueError("heading deviations are defined for planar games only")
    c, s = np.cos(angle), np.sin(angle)
    return np.array([c * u[0] - s * u[1], s * u[0] + c * u[1]])


def cooperative_controls(state: GameState, cfg: GameConfig, plan: CapturePlan) -> ControlProfile:
    """Unit headings toward the plan's capture points; the defender chases the current phase's point.

    Captured attackers get a zero control. A later attacker already standing on
    its capture point (inactive reachability constraint) waits with a zero control.
    """
    i = state.phase
    if plan.phase != i:
        raise ValueError(f"plan is for phase {plan.phase}, state is in phase {i}")
    U = np.zeros((cfg.m, cfg.n))
    for k, j in enumerate(range(i, cfg.m)):
        d = plan.points[k] - state.attackers[j]
        if j > i and np.linalg.norm(d) < KERNEL_EPS:
            continue
        U[j] = _unit(d, f"attacker {j}")
    v = _unit(plan.points[0] - state.defender, "defender")
    return ControlProfile(U, v)


def replan(
    state: GameState,
    cfg: GameConfig,
    previous: SolveReport,
    n_starts: int = 1,
    seed: int = 0,
) -> SolveReport:
    """Re-solve from ``state`` with the previous best plan injected as the first start.

    After a capture the previous plan's tail is the warm start for the new phase.
    """
    prev = previous.best
    drop = state.phase - prev.phase
    warm = [prev.points[drop:]] if 0 <= drop < len(prev.points) else []
    return multistart_solve(
        state, cfg, n_starts=n_starts, seed=seed, warm_starts=warm,
        include_baseline=n_starts > len(warm),
    )
