"""Noncooperative baseline: attackers choose capture points one at a time.

Each attacker minimizes its own proximity (weights play no role) over its
time-extended safe-reachable region, with the earlier capture points already
fixed. The defender's accumulated path length enters as a head start.
"""

from __future__ import annotations

import numpy as np

from ..errors import GuardGameError, StageInfeasibleError
from ..game import GameConfig, GameState, LiveProblem
from .ccp import build_plan, estimate_multipliers, local_solve
from .plan import CapturePlan
from .sensitivity import residual


def stage_problem(state: GameState, cfg: GameConfig, i: int, prev_point, delay: float) -> LiveProblem:
    return LiveProblem(state.attackers[i : i + 1], cfg.nu[i : i + 1], [1.0], prev_point, cfg.target, delay)


def noncooperative_points(state: GameState, cfg: GameConfig, initial=None) -> np.ndarray:
    """Sequential stage optima; ``initial`` (one point per live attacker) warm-starts every stage."""
    prev = state.defender
    delay = 0.0
    out = []
    for i in range(state.phase, cfg.m):
        prob = stage_problem(state, cfg, i, prev, delay)
        try:
            if initial is not None:
                start = np.asarray(initial[i - state.phase], dtype=float)[None, :]
                P, lam, _, _ = local_solve(prob, start, warm=True)
            else:
                P, lam, _, _ = local_solve(prob, prob.a.copy())
        except GuardGameError as exc:
            raise StageInfeasibleError(f"stage {i}: {exc}", stage=i) from exc
        if residual(prob, P, lam) > cfg.tolerances.kkt_tol * 1e2:
            raise StageInfeasibleError(f"stage {i} did not reach a KKT point", stage=i)
        p = P[0]
        delay += float(np.linalg.norm(p - prev))
        prev = p
        out.append(p)
    return np.array(out)


def noncooperative_plan(state: GameState, cfg: GameConfig) -> CapturePlan:
    """Baseline plan, reported as a (generally non-stationary) point of the cooperative problem."""
    state.check(cfg)
    P = noncooperative_points(state, cfg)
    prob = LiveProblem.from_state(state, cfg)
    lam = estimate_multipliers(prob, P)
    return build_plan(prob, state.phase, P, lam, cfg.tolerances)
