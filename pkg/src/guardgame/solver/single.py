"""Single-attacker game: the Apollonius ball and its closed-form capture point."""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq

from ..errors import CoincidentPositionsError, InvalidArgumentError
from ..game import GameConfig, GameState, LiveProblem
from ..geometry import Ball, Ellipsoid, HalfSpace
from .plan import CapturePlan


def apollonius_center_radius(a, xd, nu: float) -> tuple[np.ndarray, float]:
    # ||p - a||^2 <= nu^2 ||p - xd||^2, completed to a square.
    a = np.asarray(a, dtype=float)
    xd = np.asarray(xd, dtype=float)
    k = 1.0 - nu * nu
    return (a - nu * nu * xd) / k, nu * float(np.linalg.norm(a - xd)) / k


def apollonius_ball(i: int, state: GameState, cfg: GameConfig) -> Ball:
    """Points attacker ``i`` reaches no later than the defender (a ball for ``nu < 1``)."""
    if not 0 <= i < cfg.m:
        raise InvalidArgumentError(f"attacker index {i} outside [0, {cfg.m})")
    state.check(cfg)
    a = state.attackers[i]
    if np.linalg.norm(a - state.defender) < cfg.capture_radius:
        raise CoincidentPositionsError(
            f"attacker {i} is within the capture radius of the defender; region is a point"
        )
    c, r = apollonius_center_radius(a, state.defender, cfg.speeds[i])
    return Ball(c, r)


def _min_quadratic_on_ball(Q, z, c, R) -> np.ndarray:
    """argmin (p - z)^T Q (p - z) over ||p - c|| <= R, Q positive definite."""
    w = z - c
    if np.linalg.norm(w) <= R:
        return np.array(z, dtype=float)
    evals, V = np.linalg.eigh(Q)
    wt = V.T @ w

    def excess(mu):
        y = evals * wt / (evals + mu)
        return np.linalg.norm(y) - R

    hi = evals.max() * np.linalg.norm(w) / R
    mu = brentq(excess, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    y = V @ (evals * wt / (evals + mu))
    # Land exactly on the sphere; the root is accurate to rounding.
    return c + y * (R / np.linalg.norm(y))


def solve_single(state: GameState, cfg: GameConfig) -> CapturePlan:
    """Exact solve of the last phase: minimize ``theta h(p)`` over the Apollonius ball."""
    from .ccp import build_plan

    if state.phase != cfg.m - 1:
        raise InvalidArgumentError(
            f"solve_single needs the last phase ({cfg.m - 1}), state is in phase {state.phase}"
        )
    i = state.phase
    ball = apollonius_ball(i, state, cfg)
    c, R = ball.center, ball.radius
    tgt = cfg.target
    if isinstance(tgt, HalfSpace):
        p = c - R * tgt.normal
    elif isinstance(tgt, Ellipsoid):
        p = _min_quadratic_on_ball(tgt.shape_matrix, tgt.center, c, R)
    else:
        raise InvalidArgumentError(f"unsupported target {type(tgt).__name__}")

    prob = LiveProblem.from_state(state, cfg, i)
    P = p[None, :]
    g = prob.g(P)[0]
    lam = np.zeros(1)
    if g > -1e-9 * max(1.0, ball.radius):
        dg = prob.jac(P)[0]
        dh = cfg.theta[i] * tgt.gradient(p)
        lam[0] = max(0.0, -(dh @ dg) / (dg @ dg))
    return build_plan(prob, i, P, lam, cfg.tolerances)
