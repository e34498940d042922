"""Multistart globalization of the local CCP solver."""

from __future__ import annotations

import logging

import numpy as np

from ..errors import GuardGameError, SolverFailure
from ..game import GameConfig, GameState, LiveProblem
from .baseline import noncooperative_points
from .ccp import build_plan, local_solve
from .plan import CapturePlan, SolveReport
from .single import apollonius_center_radius

log = logging.getLogger(__name__)

DEFAULT_STARTS = 32


def _uniform_in_ball(rng: np.random.Generator, center, radius: float) -> np.ndarray:
    n = center.size
    d = rng.standard_normal(n)
    d /= np.linalg.norm(d)
    return center + radius * rng.random() ** (1.0 / n) * d


def sample_start(prob: LiveProblem, rng: np.random.Generator) -> np.ndarray:
    """Random feasible plan.

    The first point is uniform in the Apollonius ball; point ``j`` is uniform in
    the ball around its attacker whose radius is what the attacker covers
    while the defender walks the sampled path so far. Both rules keep every
    ``g_j <= 0``.
    """
    P = np.empty((prob.q, prob.n))
    c, R = apollonius_center_radius(prob.a[0], prob.xd, prob.nu[0])
    P[0] = _uniform_in_ball(rng, c, R)
    path = float(np.linalg.norm(P[0] - prob.xd))
    for j in range(1, prob.q):
        P[j] = _uniform_in_ball(rng, prob.a[j], prob.nu[j] * path)
        path += float(np.linalg.norm(P[j] - P[j - 1]))
    return P


def _sort_key(plan: CapturePlan):
    return (plan.value, tuple(plan.points.ravel()))


def collect_report(plans: list[CapturePlan], cfg: GameConfig, failures: list[str]) -> SolveReport:
    tols = cfg.tolerances
    good = [p for p in plans if p.kkt_residual <= tols.kkt_tol]
    if not good:
        log.warning("no start reached KKT tolerance; keeping feasible local results")
        good = [p for p in plans if np.isfinite(p.value)]
    if not good:
        raise SolverFailure("all starts failed: " + "; ".join(failures[:3]))
    good.sort(key=_sort_key)
    distinct: list[CapturePlan] = []
    for p in good:
        if all(np.abs(p.points - d.points).max() > tols.dedup_radius for d in distinct):
            distinct.append(p)
    best = distinct[0]
    near = [p for p in distinct if p.value <= best.value + tols.value_gap_tol]
    # h is evaluated on the discovered near-optimal set only (under-approximation of S(x)).
    capturable = all(float(cfg.target.values(p.points).min()) > 0.0 for p in near)
    return SolveReport(
        best=best,
        stationary_points=tuple(distinct),
        ambiguous=len(near) > 1,
        in_capturable_set=capturable,
        n_failed=len(failures),
        failures=tuple(failures),
    )


def multistart_solve(
    state: GameState,
    cfg: GameConfig,
    phase: int | None = None,
    n_starts: int = DEFAULT_STARTS,
    seed: int = 0,
    *,
    warm_starts=(),
    include_baseline: bool = True,
) -> SolveReport:
    """Solve the capture-point problem from several starts and keep the best plan.

    Start order: ``warm_starts`` first, then the noncooperative baseline plan
    (feasible for the cooperative problem), then random feasible samples from
    a generator seeded by ``seed`` until ``n_starts`` starts are used.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be >= 1")
    phase = state.phase if phase is None else int(phase)
    prob = LiveProblem.from_state(state, cfg, phase)
    rng = np.random.default_rng(seed)
    starts: list[tuple[np.ndarray, bool]] = [(np.asarray(w, dtype=float), True) for w in warm_starts]
    starts = starts[:n_starts]
    if include_baseline and len(starts) < n_starts:
        try:
            sub = state if phase == state.phase else GameState(state.attackers, state.defender, phase)
            starts.append((noncooperative_points(sub, cfg), False))
        except GuardGameError as exc:
            log.debug("baseline start unavailable: %s", exc)
    while len(starts) < n_starts:
        starts.append((sample_start(prob, rng), False))

    plans: list[CapturePlan] = []
    failures: list[str] = []
    for k, (P0, warm) in enumerate(starts):
        try:
            P, lam, hist, polished = local_solve(prob, P0, warm=warm)
        except GuardGameError as exc:
            failures.append(f"start {k}: {exc}")
            continue
        plans.append(build_plan(prob, phase, P, lam, cfg.tolerances, hist, polished))
    return collect_report(plans, cfg, failures)
