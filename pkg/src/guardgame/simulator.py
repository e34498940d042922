"""Forward simulation of the game under feedback or open-loop play."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import GuardGameError
from .game import KERNEL_EPS, GameConfig, GameState
from .solver import SolveReport, multistart_solve
from .solver.baseline import noncooperative_points
from .solver.multistart import DEFAULT_STARTS
from .strategies import ControlProfile, replan, rotate

log = logging.getLogger(__name__)

ATTACKER_MODES = ("cooperative", "noncooperative")
DEFENDER_MODES = ("equilibrium", "fixed-heading", "custom")


@dataclass(frozen=True)
class CaptureEvent:
    attacker: int
    time: float
    point: np.ndarray
    h: float

    @property
    def outside_target(self) -> bool:
        return self.h > 0.0


@dataclass
class Trajectory:
    dt: float
    times: np.ndarray
    attackers: np.ndarray
    defender: np.ndarray
    phases: np.ndarray
    attacker_controls: np.ndarray
    defender_controls: np.ndarray
    events: list[CaptureEvent]
    # Payoff already banked at captures plus the replanned value of the remaining subgame.
    value_trace: np.ndarray
    realized_payoff: float
    outcome: str
    initial_report: SolveReport | None = field(default=None, repr=False)

    @property
    def states(self) -> list[GameState]:
        m = self.attackers.shape[1]
        return [
            GameState(a, d, min(int(ph), m - 1))
            for a, d, ph in zip(self.attackers, self.defender, self.phases)
        ]

    @property
    def controls(self) -> list[ControlProfile]:
        return [ControlProfile(u, v) for u, v in zip(self.attacker_controls, self.defender_controls)]

    @property
    def initial_value(self) -> float:
        return float(self.value_trace[0])

    def to_csv(self) -> str:
        """One row per recorded instant: time, phase, value trace, then all coordinates."""
        m, n = self.attackers.shape[1:]
        ax = list("xyz")[:n] if n <= 3 else [f"c{k}" for k in range(n)]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time", "phase", "V", *[f"a{i}_{c}" for i in range(m) for c in ax], *[f"d_{c}" for c in ax]])
        for t, ph, v, a, d in zip(self.times, self.phases, self.value_trace, self.attackers, self.defender):
            w.writerow([repr(float(t)), int(ph), "" if np.isnan(v) else repr(float(v)),
                        *[repr(float(x)) for x in a.ravel()], *[repr(float(x)) for x in d]])
        return buf.getvalue()


def step(state: GameState, controls: ControlProfile, cfg: GameConfig, dt: float) -> GameState:
    """Forward-Euler update of the simple-motion kinematics."""
    a = state.attackers + dt * cfg.nu[:, None] * controls.attacker_controls
    d = state.defender + dt * controls.defender_control
    return GameState(a, d, state.phase)


def detect_capture(state: GameState, cfg: GameConfig, time: float = 0.0) -> CaptureEvent | None:
    """Event for the current phase's attacker if the defender is within the capture radius."""
    i = state.phase
    a = state.attackers[i]
    if np.linalg.norm(a - state.defender) <= cfg.capture_radius:
        return CaptureEvent(i, float(time), a.copy(), cfg.target.value(a))
    return None


def first_contact(r0: np.ndarray, w: np.ndarray, eps: float, dt: float) -> float | None:
    """Smallest ``s`` in ``[0, dt]`` with ``||r0 + s w|| <= eps``, or None."""
    c = r0 @ r0 - eps * eps
    if c <= 0.0:
        return 0.0
    a = w @ w
    b = r0 @ w
    if a == 0.0 or b >= 0.0:
        return None
    disc = b * b - a * c
    if disc < 0.0:
        return None
    s = c / (-b + np.sqrt(disc))
    return s if s <= dt else None


def _saturate(direction: np.ndarray, distance: float, reach: float) -> np.ndarray:
    # Stop on the target point instead of overshooting it.
    return direction * min(1.0, distance / reach) if reach > 0.0 else direction


class _Planner:
    """Holds the plan that drives the attackers (and the equilibrium defender)."""

    def __init__(self, cfg, attacker_mode, n_starts, replan_starts, seed):
        self.cfg = cfg
        self.mode = attacker_mode
        self.n_starts = n_starts
        self.replan_starts = replan_starts
        self.seed = seed
        self.report: SolveReport | None = None
        self.nc_points: np.ndarray | None = None
        self.nc_phase = 0

    def start(self, state: GameState, report: SolveReport | None) -> SolveReport:
        if report is None:
            report = multistart_solve(state, self.cfg, n_starts=self.n_starts, seed=self.seed)
        self.report = report
        if self.mode == "noncooperative":
            self.nc_points = noncooperative_points(state, self.cfg)
            self.nc_phase = state.phase
        return report

    def update(self, state: GameState) -> None:
        cfg = self.cfg
        if self.mode == "noncooperative":
            drop = state.phase - self.nc_phase
            self.nc_points = noncooperative_points(state, cfg, initial=self.nc_points[drop:])
            self.nc_phase = state.phase
            return
        try:
            self.report = replan(state, cfg, self.report, n_starts=self.replan_starts, seed=self.seed)
        except GuardGameError:
            self.report = multistart_solve(state, cfg, n_starts=self.n_starts, seed=self.seed)

    def points(self) -> np.ndarray:
        return self.nc_points if self.mode == "noncooperative" else self.report.best.points

    def value(self) -> float:
        """Planned payoff of the remaining subgame under the active attacker mode."""
        if self.mode == "noncooperative":
            return float(self.cfg.theta[self.nc_phase :] @ self.cfg.target.values(self.nc_points))
        return self.report.best.value

    def escaping(self) -> bool:
        if self.mode == "noncooperative":
            return bool(self.cfg.target.values(self.nc_points).min() <= 0.0)
        return not self.report.in_capturable_set


def simulate(
    x0: GameState,
    cfg: GameConfig,
    attacker_mode: str = "cooperative",
    defender_mode: str = "equilibrium",
    dt: float = 1e-3,
    horizon: float = 200.0,
    *,
    defender_offset: float = 0.0,
    defender_policy: Callable[[GameState, np.ndarray], np.ndarray] | None = None,
    attacker_offsets: dict[int, float] | None = None,
    open_loop: bool = False,
    n_starts: int = DEFAULT_STARTS,
    replan_starts: int = 1,
    seed: int = 0,
    capture_radius: float | None = None,
    initial_report: SolveReport | None = None,
) -> Trajectory:
    """Play the game from ``x0`` until every attacker is captured, one escapes, or ``horizon``.

    Attackers head for their capture points (from the cooperative or the
    noncooperative plan). The defender heads for the current phase's capture
    point (``equilibrium``), for that point rotated by ``defender_offset``
    (``fixed-heading``), or follows ``defender_policy(state, points)``.
    ``attacker_offsets`` rotates the heading of the given attackers. In
    feedback mode the plan is re-solved every step from the previous one;
    ``open_loop`` keeps the initial plan and leaves the value trace NaN after t=0.

    Capture is detected in continuous time within each step: the step is cut
    at the first instant the separation equals the capture radius.
    """
    if attacker_mode not in ATTACKER_MODES:
        raise ValueError(f"attacker_mode must be one of {ATTACKER_MODES}")
    if defender_mode not in DEFENDER_MODES:
        raise ValueError(f"defender_mode must be one of {DEFENDER_MODES}")
    if defender_mode == "custom" and defender_policy is None:
        raise ValueError("custom defender mode needs defender_policy")
    x0.check(cfg)
    eps = cfg.capture_radius if capture_radius is None else float(capture_radius)
    offsets = dict(attacker_offsets or {})
    m, n = cfg.m, cfg.n

    def banked(evts) -> float:
        return float(sum(cfg.weights[e.attacker] * e.h for e in evts))

    planner = _Planner(cfg, attacker_mode, n_starts, replan_starts, seed)
    report = planner.start(x0, initial_report)
    plan0 = planner.points()

    state = x0
    t = 0.0
    times, A, D, phases, values = [0.0], [x0.attackers], [x0.defender], [x0.phase], [planner.value()]
    UA, VD = [], []
    events: list[CaptureEvent] = []
    outcome = "horizon-exceeded"
    if planner.escaping():
        outcome = "escape"

    while outcome == "horizon-exceeded" and t < horizon - 1e-12:
        i = state.phase
        pts = plan0[state.phase - x0.phase :] if open_loop else planner.points()
        U = np.zeros((m, n))
        for k, j in enumerate(range(i, m)):
            d = pts[k] - state.attackers[j]
            r = float(np.linalg.norm(d))
            if r < KERNEL_EPS:
                continue
            u = d / r
            if j in offsets:
                u = rotate(u, offsets[j])
            else:
                u = _saturate(u, r, cfg.speeds[j] * dt)
            U[j] = u
        dd = pts[0] - state.defender
        rd = float(np.linalg.norm(dd))
        if defender_mode == "custom":
            v = np.asarray(defender_policy(state, pts), dtype=float)
            nv = np.linalg.norm(v)
            v = v / nv if nv > 1.0 else v
        elif rd < KERNEL_EPS:
            v = np.zeros(n)
        elif defender_mode == "fixed-heading":
            v = rotate(dd / rd, defender_offset)
        else:
            v = _saturate(dd / rd, rd, dt)

        r0 = state.attackers[i] - state.defender
        w = cfg.speeds[i] * U[i] - v
        s = first_contact(r0, w, eps, dt)
        h_step = dt if s is None else s
        new = step(state, ControlProfile(U, v), cfg, h_step)
        t += h_step
        UA.append(U)
        VD.append(v)
        if s is not None:
            a = new.attackers[i]
            events.append(CaptureEvent(i, t, a.copy(), cfg.target.value(a)))
            if events[-1].h <= 0.0:
                outcome = "escape"
            elif i == m - 1:
                outcome = "all-captured"
            else:
                new = GameState(new.attackers, new.defender, i + 1)
        state = new
        if outcome == "horizon-exceeded":
            alive_h = cfg.target.values(state.attackers[state.phase :])
            if alive_h.min() <= 0.0:
                outcome = "escape"
        v_now = np.nan
        if outcome == "horizon-exceeded" and not open_loop:
            try:
                planner.update(state)
                v_now = banked(events) + planner.value()
                if planner.escaping():
                    outcome = "escape"
            except GuardGameError as exc:
                log.info("replan failed at t=%.4f: %s", t, exc)
                outcome = "escape"
        elif outcome == "all-captured" and not open_loop:
            # Terminal value: everything is banked.
            v_now = banked(events)
        times.append(t)
        A.append(state.attackers)
        D.append(state.defender)
        phases.append(state.phase if outcome != "all-captured" else m)
        values.append(v_now)

    payoff = banked(events)
    return Trajectory(
        dt=dt,
        times=np.array(times),
        attackers=np.array(A),
        defender=np.array(D),
        phases=np.array(phases),
        attacker_controls=np.array(UA).reshape(-1, m, n),
        defender_controls=np.array(VD).reshape(-1, n),
        events=events,
        value_trace=np.array(values),
        realized_payoff=payoff,
        outcome=outcome,
        initial_report=report,
    )


@dataclass
class SaddleReport:
    j_star: float
    defender_results: list[tuple[float, float, str]]
    attacker_results: list[tuple[int, float, float, str]]
    violations: list[str]
    slack: float

    @property
    def ok(self) -> bool:
        return not self.violations


def saddle_check(
    x0: GameState,
    cfg: GameConfig,
    deviations,
    dt: float = 1e-3,
    *,
    attackers=None,
    horizon: float = 200.0,
    n_starts: int = DEFAULT_STARTS,
    seed: int = 0,
) -> SaddleReport:
    """Compare unilateral heading deviations against the equilibrium payoff.

    A deviating defender (attackers replanning) must not raise the payoff above
    ``J* + 10 dt``; a single deviating attacker (everyone else replanning) must
    not lower it below ``J* - 10 dt``. An attacker escape under a defender
    deviation counts as a lower payoff.
    """
    report = multistart_solve(x0, cfg, n_starts=n_starts, seed=seed)
    common = dict(dt=dt, horizon=horizon, n_starts=n_starts, seed=seed, initial_report=report)
    ref = simulate(x0, cfg, **common)
    if ref.outcome != "all-captured":
        raise GuardGameError(f"equilibrium run ended with outcome {ref.outcome!r}")
    j_star = ref.realized_payoff
    slack = 10.0 * dt
    attackers = range(x0.phase, cfg.m) if attackers is None else attackers
    d_res, a_res, bad = [], [], []
    for dev in deviations:
        tr = simulate(x0, cfg, defender_mode="fixed-heading", defender_offset=dev, **common)
        d_res.append((dev, tr.realized_payoff, tr.outcome))
        if tr.outcome == "all-captured" and tr.realized_payoff > j_star + slack:
            bad.append(f"defender offset {dev:+.3f}: J={tr.realized_payoff:.6f} > J*={j_star:.6f}")
        elif tr.outcome == "horizon-exceeded":
            bad.append(f"defender offset {dev:+.3f}: run hit the horizon")
        for j in attackers:
            tr = simulate(x0, cfg, attacker_offsets={j: dev}, **common)
            a_res.append((j, dev, tr.realized_payoff, tr.outcome))
            if tr.outcome != "all-captured" or tr.realized_payoff < j_star - slack:
                bad.append(
                    f"attacker {j} offset {dev:+.3f}: J={tr.realized_payoff:.6f} ({tr.outcome}) "
                    f"< J*={j_star:.6f}"
                )
    return SaddleReport(j_star, d_res, a_res, bad, slack)
