"""Experiment configuration, Monte Carlo batches, verification sweeps and demos."""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError, GuardGameError, InvalidArgumentError
from .game import GameConfig, GameState, Tolerances, validate_config
from .geometry import Ellipsoid, HalfSpace, ProximityShape, shape_from_dict
from .simulator import Trajectory, simulate
from .solver import isaacs_residual, multistart_solve, noncooperative_plan, value_gradient
from .solver.multistart import DEFAULT_STARTS
from .strategies import replan

log = logging.getLogger(__name__)

MODES = ("cooperative", "noncooperative", "both")
QUANTILES = (5, 25, 50, 75, 95)
DOMINANCE_SLACK = 1e-9

_REQUIRED = ("speeds", "weights", "target", "defender_start")
_OPTIONAL: dict[str, Any] = {
    "n": None,
    "m": None,
    "capture_radius": 1e-3,
    "dt": 1e-3,
    "horizon": 200.0,
    "n_trials": 1000,
    "seed": 0,
    "spawn_radius": 10.0,
    "mode": "both",
    "output_dir": "out",
}


@dataclass(frozen=True)
class ExperimentConfig:
    game: GameConfig
    defender_start: tuple[float, ...]
    n_trials: int = 1000
    seed: int = 0
    spawn_radius: float = 10.0
    attacker_mode: str = "both"
    dt: float = 1e-3
    horizon: float = 200.0
    output_dir: str = "out"

    def replace(self, **changes) -> "ExperimentConfig":
        data = {k: getattr(self, k) for k in self.__dataclass_fields__}
        data.update(changes)
        return ExperimentConfig(**data)

    @property
    def sim_mode(self) -> str:
        return "noncooperative" if self.attacker_mode == "noncooperative" else "cooperative"

    def to_dict(self) -> dict[str, Any]:
        g = self.game
        return {
            "n": g.n,
            "m": g.m,
            "speeds": list(g.speeds),
            "weights": list(g.weights),
            "target": g.target.to_dict(),
            "defender_start": list(self.defender_start),
            "capture_radius": g.capture_radius,
            "dt": self.dt,
            "horizon": self.horizon,
            "n_trials": self.n_trials,
            "seed": self.seed,
            "spawn_radius": self.spawn_radius,
            "mode": self.attacker_mode,
            "output_dir": self.output_dir,
        }


def target_extent(shape: ProximityShape) -> float:
    """Largest distance from the origin to a point of the target (inf when unbounded)."""
    if isinstance(shape, HalfSpace):
        return float("inf")
    if isinstance(shape, Ellipsoid):
        lam_min = float(np.linalg.eigvalsh(shape.shape_matrix).min())
        return float(np.linalg.norm(shape.center) + np.sqrt(max(shape.level, 0.0) / lam_min))
    raise InvalidArgumentError(f"no extent rule for {type(shape).__name__}")


def config_from_dict(data: dict[str, Any], source: str = "<config>") -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a JSON object", [])
    unknown = sorted(set(data) - set(_REQUIRED) - set(_OPTIONAL))
    if unknown:
        raise ConfigError(f"{source}: unknown keys {unknown}", [f"unknown key {k!r}" for k in unknown])
    for key in _REQUIRED:
        if key not in data:
            raise ConfigError(f"{source}: {key} required", [f"{key} required"])
    opts = {k: data.get(k, v) for k, v in _OPTIONAL.items()}
    try:
        target = shape_from_dict(data["target"])
    except (InvalidArgumentError, ValueError) as exc:
        raise ConfigError(f"{source}: target: {exc}", [f"target: {exc}"]) from exc
    speeds = [float(v) for v in data["speeds"]]
    weights = [float(w) for w in data["weights"]]
    defender = tuple(float(x) for x in data["defender_start"])
    game = GameConfig(speeds, weights, target, capture_radius=float(opts["capture_radius"]),
                      tolerances=Tolerances())
    problems = validate_config(game)
    if opts["m"] is not None and int(opts["m"]) != len(speeds):
        problems.append(f"m = {opts['m']} but {len(speeds)} speed ratios given")
    n = len(defender)
    if opts["n"] is not None and int(opts["n"]) != n:
        problems.append(f"n = {opts['n']} but defender_start has {n} coordinates")
    if target.dim != n:
        problems.append(f"target lives in dimension {target.dim}, defender_start in {n}")
    if int(opts["n_trials"]) < 1:
        problems.append("n_trials must be >= 1")
    if not float(opts["dt"]) > 0.0 or not float(opts["horizon"]) > 0.0:
        problems.append("dt and horizon must be positive")
    if opts["mode"] not in MODES:
        problems.append(f"mode must be one of {MODES}, got {opts['mode']!r}")
    if target.dim == n and not float(opts["spawn_radius"]) > target_extent(target):
        problems.append("spawn_radius must exceed the target extent")
    if problems:
        raise ConfigError(f"{source}: invalid configuration: " + "; ".join(problems), problems)
    return ExperimentConfig(
        game=game,
        defender_start=defender,
        n_trials=int(opts["n_trials"]),
        seed=int(opts["seed"]),
        spawn_radius=float(opts["spawn_radius"]),
        attacker_mode=str(opts["mode"]),
        dt=float(opts["dt"]),
        horizon=float(opts["horizon"]),
        output_dir=str(opts["output_dir"]),
    )


def load_config(path) -> ExperimentConfig:
    """Parse and validate a JSON experiment file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})", []) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}", []) from exc
    return config_from_dict(data, str(path))


def bundled_config(name: str = "six_attackers.json") -> Path:
    return Path(str(resources.files("guardgame") / "configs" / name))


# --- sampling -------------------------------------------------------------
def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent stream per trial, so results do not depend on execution order."""
    return np.random.default_rng([seed, trial])


def sample_state(ecfg: ExperimentConfig, trial: int) -> tuple[GameState, int]:
    """Attackers at i.i.d. uniform angles on the spawn circle; returns the state and a solver seed."""
    if ecfg.game.n != 2:
        raise InvalidArgumentError("initial states are sampled on a circle: planar games only")
    rng = trial_rng(ecfg.seed, trial)
    ang = rng.uniform(0.0, 2.0 * np.pi, ecfg.game.m)
    att = ecfg.spawn_radius * np.column_stack([np.cos(ang), np.sin(ang)])
    return GameState(att, ecfg.defender_start), int(rng.integers(2**31 - 1))


# --- Monte Carlo ----------------------------------------------------------
@dataclass
class TrialResult:
    trial: int
    state: GameState
    solver_seed: int
    # mode -> (status, per-attacker h, value)
    outcomes: dict[str, tuple[str, np.ndarray | None, float | None]]
    errors: list[str] = field(default_factory=list)


def run_trial(ecfg: ExperimentConfig, trial: int, n_starts: int = DEFAULT_STARTS) -> TrialResult:
    cfg = ecfg.game
    state, solver_seed = sample_state(ecfg, trial)
    res = TrialResult(trial, state, solver_seed, {})
    if ecfg.attacker_mode in ("cooperative", "both"):
        try:
            rep = multistart_solve(state, cfg, n_starts=n_starts, seed=solver_seed, include_baseline=False)
            status = "ok" if rep.in_capturable_set else "escape"
            res.outcomes["cooperative"] = (status, cfg.target.values(rep.best.points), rep.best.value)
        except GuardGameError as exc:
            res.errors.append(f"cooperative: {exc}")
            res.outcomes["cooperative"] = ("failed", None, None)
    if ecfg.attacker_mode in ("noncooperative", "both"):
        try:
            plan = noncooperative_plan(state, cfg)
            h = cfg.target.values(plan.points)
            res.outcomes["noncooperative"] = ("ok" if h.min() > 0.0 else "escape", h, plan.value)
        except GuardGameError as exc:
            res.errors.append(f"noncooperative: {exc}")
            res.outcomes["noncooperative"] = ("failed", None, None)
    for e in res.errors:
        log.warning("trial %d: %s", trial, e)
    return res


@dataclass
class StatsTable:
    n_trials: int
    quantiles: dict[str, np.ndarray]
    counts: dict[str, dict[str, int]]
    mean_value: dict[str, float]
    dominance_checked: int
    dominance_violations: int

    @property
    def escape_counts(self) -> dict[str, int]:
        return {mode: c["escape"] for mode, c in self.counts.items()}

    def median(self, mode: str) -> np.ndarray:
        return self.quantiles[mode][:, QUANTILES.index(50)]

    def to_dict(self) -> dict[str, Any]:
        def clean(x):
            return None if not np.isfinite(x) else float(x)

        return {
            "n_trials": self.n_trials,
            "quantile_levels": list(QUANTILES),
            "h_quantiles": {
                mode: [[clean(v) for v in row] for row in q] for mode, q in self.quantiles.items()
            },
            "counts": self.counts,
            "mean_value": {k: clean(v) for k, v in self.mean_value.items()},
            "dominance": {"checked": self.dominance_checked, "violations": self.dominance_violations},
        }


def summarize(results: list[TrialResult], m: int) -> StatsTable:
    modes = sorted({k for r in results for k in r.outcomes})
    quant, counts, means = {}, {}, {}
    for mode in modes:
        c = {"ok": 0, "escape": 0, "failed": 0}
        hs, vs = [], []
        for r in results:
            status, h, v = r.outcomes[mode]
            c[status] += 1
            if status == "ok":
                hs.append(h)
                vs.append(v)
        counts[mode] = c
        quant[mode] = (
            np.percentile(np.array(hs), QUANTILES, axis=0).T if hs else np.full((m, len(QUANTILES)), np.nan)
        )
        means[mode] = float(np.mean(vs)) if vs else float("nan")
    checked = bad = 0
    for r in results:
        co, nc = r.outcomes.get("cooperative"), r.outcomes.get("noncooperative")
        if co and nc and co[2] is not None and nc[2] is not None:
            checked += 1
            bad += co[2] > nc[2] + DOMINANCE_SLACK
    return StatsTable(len(results), quant, counts, means, checked, int(bad))


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def _axes(n: int) -> list[str]:
    return list("xyz")[:n] if n <= 3 else [f"c{k}" for k in range(n)]


def montecarlo_csv(results: list[TrialResult], m: int, n: int) -> str:
    """One row per trial, mode and attacker, with the trial's initial state for re-derivation."""
    ax = _axes(n)
    state_cols = [f"a{i}_{c}" for i in range(m) for c in ax] + [f"d_{c}" for c in ax]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["trial", "attacker", "mode", "status", "h_at_capture", "V", "solver_seed", *state_cols])
    for r in results:
        coords = [_fmt(x) for x in r.state.attackers.ravel()] + [_fmt(x) for x in r.state.defender]
        for mode in sorted(r.outcomes):
            status, h, v = r.outcomes[mode]
            for i in range(m):
                hi = None if h is None else h[i]
                w.writerow([r.trial, i, mode, status, _fmt(hi), _fmt(v), r.solver_seed, *coords])
    return buf.getvalue()


@dataclass
class MonteCarloResult:
    table: StatsTable
    results: list[TrialResult]
    csv_text: str

    @property
    def n_failed_trials(self) -> int:
        return sum(1 for r in self.results if r.errors)


def run_montecarlo(
    ecfg: ExperimentConfig,
    n_starts: int = DEFAULT_STARTS,
    out_dir=None,
    workers: int = 1,
) -> MonteCarloResult:
    """Paired cooperative / noncooperative solves on ``n_trials`` sampled initial states."""
    trials = range(ecfg.n_trials)
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(run_trial, [ecfg] * len(trials), trials, [n_starts] * len(trials)))
    else:
        results = [run_trial(ecfg, t, n_starts) for t in trials]
    table = summarize(results, ecfg.game.m)
    text = montecarlo_csv(results, ecfg.game.m, ecfg.game.n)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "montecarlo.csv").write_text(text)
        (out / "stats.json").write_text(json.dumps(table.to_dict(), indent=2, sort_keys=True) + "\n")
    return MonteCarloResult(table, results, text)


# --- single-run demo ------------------------------------------------------
def run_simulation_demo(
    ecfg: ExperimentConfig,
    trial_seed: int = 0,
    out_dir=None,
    n_starts: int = DEFAULT_STARTS,
    n_rays: int = 180,
) -> tuple[Trajectory, str]:
    """Simulate one sampled initial state; returns the trajectory and its SVG rendering."""
    from .plotting import render_svg

    state, solver_seed = sample_state(ecfg, trial_seed)
    traj = simulate(
        state, ecfg.game, attacker_mode=ecfg.sim_mode, dt=ecfg.dt, horizon=ecfg.horizon,
        n_starts=n_starts, seed=solver_seed,
    )
    svg = render_svg(traj, ecfg.game, n_rays=n_rays)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "trajectory.csv").write_text(traj.to_csv())
        (out / "figure.svg").write_text(svg)
        (out / "report.json").write_text(json.dumps(traj.initial_report.to_dict(), indent=2) + "\n")
    return traj, svg


# --- verification sweep ---------------------------------------------------
def fd_value_gradient(state: GameState, cfg: GameConfig, report, step: float) -> np.ndarray:
    """Central differences of the optimal value, each side re-solved from the base plan."""
    x = state.stacked()
    grad = np.zeros_like(x)
    m, n = cfg.m, cfg.n
    live = np.zeros(x.size, dtype=bool)
    live[state.phase * n : m * n] = True
    live[m * n :] = True
    for k in np.flatnonzero(live):
        vals = []
        for sgn in (1.0, -1.0):
            xp = x.copy()
            xp[k] += sgn * step
            st = GameState.from_stacked(xp, m, n, state.phase)
            vals.append(replan(st, cfg, report, n_starts=1).best.value)
        grad[k] = (vals[0] - vals[1]) / (2.0 * step)
    return grad.reshape(m + 1, n)


def boundary_gap(state: GameState, cfg: GameConfig, n_starts: int, seed: int, eps: float = 1e-6):
    """|V - (theta_i h(x_Ai) + V_next)| with attacker ``phase`` placed ``eps`` from the defender.

    Returns None when that placement lies inside the target or no later phase exists.
    """
    i = state.phase
    if i >= cfg.m - 1:
        return None
    d = state.attackers[i] - state.defender
    a = state.defender + eps * d / np.linalg.norm(d)
    h = cfg.target.value(a)
    if h <= 0.0:
        return None
    att = state.attackers.copy()
    att[i] = a
    near = GameState(att, state.defender, i)
    v_full = multistart_solve(near, cfg, n_starts=n_starts, seed=seed).best.value
    v_next = multistart_solve(GameState(att, state.defender, i + 1), cfg, n_starts=n_starts, seed=seed).best.value
    return abs(v_full - (cfg.theta[i] * h + v_next))


@dataclass
class VerificationReport:
    n_instances: int
    n_solved: int = 0
    kkt_pass: int = 0
    certified: int = 0
    ambiguous: int = 0
    all_active: int = 0
    all_active_checked: int = 0
    fd_checked: int = 0
    fd_pass: int = 0
    max_isaacs: float = 0.0
    isaacs_checked: int = 0
    boundary_checked: int = 0
    boundary_pass: int = 0
    failures: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return dict(self.__dict__)


def verify(
    ecfg: ExperimentConfig,
    n_instances: int = 100,
    seed: int | None = None,
    n_starts: int = DEFAULT_STARTS,
    fd_instances: int = 30,
    boundary_instances: int = 10,
) -> VerificationReport:
    """Certification sweep over sampled initial states."""
    cfg = ecfg.game
    tols = cfg.tolerances
    if seed is not None:
        ecfg = ecfg.replace(seed=seed)
    rep = VerificationReport(n_instances)
    for t in range(n_instances):
        state, sseed = sample_state(ecfg, t)
        try:
            sr = multistart_solve(state, cfg, n_starts=n_starts, seed=sseed)
        except GuardGameError as exc:
            rep.failures.append(f"instance {t}: {exc}")
            continue
        rep.n_solved += 1
        plan = sr.best
        rep.kkt_pass += plan.kkt_residual <= tols.kkt_tol
        rep.ambiguous += sr.ambiguous
        if not plan.certificates.ok:
            continue
        rep.certified += 1
        if sr.ambiguous:
            continue
        rep.all_active_checked += 1
        rep.all_active += len(plan.active_set) == cfg.m - state.phase
        grad = value_gradient(plan, state, cfg, sr)
        rep.isaacs_checked += 1
        rep.max_isaacs = max(rep.max_isaacs, abs(isaacs_residual(grad, cfg, state.phase)))
        if rep.fd_checked < fd_instances:
            fd = fd_value_gradient(state, cfg, sr, tols.fd_step)
            rep.fd_checked += 1
            rep.fd_pass += np.linalg.norm(fd - grad) <= 1e-4 * max(np.linalg.norm(grad), 1e-12)
        if rep.boundary_checked < boundary_instances:
            gap = boundary_gap(state, cfg, n_starts, sseed)
            if gap is not None:
                rep.boundary_checked += 1
                rep.boundary_pass += gap <= 1e-4
    for k, v in rep.__dict__.items():
        if isinstance(v, (np.integer, np.bool_)):
            setattr(rep, k, int(v))
        elif isinstance(v, np.floating):
            setattr(rep, k, float(v))
    return rep
