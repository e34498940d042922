"""Command-line entry point: ``guardgame {solve,simulate,verify,montecarlo,baseline}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, GuardGameError, InvalidArgumentError
from .experiments import (
    MODES,
    ExperimentConfig,
    bundled_config,
    load_config,
    run_montecarlo,
    run_simulation_demo,
    sample_state,
    verify,
)
from .game import GameState
from .solver import multistart_solve, noncooperative_plan
from .solver.multistart import DEFAULT_STARTS

EXIT_OK, EXIT_ERROR, EXIT_INVALID, EXIT_BATCH_FAILURE = 0, 1, 2, 3

log = logging.getLogger("guardgame")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None,
                        help="JSON experiment file (default: bundled six_attackers.json)")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--out", type=Path, default=None, help="output directory")
    common.add_argument("--n-starts", type=int, default=DEFAULT_STARTS, help="multistart budget")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="guardgame", description="Target-guarding game solver and experiments")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", parents=[common], help="solve one state and print the report as JSON")
    s.add_argument("--state", type=Path, default=None,
                   help='JSON {"attackers": [[x, y], ...], "defender": [x, y], "phase": 0}; '
                        "default: sample one from the config")
    s.add_argument("--trial", type=int, default=0, help="sampled trial index when --state is absent")

    b = sub.add_parser("baseline", parents=[common], help="noncooperative plan for one state")
    b.add_argument("--state", type=Path, default=None)
    b.add_argument("--trial", type=int, default=0)

    sim = sub.add_parser("simulate", parents=[common], help="simulate one run; writes CSV and SVG")
    sim.add_argument("--mode", choices=MODES, default=None)
    sim.add_argument("--dt", type=float, default=None)
    sim.add_argument("--trial", type=int, default=0)

    v = sub.add_parser("verify", parents=[common], help="certification sweep")
    v.add_argument("--trials", type=int, default=100, help="number of instances")
    v.add_argument("--fd-instances", type=int, default=30)

    mc = sub.add_parser("montecarlo", parents=[common], help="paired cooperative/noncooperative batch")
    mc.add_argument("--trials", type=int, default=None)
    mc.add_argument("--mode", choices=MODES, default=None)
    mc.add_argument("--workers", type=int, default=1)
    return p


def _experiment(args) -> ExperimentConfig:
    ecfg = load_config(args.config or bundled_config())
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if getattr(args, "trials", None) is not None and args.command == "montecarlo":
        changes["n_trials"] = args.trials
    if getattr(args, "mode", None) is not None:
        changes["attacker_mode"] = args.mode
    if getattr(args, "dt", None) is not None:
        if not args.dt > 0.0:
            raise ConfigError("--dt must be positive", ["dt must be positive"])
        changes["dt"] = args.dt
    if changes.get("n_trials", 1) < 1:
        raise ConfigError("--trials must be >= 1", ["n_trials must be >= 1"])
    return ecfg.replace(**changes) if changes else ecfg


def _state(args, ecfg: ExperimentConfig) -> tuple[GameState, int]:
    if args.state is None:
        return sample_state(ecfg, args.trial)
    try:
        data = json.loads(args.state.read_text())
        state = GameState(data["attackers"], data["defender"], int(data.get("phase", 0)))
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{args.state}: bad state file ({exc})", []) from exc
    state.check(ecfg.game)
    return state, ecfg.seed


def _emit(args, name: str, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / name).write_text(text)
    sys.stdout.write(text)


def cmd_solve(args) -> int:
    ecfg = _experiment(args)
    state, seed = _state(args, ecfg)
    rep = multistart_solve(state, ecfg.game, n_starts=args.n_starts, seed=seed)
    _emit(args, "report.json", rep.to_dict())
    return EXIT_OK


def cmd_baseline(args) -> int:
    ecfg = _experiment(args)
    state, _ = _state(args, ecfg)
    plan = noncooperative_plan(state, ecfg.game)
    payload = plan.to_dict()
    payload["h"] = ecfg.game.target.values(plan.points).tolist()
    _emit(args, "baseline.json", payload)
    return EXIT_OK


def cmd_simulate(args) -> int:
    ecfg = _experiment(args)
    out = args.out or Path(ecfg.output_dir)
    traj, _ = run_simulation_demo(ecfg, args.trial, out_dir=out, n_starts=args.n_starts)
    print(json.dumps({
        "outcome": traj.outcome,
        "initial_value": traj.initial_value,
        "realized_payoff": traj.realized_payoff,
        "events": [
            {"attacker": e.attacker, "time": e.time, "point": e.point.tolist(), "h": e.h} for e in traj.events
        ],
        "files": [str(out / n) for n in ("trajectory.csv", "figure.svg", "report.json")],
    }, indent=2))
    return EXIT_OK


def cmd_verify(args) -> int:
    ecfg = _experiment(args)
    rep = verify(ecfg, n_instances=args.trials, n_starts=args.n_starts, fd_instances=args.fd_instances)
    _emit(args, "verify.json", rep.to_dict())
    return EXIT_BATCH_FAILURE if rep.failures else EXIT_OK


def cmd_montecarlo(args) -> int:
    ecfg = _experiment(args)
    out = args.out or Path(ecfg.output_dir)
    res = run_montecarlo(ecfg, n_starts=args.n_starts, out_dir=out, workers=args.workers)
    t = res.table
    for mode in sorted(t.quantiles):
        med = t.median(mode)
        print(f"{mode:>15}: median h = {np.array2string(med, precision=3)}  counts = {t.counts[mode]}")
    print(f"dominance violations: {t.dominance_violations}/{t.dominance_checked}")
    print(f"wrote {out / 'montecarlo.csv'} and {out / 'stats.json'}")
    return EXIT_BATCH_FAILURE if res.n_failed_trials else EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "baseline": cmd_baseline,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "montecarlo": cmd_montecarlo,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, InvalidArgumentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except GuardGameError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
