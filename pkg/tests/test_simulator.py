import csv
import io

import numpy as np
import pytest

from guardgame import (
    Ball,
    ControlProfile,
    GameConfig,
    GameState,
    detect_capture,
    multistart_solve,
    noncooperative_plan,
    saddle_check,
    simulate,
    step,
)
from guardgame.simulator import first_contact

V_LINE = 7 / 36


def three_attackers(seed=0):
    rng = np.random.default_rng(seed)
    while True:
        cfg = GameConfig(rng.uniform(0.15, 0.35, 3), rng.dirichlet(np.ones(3)), Ball([0.0, 0.0], 0.5))
        ang = rng.uniform(0, 2 * np.pi, 3)
        att = rng.uniform(1.5, 2.5, 3)[:, None] * np.column_stack([np.cos(ang), np.sin(ang)])
        state = GameState(att, rng.uniform(-0.3, 0.3, 2))
        rep = multistart_solve(state, cfg, n_starts=16)
        if rep.in_capturable_set and not rep.ambiguous:
            return cfg, state, rep


@pytest.fixture(scope="module")
def equilibrium_run():
    cfg, state, rep = three_attackers()
    return cfg, state, rep, simulate(state, cfg, dt=1e-3, initial_report=rep)


def test_step_examples():
    cfg = GameConfig([0.5, 0.25], [0.5, 0.5], Ball([0.0, 0.0], 1.0))
    s = GameState([[0.0, 0.0], [1.0, 1.0]], [3.0, 3.0])
    same = step(s, ControlProfile(np.zeros((2, 2)), np.zeros(2)), cfg, 0.1)
    np.testing.assert_array_equal(same.attackers, s.attackers)
    np.testing.assert_array_equal(same.defender, s.defender)
    moved = step(s, ControlProfile(np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([0.0, -1.0])), cfg, 1.0)
    np.testing.assert_allclose(moved.attackers, [[0.5, 0.0], [1.0, 1.25]])
    np.testing.assert_allclose(moved.defender, [3.0, 2.0])


def test_detect_capture_examples():
    cfg = GameConfig([0.5], [1.0], Ball([0.0, 0.0], 2.0))
    ev = detect_capture(GameState([[3.0, 0.0]], [3.0, 0.0]), cfg, time=1.5)
    assert ev.attacker == 0 and ev.time == 1.5 and ev.h == 5.0 and ev.outside_target
    assert detect_capture(GameState([[3.0, 0.0]], [3.0 + 2 * cfg.capture_radius, 0.0]), cfg) is None
    inside = detect_capture(GameState([[1.0, 0.0]], [1.0, 0.0]), cfg)
    assert not inside.outside_target


def test_first_contact():
    eps, dt = 0.1, 1.0
    assert first_contact(np.array([0.05, 0.0]), np.array([1.0, 0.0]), eps, dt) == 0.0
    assert first_contact(np.array([1.0, 0.0]), np.array([-1.0, 0.0]), eps, dt) == pytest.approx(0.9)
    assert first_contact(np.array([1.0, 0.0]), np.array([1.0, 0.0]), eps, dt) is None
    assert first_contact(np.array([1.0, 0.0]), np.array([-0.5, 0.0]), eps, dt) is None
    # Passing by at distance 0.2 never touches.
    assert first_contact(np.array([1.0, 0.2]), np.array([-2.0, 0.0]), eps, dt) is None


def test_single_attacker_equilibrium(line_game):
    cfg, state = line_game
    dt = 1e-3
    tr = simulate(state, cfg, dt=dt)
    assert tr.outcome == "all-captured"
    (ev,) = tr.events
    assert np.linalg.norm(ev.point - [-2 / 3, 0.0]) <= cfg.capture_radius + dt
    assert ev.time == pytest.approx(8 / 3, abs=2 * dt)
    assert tr.realized_payoff == pytest.approx(V_LINE, abs=5e-3)
    assert tr.initial_value == pytest.approx(V_LINE, abs=1e-12)
    assert np.nanmax(np.abs(tr.value_trace - tr.initial_value)) <= 10 * dt


def test_equilibrium_run_invariants(equilibrium_run):
    cfg, state, rep, tr = equilibrium_run
    dt = tr.dt
    assert tr.outcome == "all-captured"
    assert [e.attacker for e in tr.events] == [0, 1, 2]
    times = [e.time for e in tr.events]
    assert times == sorted(times)
    assert all(e.h > 0 for e in tr.events)
    assert tr.realized_payoff == sum(cfg.weights[e.attacker] * e.h for e in tr.events)
    assert tr.realized_payoff == pytest.approx(rep.best.value, abs=5e-3)
    assert np.max(np.abs(tr.value_trace - tr.initial_value)) <= 10 * dt

    step_a = np.linalg.norm(np.diff(tr.attackers, axis=0), axis=2)
    step_d = np.linalg.norm(np.diff(tr.defender, axis=0), axis=1)
    assert np.all(step_a <= cfg.nu * dt + 1e-12)
    assert np.all(step_d <= dt + 1e-12)
    u = np.linalg.norm(tr.attacker_controls, axis=2)
    v = np.linalg.norm(tr.defender_controls, axis=1)
    assert np.all(u <= 1 + 1e-12) and np.all(v <= 1 + 1e-12)


def _headings(x):
    # Saturated final steps are shorter but keep their direction.
    nrm = np.linalg.norm(x, axis=1)
    return x[nrm > 0] / nrm[nrm > 0, None]


def test_open_loop_headings_are_constant_per_phase(equilibrium_run):
    cfg, state, rep, _ = equilibrium_run
    tr = simulate(state, cfg, dt=1e-3, open_loop=True, initial_report=rep)
    assert tr.outcome == "all-captured"
    assert np.all(np.isnan(tr.value_trace[1:]))
    for ph in range(cfg.m):
        rows = tr.phases[:-1] == ph
        for ctl in [tr.defender_controls[rows], *(tr.attacker_controls[rows, j] for j in range(cfg.m))]:
            u = _headings(ctl)
            if len(u):
                assert np.abs(u - u[0]).max() <= 1e-6


def test_open_loop_and_feedback_agree(equilibrium_run):
    cfg, state, rep, tr = equilibrium_run
    ol = simulate(state, cfg, dt=1e-3, open_loop=True, initial_report=rep)
    assert ol.realized_payoff == pytest.approx(tr.realized_payoff, abs=1e-3)


def test_gap_shrinks_with_time_step(line_game):
    cfg, state = line_game
    cfg = GameConfig(cfg.speeds, cfg.weights, Ball([0.0, 0.3], 0.5))
    gaps = []
    for dt in (2e-3, 1e-3):
        cfg_dt = GameConfig(cfg.speeds, cfg.weights, cfg.target, capture_radius=dt)
        tr = simulate(state, cfg_dt, dt=dt)
        gaps.append(abs(tr.realized_payoff - tr.initial_value))
    assert gaps[1] < gaps[0]


def test_csv_has_one_row_per_instant(equilibrium_run):
    cfg, _, _, tr = equilibrium_run
    rows = list(csv.reader(io.StringIO(tr.to_csv())))
    assert rows[0] == ["time", "phase", "V", "a0_x", "a0_y", "a1_x", "a1_y", "a2_x", "a2_y", "d_x", "d_y"]
    assert len(rows) == len(tr.times) + 1
    assert float(rows[-1][-2]) == tr.defender[-1, 0]


def test_noncooperative_run_realizes_baseline_value():
    cfg, state, _ = three_attackers(1)
    base = noncooperative_plan(state, cfg)
    tr = simulate(state, cfg, attacker_mode="noncooperative", dt=1e-3)
    assert tr.outcome == "all-captured"
    assert tr.realized_payoff == pytest.approx(base.value, abs=5e-3)
    np.testing.assert_allclose([e.point for e in tr.events], base.points, atol=5e-3)


def test_attacker_already_winning_escapes():
    cfg = GameConfig([0.5], [1.0], Ball([0.0, 0.0], 1.0))
    tr = simulate(GameState([[1.2, 0.0]], [6.0, 0.0]), cfg, dt=1e-2)
    assert tr.outcome == "escape"


def test_horizon_is_flagged(line_game):
    cfg, state = line_game
    tr = simulate(state, cfg, dt=1e-2, horizon=0.5)
    assert tr.outcome == "horizon-exceeded"
    assert not tr.events


def test_saddle_examples(line_game):
    cfg, state = line_game
    dt = 1e-3
    rep = saddle_check(state, cfg, [0.0, 0.3, -0.3], dt=dt)
    assert rep.ok, rep.violations
    assert rep.j_star == pytest.approx(V_LINE, abs=5e-3)
    by_dev = {d: j for d, j, _ in rep.defender_results}
    assert abs(by_dev[0.0] - rep.j_star) <= 10 * dt
    assert by_dev[0.3] < rep.j_star
    by_att = {d: j for _, d, j, _ in rep.attacker_results}
    assert by_att[-0.3] > rep.j_star
