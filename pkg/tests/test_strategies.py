from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from guardgame import (
    Ball,
    DegeneratePointError,
    GameConfig,
    GameState,
    cooperative_controls,
    multistart_solve,
    replan,
    solve_single,
    step,
)
from guardgame.strategies import rotate


def test_single_attacker_controls(line_game):
    cfg, state = line_game
    ctl = cooperative_controls(state, cfg, solve_single(state, cfg))
    np.testing.assert_allclose(ctl.attacker_controls, [[1.0, 0.0]], atol=1e-15)
    np.testing.assert_allclose(ctl.defender_control, [-1.0, 0.0], atol=1e-15)


def _instance(rng, m=3):
    cfg = GameConfig(rng.uniform(0.2, 0.5, m), rng.dirichlet(np.ones(m)), Ball([0.0, 0.0], 1.0))
    ang = rng.uniform(0, 2 * np.pi, m)
    att = rng.uniform(2.5, 4.0, m)[:, None] * np.column_stack([np.cos(ang), np.sin(ang)])
    return cfg, GameState(att, rng.uniform(-1.0, 1.0, 2))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-20, 20), st.floats(-20, 20))
def test_controls_are_unit_and_translation_invariant(seed, dx, dy):
    rng = np.random.default_rng(seed)
    cfg, state = _instance(rng)
    plan = multistart_solve(state, cfg, n_starts=4).best
    ctl = cooperative_controls(state, cfg, plan)
    u, v = ctl.norms()
    np.testing.assert_allclose(u, 1.0, atol=1e-12)
    assert v == pytest.approx(1.0, abs=1e-12)

    shift = np.array([dx, dy])
    moved = state.transformed(lambda X: X + shift)
    ctl2 = cooperative_controls(moved, cfg, replace(plan, points=plan.points + shift))
    np.testing.assert_allclose(ctl2.attacker_controls, ctl.attacker_controls, atol=1e-9)
    np.testing.assert_allclose(ctl2.defender_control, ctl.defender_control, atol=1e-9)


def test_captured_attackers_get_zero_control():
    rng = np.random.default_rng(1)
    cfg, state = _instance(rng)
    later = GameState(state.attackers, state.defender, phase=2)
    ctl = cooperative_controls(later, cfg, solve_single(later, cfg))
    np.testing.assert_array_equal(ctl.attacker_controls[:2], 0.0)
    assert np.linalg.norm(ctl.attacker_controls[2]) == pytest.approx(1.0)


def test_phase_mismatch_and_coincidence(line_game):
    cfg, state = line_game
    plan = solve_single(state, cfg)
    with pytest.raises(DegeneratePointError):
        cooperative_controls(GameState(state.attackers, plan.points[0]), cfg, plan)
    with pytest.raises(ValueError):
        cooperative_controls(GameState([[0, 1], [0, 2]], [3, 3], 1),
                             GameConfig([0.5, 0.5], [0.5, 0.5], cfg.target), plan)


def test_rotate():
    np.testing.assert_allclose(rotate(np.array([1.0, 0.0]), np.pi / 2), [0.0, 1.0], atol=1e-15)
    with pytest.raises(ValueError):
        rotate(np.ones(3), 0.1)


def test_replanned_points_drift_little_along_equilibrium():
    rng = np.random.default_rng(2)
    dt = 1e-3
    for _ in range(3):
        cfg, state = _instance(rng)
        first = rep = multistart_solve(state, cfg)
        for _ in range(200):
            ctl = cooperative_controls(state, cfg, rep.best)
            state = step(state, ctl, cfg, dt)
            new = replan(state, cfg, rep)
            assert np.abs(new.best.points - rep.best.points).max() < 1e-3
            rep = new
        assert np.abs(rep.best.points - first.best.points).max() < 1e-3


def test_tail_is_the_next_phase_plan():
    rng = np.random.default_rng(3)
    checked = 0
    while checked < 5:
        cfg, state = _instance(rng)
        rep = multistart_solve(state, cfg, n_starts=16)
        if rep.ambiguous or not rep.in_capturable_set:
            continue
        plan = rep.best
        # Teleport every agent along its equilibrium line to the first capture instant.
        t1 = np.linalg.norm(plan.points[0] - state.defender)
        att = state.attackers.copy()
        for j in range(3):
            d = plan.points[j] - att[j]
            dist = np.linalg.norm(d)
            att[j] = att[j] + d * min(1.0, cfg.nu[j] * t1 / dist)
        after = GameState(att, plan.points[0], phase=1)
        new = replan(after, cfg, rep)
        np.testing.assert_allclose(new.best.points, plan.tail(), atol=1e-3)
        fresh = multistart_solve(after, cfg, n_starts=8)
        np.testing.assert_allclose(fresh.best.points, plan.tail(), atol=1e-3)
        checked += 1
