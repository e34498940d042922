import sys
from pathlib import Path

import numpy as np
import pytest

from guardgame import Ball, GameConfig, GameState

sys.path.insert(0, str(Path(__file__).parent))

SIX_SPEEDS = 1.0 / np.array([5.5, 6.0, 6.5, 7.0, 7.5, 8.0])
SIX_WEIGHTS = np.array([1, 5, 1, 6, 1, 8]) / 22.0


def six_attacker_config() -> GameConfig:
    return GameConfig(SIX_SPEEDS, SIX_WEIGHTS, Ball([0.0, 0.0], 2.0))


def six_attacker_state(rng: np.random.Generator) -> GameState:
    ang = rng.uniform(0.0, 2.0 * np.pi, 6)
    return GameState(10.0 * np.column_stack([np.cos(ang), np.sin(ang)]), [2.0, 2.0])


@pytest.fixture
def line_game():
    """One attacker at (-2,0), defender at (2,0), speed ratio 1/2, Ball r=0.5 at the origin."""
    return GameConfig([0.5], [1.0], Ball([0.0, 0.0], 0.5)), GameState([[-2.0, 0.0]], [2.0, 0.0])


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report_line():
    """Record a one-line PASS/FAIL verdict; all lines are echoed in the terminal summary."""

    def record(label: str, ok: bool, detail: str) -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
