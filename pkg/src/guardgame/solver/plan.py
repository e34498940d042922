"""Result containers for capture-plan solves."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Certificates:
    licq: bool
    scs: bool
    sosc: bool
    sosc_min_eig: float
    licq_min_sv: float = float("nan")

    @property
    def ok(self) -> bool:
        return self.licq and self.scs and self.sosc


@dataclass(frozen=True)
class CapturePlan:
    """Capture points and multipliers for the attackers alive in ``phase``.

    ``points[k]`` and ``multipliers[k]`` belong to attacker ``phase + k``;
    ``active_set`` holds global attacker indices.
    """

    phase: int
    points: np.ndarray
    multipliers: np.ndarray
    value: float
    kkt_residual: float
    active_set: tuple[int, ...]
    certificates: Certificates
    history: tuple[float, ...] = ()
    polished: bool = False

    def point_of(self, j: int) -> np.ndarray:
        return self.points[j - self.phase]

    def tail(self) -> np.ndarray:
        """Points for the next phase, per the invariance of the plan along equilibrium play."""
        return self.points[1:]

    def to_dict(self) -> dict:
        c = self.certificates
        return {
            "phase": self.phase,
            "points": self.points.tolist(),
            "multipliers": self.multipliers.tolist(),
            "value": self.value,
            "kkt_residual": self.kkt_residual,
            "active_set": list(self.active_set),
            "certificates": {
                "licq": c.licq,
                "scs": c.scs,
                "sosc": c.sosc,
                "sosc_min_eig": c.sosc_min_eig,
            },
            "ccp_iterations": max(len(self.history) - 1, 0),
        }


@dataclass(frozen=True)
class SolveReport:
    best: CapturePlan
    stationary_points: tuple[CapturePlan, ...]
    ambiguous: bool
    in_capturable_set: bool
    n_failed: int = 0
    failures: tuple[str, ...] = field(default=(), repr=False)

    def near_optimal(self, gap: float) -> list[CapturePlan]:
        return [p for p in self.stationary_points if p.value <= self.best.value + gap]

    def to_dict(self) -> dict:
        return {
            "best": self.best.to_dict(),
            "value": self.best.value,
            "ambiguous": self.ambiguous,
            "in_capturable_set": self.in_capturable_set,
            "n_stationary_points": len(self.stationary_points),
            "stationary_values": [p.value for p in self.stationary_points],
            "n_failed_starts": self.n_failed,
        }
