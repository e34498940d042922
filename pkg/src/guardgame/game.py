"""Game instances, states, the weighted proximity objective and reachability constraints.

Indices are zero-based throughout: attacker ``j`` is ``cfg.speeds[j]`` and the
phase of a state is the index of the first attacker still alive. Attackers are
captured in index order.

For a phase ``i`` the capture-point stack ``P = (p_i, ..., p_{m-1})`` is
constrained by

    g_j(P) = ||p_j - a_j|| / nu_j - sum_{k=i}^{j} ||p_k - p_{k-1}||  <= 0,

with ``p_{i-1} = x_D``: the attacker must reach ``p_j`` no later than the
defender, who travels through the earlier capture points first.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegeneratePointError, InvalidArgumentError
from .geometry import ProximityShape

KERNEL_EPS = 1e-12


@dataclass(frozen=True)
class Tolerances:
    kkt_tol: float = 1e-8
    value_gap_tol: float = 1e-6
    fd_step: float = 1e-5
    scs_tol: float = 1e-8
    sosc_tol: float = 1e-8
    licq_tol: float = 1e-8
    dedup_radius: float = 1e-4


@dataclass(frozen=True)
class GameConfig:
    """Static game parameters.

    ``speeds`` are the attacker/defender speed ratios and ``weights`` the
    importance of each attacker; the defender has unit speed.
    """

    speeds: tuple[float, ...]
    weights: tuple[float, ...]
    target: ProximityShape
    capture_radius: float = 1e-3
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        object.__setattr__(self, "speeds", tuple(float(v) for v in self.speeds))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    @property
    def m(self) -> int:
        return len(self.speeds)

    @property
    def n(self) -> int:
        return self.target.dim

    @property
    def nu(self) -> np.ndarray:
        return np.asarray(self.speeds)

    @property
    def theta(self) -> np.ndarray:
        return np.asarray(self.weights)

    def with_weights(self, weights) -> "GameConfig":
        return replace(self, weights=tuple(weights))


@dataclass(frozen=True)
class GameState:
    attackers: np.ndarray
    defender: np.ndarray
    phase: int = 0

    def __post_init__(self):
        a = np.array(self.attackers, dtype=float)
        d = np.array(self.defender, dtype=float).reshape(-1)
        if a.ndim != 2 or a.shape[1] != d.size:
            raise InvalidArgumentError(
                f"attackers must be an (m, {d.size}) array, got shape {a.shape}"
            )
        if not 0 <= int(self.phase) < a.shape[0]:
            raise InvalidArgumentError(f"phase {self.phase} outside [0, {a.shape[0]})")
        a.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "attackers", a)
        object.__setattr__(self, "defender", d)
        object.__setattr__(self, "phase", int(self.phase))

    @property
    def m(self) -> int:
        return self.attackers.shape[0]

    @property
    def n(self) -> int:
        return self.defender.size

    def stacked(self) -> np.ndarray:
        """Global state vector ``[x_A0, ..., x_A(m-1), x_D]``."""
        return np.concatenate([self.attackers.ravel(), self.defender])

    @classmethod
    def from_stacked(cls, x: np.ndarray, m: int, n: int, phase: int = 0) -> "GameState":
        x = np.asarray(x, dtype=float)
        return cls(x[: m * n].reshape(m, n), x[m * n :], phase)

    def transformed(self, fn) -> "GameState":
        """Apply ``fn`` to every position (rows of an ``(k, n)`` array)."""
        return GameState(fn(self.attackers), fn(self.defender[None])[0], self.phase)

    def check(self, cfg: GameConfig) -> None:
        if self.m != cfg.m or self.n != cfg.n:
            raise InvalidArgumentError(
                f"state has m={self.m}, n={self.n}; config expects m={cfg.m}, n={cfg.n}"
            )


def _norm_hessian(z: np.ndarray, r: float) -> np.ndarray:
    return (np.eye(z.size) - np.outer(z, z) / (r * r)) / r


class LiveProblem:
    """Problem (P) restricted to the attackers alive in one phase.

    Works on a ``(q, n)`` stack of capture points for attackers
    ``phase .. phase + q - 1``. ``delay`` is a head start (in time) granted to
    every attacker; it is zero for the cooperative problem and equals the
    defender's accumulated path length in the noncooperative baseline stages.
    """

    def __init__(self, attackers, speeds, weights, defender, target: ProximityShape, delay=0.0):
        self.a = np.asarray(attackers, dtype=float).reshape(-1, target.dim)
        self.nu = np.asarray(speeds, dtype=float)
        self.theta = np.asarray(weights, dtype=float)
        self.xd = np.asarray(defender, dtype=float)
        self.target = target
        self.delay = float(delay)
        self.q, self.n = self.a.shape
        self._lower = np.tril(np.ones((self.q, self.q)))
        self._strict = np.tril(np.ones((self.q, self.q)), -1)

    @classmethod
    def from_state(cls, state: GameState, cfg: GameConfig, phase: int | None = None) -> "LiveProblem":
        state.check(cfg)
        i = state.phase if phase is None else int(phase)
        if not 0 <= i < cfg.m:
            raise InvalidArgumentError(f"phase {i} outside [0, {cfg.m})")
        return cls(state.attackers[i:], cfg.nu[i:], cfg.theta[i:], state.defender, cfg.target)

    def shape(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float).reshape(self.q, self.n)

    # --- kernels -----------------------------------------------------------
    def kernels(self, P):
        """Attacker offsets ``p_j - a_j``, path segments ``p_k - p_{k-1}`` and their norms."""
        P = self.shape(P)
        U = P - self.a
        Z = P.copy()
        Z[0] -= self.xd
        Z[1:] -= P[:-1]
        return U, np.sqrt(np.einsum("ij,ij->i", U, U)), Z, np.sqrt(np.einsum("ij,ij->i", Z, Z))

    def _guarded(self, P, rows=None):
        """Kernels, checking only those that enter the constraint rows ``rows``.

        Row ``j`` uses the attacker kernel ``j`` and the path segments ``0..j``.
        """
        U, ru, Z, rz = self.kernels(P)
        rows = np.arange(self.q) if rows is None else np.asarray(rows, dtype=int)
        if rows.size and (
            ru[rows].min() < KERNEL_EPS or rz[: rows.max() + 1].min() < KERNEL_EPS
        ):
            raise DegeneratePointError(
                "norm kernel below 1e-12: a capture point coincides with its attacker "
                "or with the previous point on the defender's path"
            )
        return U, ru, Z, rz

    # --- objective ---------------------------------------------------------
    def f(self, P) -> float:
        return float(self.theta @ self.target.values(self.shape(P)))

    def h(self, P) -> np.ndarray:
        return self.target.values(self.shape(P))

    def grad_f(self, P) -> np.ndarray:
        P = self.shape(P)
        return np.concatenate([t * self.target.gradient(p) for t, p in zip(self.theta, P)])

    def hess_f(self, P) -> np.ndarray:
        P = self.shape(P)
        H = np.zeros((self.q * self.n,) * 2)
        for j, p in enumerate(P):
            s = slice(j * self.n, (j + 1) * self.n)
            H[s, s] = self.theta[j] * self.target.hessian(p)
        return H

    # --- constraints -------------------------------------------------------
    def g(self, P) -> np.ndarray:
        _, ru, _, rz = self.kernels(P)
        return ru / self.nu - self.delay - np.cumsum(rz)

    def jac(self, P, rows=None) -> np.ndarray:
        """Jacobian of ``g`` (rows ``rows``, default all) with respect to the capture points."""
        rows = np.arange(self.q) if rows is None else np.asarray(rows, dtype=int)
        U, ru, Z, rz = self._guarded(P, rows)
        # Unused rows may hold zero kernels; zero them instead of propagating NaN.
        E = np.divide(Z, rz[:, None], out=np.zeros_like(Z), where=rz[:, None] > 0.0)
        Ua = np.divide(U, (self.nu * ru)[:, None], out=np.zeros_like(U), where=ru[:, None] > 0.0)
        J = -self._lower[:, :, None] * E[None, :, :]
        J[:, :-1, :] += self._strict[:, :-1, None] * E[None, 1:, :]
        J[np.arange(self.q), np.arange(self.q)] += Ua
        return J[rows].reshape(rows.size, self.q * self.n)

    def state_jac(self, P, rows=None) -> np.ndarray:
        """``(q, (q+1)*n)`` Jacobian of ``g`` w.r.t. ``(a_phase, ..., a_last, x_D)``."""
        U, ru, Z, rz = self._guarded(P, rows)
        rows = np.arange(self.q) if rows is None else np.asarray(rows, dtype=int)
        J = np.zeros((self.q, self.q + 1, self.n))
        J[rows, rows] = -U[rows] / (self.nu[rows] * ru[rows])[:, None]
        J[:, self.q, :] = Z[0] / rz[0]
        return J[rows].reshape(rows.size, (self.q + 1) * self.n)

    def lagrangian_hessian(self, P, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        U, ru, Z, rz = self._guarded(P, np.flatnonzero(lam))
        n = self.n
        H = self.hess_f(P)
        # Segment k appears in every g_j with j >= k.
        seg_weight = np.cumsum(lam[::-1])[::-1]
        for j in range(self.q):
            s = slice(j * n, (j + 1) * n)
            if lam[j] != 0.0:
                H[s, s] += lam[j] / self.nu[j] * _norm_hessian(U[j], ru[j])
            if seg_weight[j] == 0.0:
                continue
            Nk = seg_weight[j] * _norm_hessian(Z[j], rz[j])
            H[s, s] -= Nk
            if j > 0:
                r = slice((j - 1) * n, j * n)
                H[r, r] -= Nk
                H[s, r] += Nk
                H[r, s] += Nk
        return H

    def grad_lagrangian(self, P, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        rows = np.flatnonzero(lam)
        if not rows.size:
            return self.grad_f(P)
        return self.grad_f(P) + self.jac(P, rows).T @ lam[rows]

    def path_lengths(self, P) -> np.ndarray:
        """Defender arrival time at each capture point (cumulative path length plus delay)."""
        return self.delay + np.cumsum(self.kernels(P)[3])


def _full_points(points, cfg: GameConfig) -> np.ndarray:
    P = np.asarray(points, dtype=float)
    if P.shape != (cfg.m, cfg.n):
        raise InvalidArgumentError(f"expected {cfg.m} points of dimension {cfg.n}, got shape {P.shape}")
    return P


def objective_f(points, cfg: GameConfig, phase: int = 0) -> float:
    """Weighted proximity ``sum_{j >= phase} theta_j h(p_j)``; earlier points are ignored."""
    P = _full_points(points, cfg)
    if not 0 <= phase < cfg.m:
        raise InvalidArgumentError(f"phase {phase} outside [0, {cfg.m})")
    return float(cfg.theta[phase:] @ cfg.target.values(P[phase:]))


def _check_index(j: int, phase: int, m: int) -> None:
    if not 0 <= phase < m:
        raise InvalidArgumentError(f"phase {phase} outside [0, {m})")
    if not phase <= j < m:
        raise InvalidArgumentError(f"constraint index {j} outside [{phase}, {m})")


def constraint_g(j: int, points, state: GameState, cfg: GameConfig, phase: int | None = None) -> float:
    phase = state.phase if phase is None else phase
    _check_index(j, phase, cfg.m)
    P = _full_points(points, cfg)
    prob = LiveProblem.from_state(state, cfg, phase)
    return float(prob.g(P[phase:])[j - phase])


def constraint_gradients(j: int, points, state: GameState, cfg: GameConfig, phase: int | None = None):
    """Exact gradients of ``g_j``.

    Returns ``(dp, dx)`` where ``dp`` has shape ``(m, n)`` (zero rows for
    captured attackers) and ``dx`` has shape ``(m + 1, n)``, ordered as
    attackers then defender.
    """
    phase = state.phase if phase is None else phase
    _check_index(j, phase, cfg.m)
    P = _full_points(points, cfg)
    prob = LiveProblem.from_state(state, cfg, phase)
    k = j - phase
    dp = np.zeros((cfg.m, cfg.n))
    dp[phase:] = prob.jac(P[phase:], [k])[0].reshape(prob.q, cfg.n)
    dx = np.zeros((cfg.m + 1, cfg.n))
    sj = prob.state_jac(P[phase:], [k])[0].reshape(prob.q + 1, cfg.n)
    dx[phase:cfg.m] = sj[: prob.q]
    dx[cfg.m] = sj[prob.q]
    return dp, dx


def validate_config(cfg: GameConfig) -> list[str]:
    """Return every violated invariant of ``cfg`` (empty list means valid)."""
    out: list[str] = []
    if cfg.m < 1:
        out.append("at least one attacker required (m >= 1)")
    if cfg.n < 1:
        out.append("space dimension must be >= 1")
    if len(cfg.weights) != len(cfg.speeds):
        out.append(f"got {len(cfg.weights)} weights for {len(cfg.speeds)} speed ratios")
    for i, v in enumerate(cfg.speeds):
        if not (0.0 < v < 1.0):
            out.append(f"speed ratio not in (0,1): speeds[{i}] = {v}")
    for i, w in enumerate(cfg.weights):
        if not w > 0.0:
            out.append(f"weight not positive: weights[{i}] = {w}")
    if cfg.weights and abs(sum(cfg.weights) - 1.0) > 1e-12:
        out.append(f"weights sum ≠ 1 (sum = {sum(cfg.weights)!r})")
    if not cfg.capture_radius > 0.0:
        out.append(f"capture radius must be positive, got {cfg.capture_radius}")
    return out
