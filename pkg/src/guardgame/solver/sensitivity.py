"""KKT residuals, second-order certification and the value gradient.

Certification follows the classical sensitivity conditions: linearly
independent active gradients (LICQ), strictly positive active multipliers
(SCS) and a positive definite Lagrangian Hessian on the null space of the
active Jacobian (SOSC). When all three hold at the unique global minimizer
the optimal value is differentiable and its gradient is the state gradient of
the Lagrangian.
"""

from __future__ import annotations

import numpy as np

from ..errors import AmbiguousPlanError, InvalidArgumentError, UncertifiedPlanError
from ..game import GameConfig, GameState, LiveProblem, Tolerances
from .plan import CapturePlan, Certificates, SolveReport


def residual_parts(prob: LiveProblem, P, lam) -> dict[str, float]:
    lam = np.asarray(lam, dtype=float)
    g = prob.g(P)
    return {
        "stationarity": float(np.linalg.norm(prob.grad_lagrangian(P, lam))),
        "primal": float(max(g.max(), 0.0)),
        "dual": float(max(-lam.min(), 0.0)),
        "complementarity": float(np.abs(lam * g).max()),
    }


def residual(prob: LiveProblem, P, lam) -> float:
    return max(residual_parts(prob, P, lam).values())


def active_indices(prob: LiveProblem, P, tol: float) -> np.ndarray:
    return np.flatnonzero(np.abs(prob.g(P)) <= tol)


def certify_arrays(prob: LiveProblem, P, lam, tols: Tolerances) -> tuple[Certificates, np.ndarray]:
    lam = np.asarray(lam, dtype=float)
    act = active_indices(prob, P, tols.kkt_tol)
    dim = prob.q * prob.n
    if act.size:
        JA = prob.jac(P, act)
        _, sv, vt = np.linalg.svd(JA)
        min_sv = float(sv.min())
        licq = min_sv > tols.licq_tol
        rank = int(np.sum(sv > tols.licq_tol))
        Z = vt[rank:].T
        scs = bool(np.all(lam[act] > tols.scs_tol))
    else:
        min_sv, licq, scs = float("inf"), True, True
        Z = np.eye(dim)
    if Z.shape[1]:
        H = prob.lagrangian_hessian(P, lam)
        min_eig = float(np.linalg.eigvalsh(Z.T @ H @ Z).min())
    else:
        min_eig = float("inf")
    cert = Certificates(
        licq=bool(licq), scs=scs, sosc=bool(min_eig > tols.sosc_tol),
        sosc_min_eig=min_eig, licq_min_sv=min_sv,
    )
    return cert, act


def _problem_for(plan: CapturePlan, state: GameState, cfg: GameConfig) -> LiveProblem:
    prob = LiveProblem.from_state(state, cfg, plan.phase)
    if plan.points.shape != (prob.q, prob.n):
        raise InvalidArgumentError(
            f"plan for phase {plan.phase} must hold {prob.q} points, got shape {plan.points.shape}"
        )
    return prob


def kkt_residual(plan: CapturePlan, state: GameState, cfg: GameConfig) -> float:
    """Largest of the stationarity, primal, dual and complementarity residuals."""
    return residual(_problem_for(plan, state, cfg), plan.points, plan.multipliers)


def certify(plan: CapturePlan, state: GameState, cfg: GameConfig) -> Certificates:
    return certify_arrays(_problem_for(plan, state, cfg), plan.points, plan.multipliers, cfg.tolerances)[0]


def value_gradient(
    plan: CapturePlan, state: GameState, cfg: GameConfig, report: SolveReport | None = None
) -> np.ndarray:
    """Gradient of the optimal value w.r.t. every position.

    Returns an ``(m + 1, n)`` array: one row per attacker (zero for captured
    ones) followed by the defender row.
    """
    if report is not None and report.ambiguous:
        raise AmbiguousPlanError("several global minimizers: the value is not differentiable here")
    prob = _problem_for(plan, state, cfg)
    cert = certify_arrays(prob, plan.points, plan.multipliers, cfg.tolerances)[0]
    if not cert.ok:
        raise UncertifiedPlanError(
            f"plan fails certification (licq={cert.licq}, scs={cert.scs}, sosc={cert.sosc})"
        )
    U, ru, Z, rz = prob.kernels(plan.points)
    lam = plan.multipliers
    grad = np.zeros((cfg.m + 1, cfg.n))
    live = lam != 0.0
    block = np.zeros_like(U)
    block[live] = -(lam[live] / prob.nu[live] / ru[live])[:, None] * U[live]
    grad[plan.phase : cfg.m] = block
    grad[cfg.m] = lam.sum() * Z[0] / rz[0]
    return grad


def isaacs_residual(grad, cfg: GameConfig, phase: int = 0) -> float:
    """Optimized Hamiltonian ``||dV/dx_D|| - sum_j nu_j ||dV/dx_Aj||`` over the live attackers."""
    grad = np.asarray(grad, dtype=float)
    if grad.shape != (cfg.m + 1, cfg.n):
        raise InvalidArgumentError(f"gradient must have shape {(cfg.m + 1, cfg.n)}")
    att = np.linalg.norm(grad[phase : cfg.m], axis=1)
    return float(np.linalg.norm(grad[cfg.m]) - cfg.nu[phase:] @ att)
