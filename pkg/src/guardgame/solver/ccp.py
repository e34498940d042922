"""Local solution of the capture-point problem by the convex-concave procedure.

Every constraint ``g_j`` is a convex attacker-time term minus the concave
defender path length. At an iterate the path-length terms are replaced by
their linear minorants ``e_k . (p_k - p_{k-1})`` (``e_k`` the unit segment
direction), which yields a convex inner approximation of the feasible set.
Minimizing over it gives a feasible iterate with no larger objective. The
first constraint of a cooperative phase is kept exact in its Apollonius-ball
form.

Once the active set settles, a Newton iteration on the KKT system of the
exact (nonsmooth-free) problem finishes the solve to machine precision.
"""

from __future__ import annotations

import logging
import warnings

import numpy as np
from scipy.optimize import minimize, nnls

from ..errors import DegeneratePointError, InfeasibleStartError, MaxIterationsError
from ..game import KERNEL_EPS, GameConfig, GameState, LiveProblem, Tolerances
from .plan import CapturePlan
from .sensitivity import certify_arrays, residual
from .single import apollonius_center_radius

log = logging.getLogger(__name__)

SMOOTHING = 1e-9


def repair_feasibility(prob: LiveProblem, P) -> np.ndarray:
    """Pull infeasible points toward their attacker until every ``g_j <= 0``.

    Constraints are fixed in index order; moving ``p_j`` never affects the
    constraints of earlier attackers.
    """
    P = np.array(prob.shape(P), dtype=float)
    if not np.all(np.isfinite(P)):
        raise InfeasibleStartError("initial points contain non-finite values")
    g = prob.g(P)
    for j in range(prob.q):
        if g[j] <= 0.0:
            continue
        base = P[j].copy()
        aj = prob.a[j]
        prev = P[j - 1] if j else prob.xd
        # Everything in g_j except the two norms that move with p_j.
        fixed = -prob.delay - float(np.sum(np.linalg.norm(np.diff(np.vstack([prob.xd, P[:j]]), axis=0), axis=1)))

        def gj(t):
            p = aj + t * (base - aj)
            return np.sqrt((p - aj) @ (p - aj)) / prob.nu[j] + fixed - np.sqrt((p - prev) @ (p - prev))

        if gj(0.0) > 0.0:
            raise InfeasibleStartError(f"constraint {j} infeasible even at the attacker's position")
        lo, hi = 0.0, 1.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if gj(mid) <= 0.0:
                lo = mid
            else:
                hi = mid
        P[j] = aj + lo * (base - aj)
        g = prob.g(P)
    return P


def _segment_directions(prob: LiveProblem, P: np.ndarray) -> np.ndarray:
    Z = np.diff(np.vstack([prob.xd, P]), axis=0)
    r = np.linalg.norm(Z, axis=1)
    E = np.empty_like(Z)
    for k in range(prob.q):
        if r[k] > KERNEL_EPS:
            E[k] = Z[k] / r[k]
        else:
            # Any unit vector gives a valid minorant of the norm at the origin.
            E[k] = E[k - 1] if k else np.eye(prob.n)[0]
    return E


def ccp_step(prob: LiveProblem, P: np.ndarray) -> np.ndarray:
    """Solve one convexified subproblem starting from the feasible iterate ``P``."""
    q, n = prob.q, prob.n
    E = _segment_directions(prob, P)
    # Linearized path length: S = M x - e_0 . x_D, one row per constraint.
    M = np.zeros((q, q, n))
    for j in range(q):
        M[j, : j + 1] += E[: j + 1]
        M[j, :j] -= E[1 : j + 1]
    M = M.reshape(q, q * n)
    s0 = float(E[0] @ prob.xd)
    exact_first = prob.delay == 0.0
    if exact_first:
        c0, R0 = apollonius_center_radius(prob.a[0], prob.xd, prob.nu[0])
    A = prob.a.ravel()

    def cons(x):
        U = (x - A).reshape(q, n)
        r = np.sqrt(np.einsum("ij,ij->i", U, U) + SMOOTHING**2)
        c = prob.nu * (prob.delay + M @ x - s0) - r
        if exact_first:
            d = x[:n] - c0
            c[0] = (R0 * R0 - d @ d) / (2.0 * R0)
        return c

    def cons_jac(x):
        U = (x - A).reshape(q, n)
        r = np.sqrt(np.einsum("ij,ij->i", U, U) + SMOOTHING**2)
        Jc = prob.nu[:, None] * M
        blocks = Jc.reshape(q, q, n)
        blocks[np.arange(q), np.arange(q)] -= U / r[:, None]
        Jc = blocks.reshape(q, q * n)
        if exact_first:
            Jc[0] = 0.0
            Jc[0, :n] = -(x[:n] - c0) / R0
        return Jc

    x0 = P.ravel()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = minimize(
            prob.f, x0, jac=prob.grad_f, method="SLSQP",
            constraints=[{"type": "ineq", "fun": cons, "jac": cons_jac}],
            options={"maxiter": 200, "ftol": 1e-15},
        )
    return prob.shape(res.x).copy()


def _newton_kkt(prob: LiveProblem, P: np.ndarray, active: list[int], max_iter: int = 30):
    """Newton's method on ``grad f + J_A^T lam = 0, g_A = 0``; returns ``(P, lam_A)`` or None."""
    x = P.ravel().copy()
    A = np.asarray(active, dtype=int)
    nA = A.size
    dim = x.size

    def F(x, lam):
        r1 = prob.grad_f(x)
        if nA:
            r1 = r1 + prob.jac(x, A).T @ lam
            return np.concatenate([r1, prob.g(x)[A]])
        return r1

    try:
        if nA:
            lam = np.linalg.lstsq(prob.jac(x, A).T, -prob.grad_f(x), rcond=None)[0]
        else:
            lam = np.zeros(0)
        Fx = F(x, lam)
        scale = 1.0 + np.abs(prob.grad_f(x)).max()
        for _ in range(max_iter):
            err = np.abs(Fx).max()
            if err <= 1e-13 * scale:
                break
            H = prob.lagrangian_hessian(x, np.zeros(prob.q) if not nA else _expand(lam, A, prob.q))
            K = np.zeros((dim + nA, dim + nA))
            K[:dim, :dim] = H
            if nA:
                JA = prob.jac(x, A)
                K[:dim, dim:] = JA.T
                K[dim:, :dim] = JA
            try:
                step = np.linalg.solve(K, -Fx)
            except np.linalg.LinAlgError:
                return None
            t = 1.0
            while t >= 1.0 / 64:
                xn, ln = x + t * step[:dim], lam + t * step[dim:]
                try:
                    Fn = F(xn, ln)
                except DegeneratePointError:
                    Fn = None
                if Fn is not None and np.all(np.isfinite(Fn)) and np.abs(Fn).max() < err:
                    break
                t *= 0.5
            else:
                # No decrease: accept only if already at rounding level.
                if err <= 1e-10 * scale:
                    break
                return None
            x, lam, Fx = xn, ln, Fn
        else:
            if np.abs(Fx).max() > 1e-10 * scale:
                return None
    except DegeneratePointError:
        return None
    return prob.shape(x).copy(), lam


def _expand(lam_a, A, q) -> np.ndarray:
    lam = np.zeros(q)
    lam[A] = lam_a
    return lam


def polish(prob: LiveProblem, P: np.ndarray, active_tol: float | None = None):
    """Refine ``P`` to an exact KKT point by active-set Newton; returns ``(P, lam)`` or None."""
    g = prob.g(P)
    if active_tol is None:
        active_tol = 1e-3 * max(1.0, float(prob.path_lengths(P)[-1]))
    active = sorted(int(j) for j in np.flatnonzero(g > -active_tol))
    tried: set[tuple[int, ...]] = set()
    for _ in range(2 * prob.q + 2):
        key = tuple(active)
        if key in tried:
            return None
        tried.add(key)
        out = _newton_kkt(prob, P, active)
        if out is None:
            return None
        Pn, lam_a = out
        lam = _expand(lam_a, np.asarray(active, dtype=int), prob.q)
        gn = prob.g(Pn)
        if active and lam_a.min() < -1e-12:
            active.remove(active[int(np.argmin(lam_a))])
            continue
        viol = [int(j) for j in np.flatnonzero(gn > 1e-12 * (1.0 + prob.path_lengths(Pn)[-1]))]
        if viol:
            active = sorted(set(active) | set(viol))
            continue
        return Pn, np.maximum(lam, 0.0)
    return None


def estimate_multipliers(prob: LiveProblem, P: np.ndarray) -> np.ndarray:
    """Nonnegative least-squares multipliers on the near-active constraints."""
    g = prob.g(P)
    tol = 1e-6 * max(1.0, float(prob.path_lengths(P)[-1]))
    act = np.flatnonzero(g > -tol)
    lam = np.zeros(prob.q)
    if act.size:
        try:
            J = prob.jac(P, act)
        except DegeneratePointError:
            return lam
        lam[act] = nnls(J.T, -prob.grad_f(P))[0]
    return lam


def local_solve(
    prob: LiveProblem,
    P0,
    *,
    max_iter: int = 200,
    tol: float = 1e-12,
    warm: bool = False,
    use_polish: bool = True,
):
    """Run CCP from ``P0``; returns ``(P, lam, history, polished)``.

    With ``warm`` the Newton polish is attempted before any convexified step,
    which is the fast path when ``P0`` comes from a nearby solve.
    """
    if use_polish and warm:
        # A nearby plan is usually only slightly infeasible; Newton handles that directly.
        P0 = prob.shape(P0)
        try:
            out = polish(prob, P0) if np.all(np.isfinite(P0)) else None
        except DegeneratePointError:
            out = None
        if out is not None:
            return out[0], out[1], [prob.f(P0), prob.f(out[0])], True
    P = repair_feasibility(prob, P0)
    f = prob.f(P)
    history = [f]
    slack = 1e-12 * (1.0 + abs(f))

    def try_polish(P, f):
        out = polish(prob, P)
        if out is None:
            return None
        Pn, lam = out
        if prob.f(Pn) <= f + slack:
            return Pn, lam
        return None

    for _ in range(max_iter):
        Pn = ccp_step(prob, P)
        fn = prob.f(Pn)
        gmax = prob.g(Pn).max()
        # Small violations from the subproblem solver are repaired below.
        if gmax > 1e-6 * (1.0 + abs(prob.path_lengths(P)[-1])):
            log.debug("CCP step rejected (gmax=%.3e)", gmax)
            break
        if gmax > 0.0:
            Pn = repair_feasibility(prob, Pn)
            fn = prob.f(Pn)
        if fn > f + slack:
            log.debug("CCP step rejected (df=%.3e)", fn - f)
            break
        decrease = f - fn
        P, f = Pn, min(fn, f)
        history.append(f)
        if use_polish and decrease < 1e-2 * (1.0 + abs(f)):
            out = try_polish(P, f)
            if out is not None:
                history.append(prob.f(out[0]))
                return out[0], out[1], history, True
        if decrease < tol:
            break
    else:
        raise MaxIterationsError(f"CCP did not converge in {max_iter} iterations", last=P)
    if use_polish:
        out = try_polish(P, f)
        if out is not None:
            history.append(prob.f(out[0]))
            return out[0], out[1], history, True
    return P, estimate_multipliers(prob, P), history, False


def build_plan(
    prob: LiveProblem, phase: int, P, lam, tols: Tolerances, history=(), polished=False
) -> CapturePlan:
    P = prob.shape(P).copy()
    lam = np.asarray(lam, dtype=float).copy()
    try:
        cert, act = certify_arrays(prob, P, lam, tols)
        res = residual(prob, P, lam)
    except DegeneratePointError:
        from .plan import Certificates

        cert = Certificates(False, False, False, float("nan"))
        act = np.flatnonzero(np.abs(prob.g(P)) <= tols.kkt_tol)
        res = float("inf")
    P.setflags(write=False)
    lam.setflags(write=False)
    return CapturePlan(
        phase=phase,
        points=P,
        multipliers=lam,
        value=prob.f(P),
        kkt_residual=res,
        active_set=tuple(int(j) + phase for j in act),
        certificates=cert,
        history=tuple(float(v) for v in history),
        polished=polished,
    )


def default_start(prob: LiveProblem) -> np.ndarray:
    """Feasible plan: the first point at its Apollonius center, later attackers standing still."""
    P = prob.a.copy()
    if prob.delay == 0.0:
        P[0] = apollonius_center_radius(prob.a[0], prob.xd, prob.nu[0])[0]
    return P


def ccp_solve(
    state: GameState,
    cfg: GameConfig,
    phase: int | None = None,
    initial_points=None,
    *,
    max_iter: int = 200,
    warm: bool = False,
) -> CapturePlan:
    """Find a stationary capture plan for ``phase`` starting from ``initial_points``."""
    phase = state.phase if phase is None else int(phase)
    prob = LiveProblem.from_state(state, cfg, phase)
    P0 = default_start(prob) if initial_points is None else initial_points
    P, lam, hist, polished = local_solve(prob, P0, max_iter=max_iter, warm=warm)
    return build_plan(prob, phase, P, lam, cfg.tolerances, hist, polished)
