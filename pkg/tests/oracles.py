"""Reference computations that share no code with the package solver."""

from __future__ import annotations

import numpy as np


def apollonius_by_completing_square(a, xd, nu):
    """Center and radius of ``{p : |p - a|^2 <= nu^2 |p - xd|^2}``.

    Expanding gives ``(1 - nu^2)|p|^2 - 2 p.(a - nu^2 xd) + |a|^2 - nu^2 |xd|^2 <= 0``.
    """
    a, xd = np.asarray(a, float), np.asarray(xd, float)
    k = 1.0 - nu * nu
    c = (a - nu * nu * xd) / k
    const = (a @ a - nu * nu * (xd @ xd)) / k
    return c, float(np.sqrt(c @ c - const))


def single_ball_projection(a, xd, nu, center, radius):
    """Minimizer and value of ``|p - center|^2 - radius^2`` over the Apollonius ball."""
    c, R = apollonius_by_completing_square(a, xd, nu)
    center = np.asarray(center, float)
    d = center - c
    dist = np.linalg.norm(d)
    p = center.copy() if dist <= R else c + R * d / dist
    return p, float((p - center) @ (p - center) - radius * radius)


def _h(points, center, radius):
    d = points - center
    return np.einsum("...i,...i->...", d, d) - radius * radius


def polar_grid_single(a, xd, nu, center, radius, n=800):
    """Brute-force minimum over an ``n x n`` polar grid covering the Apollonius ball.

    The grid is laid out with the completed-square ball; membership of each grid
    point is decided on the raw reachability inequality.
    """
    a, xd = np.asarray(a, float), np.asarray(xd, float)
    c, R = apollonius_by_completing_square(a, xd, nu)
    rho = np.linspace(0.0, R, n)
    ang = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    P = c + rho[:, None, None] * np.stack([np.cos(ang), np.sin(ang)], axis=-1)[None, :, :]
    P = P.reshape(-1, 2)
    slack = 1e-12 * (1.0 + np.linalg.norm(a - xd))
    ok = np.linalg.norm(P - a, axis=1) / nu <= np.linalg.norm(P - xd, axis=1) + slack
    vals = _h(P[ok], center, radius)
    k = int(np.argmin(vals))
    return P[ok][k], float(vals[k])


def _box_grid(lo, hi, n):
    xs = np.linspace(lo[0], hi[0], n)
    ys = np.linspace(lo[1], hi[1], n)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel()])


def _best_pair(G1, G2, a, xd, nu, theta, center, radius, chunk=256):
    """Minimum of theta_1 h(p1) + theta_2 h(p2) over feasible pairs of grid points."""
    ok1 = np.linalg.norm(G1 - a[0], axis=1) / nu[0] <= np.linalg.norm(G1 - xd, axis=1)
    G1 = G1[ok1]
    if not len(G1):
        return np.inf, None, None
    h1 = theta[0] * _h(G1, center, radius)
    h2 = theta[1] * _h(G2, center, radius)
    t2 = np.linalg.norm(G2 - a[1], axis=1) / nu[1]
    d1 = np.linalg.norm(G1 - xd, axis=1)
    best, bi, bj = np.inf, None, None
    for s in range(0, len(G1), chunk):
        blk = slice(s, s + chunk)
        seg = np.hypot(G2[None, :, 0] - G1[blk, None, 0], G2[None, :, 1] - G1[blk, None, 1])
        cost = np.where(t2[None, :] <= d1[blk, None] + seg, h1[blk, None] + h2[None, :], np.inf)
        k = int(np.argmin(cost))
        i, j = divmod(k, len(G2))
        if cost[i, j] < best:
            best, bi, bj = float(cost[i, j]), G1[s + i], G2[j]
    return best, bi, bj


def grid_two_attackers(a, xd, nu, theta, center, radius, n=120, n_fine=40, shrink=4.0, min_width=1e-7,
                       max_passes=200):
    """Coarse ``n^4`` grid search for two capture points, then a zoomed grid pattern search.

    Each pass re-grids ``n_fine x n_fine`` boxes around the incumbent pair. The boxes keep
    their size while the incumbent improves (so it can slide along a curved active
    boundary) and shrink by ``shrink`` once it stops. The result is an upper bound on the
    true minimum.
    """
    a, xd = np.asarray(a, float), np.asarray(xd, float)
    nu, theta = np.asarray(nu, float), np.asarray(theta, float)
    r1 = nu[0] * np.linalg.norm(a[0] - xd) / (1.0 - nu[0])
    # |p2 - a2| <= nu2 (|p1 - xd| + |p2 - p1|) bounds p2 once p1 is confined.
    far = np.linalg.norm(a[0] - xd) + r1 + np.linalg.norm(a[1] - a[0]) + r1
    r2 = nu[1] * far / (1.0 - nu[1])
    lo1, hi1 = a[0] - r1, a[0] + r1
    lo2, hi2 = a[1] - r2, a[1] + r2
    best, p1, p2 = _best_pair(_box_grid(lo1, hi1, n), _box_grid(lo2, hi2, n), a, xd, nu, theta, center, radius)
    w1, w2 = 3 * (hi1 - lo1) / (n - 1), 3 * (hi2 - lo2) / (n - 1)
    for _ in range(max_passes):
        if max(np.max(w1), np.max(w2)) < min_width:
            break
        G1 = _box_grid(p1 - w1, p1 + w1, n_fine)
        G2 = _box_grid(p2 - w2, p2 + w2, n_fine)
        val, q1, q2 = _best_pair(G1, G2, a, xd, nu, theta, center, radius)
        if val < best - 1e-15:
            best, p1, p2 = val, q1, q2
        else:
            w1, w2 = w1 / shrink, w2 / shrink
    return best, p1, p2
