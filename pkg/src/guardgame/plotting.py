"""Static SVG rendering of a simulated run (planar games only)."""

from __future__ import annotations

import xml.etree.ElementTree as ET

import numpy as np

from .game import GameConfig, GameState
from .geometry import Ball, Ellipsoid, HalfSpace
from .simulator import Trajectory
from .solver.single import apollonius_center_radius

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def region_boundary(state: GameState, cfg: GameConfig, j: int, earlier, n_rays: int = 180) -> np.ndarray:
    """Boundary of ``{p : g_j(p) <= 0}`` with the earlier capture points fixed.

    Along any ray from the attacker ``g_j`` grows at rate at least ``1/nu - 1 > 0``,
    so each ray crosses the boundary once; the crossing is found by bisection.
    For the first live attacker this is the Apollonius circle.
    """
    earlier = np.asarray(earlier, dtype=float).reshape(-1, cfg.n)
    a = state.attackers[j]
    nu = cfg.speeds[j]
    path = np.vstack([state.defender[None, :], earlier])
    head = float(np.sum(np.linalg.norm(np.diff(path, axis=0), axis=1)))
    last = path[-1]
    r_max = (head + np.linalg.norm(a - last)) * nu / (1.0 - nu) + 1e-9

    def g(p):
        return np.linalg.norm(p - a) / nu - head - np.linalg.norm(p - last)

    out = np.empty((n_rays, 2))
    for k, ang in enumerate(np.linspace(0.0, 2.0 * np.pi, n_rays, endpoint=False)):
        u = np.array([np.cos(ang), np.sin(ang)])
        lo, hi = 0.0, r_max
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if g(a + mid * u) <= 0.0:
                lo = mid
            else:
                hi = mid
        out[k] = a + lo * u
    return out


class _Frame:
    def __init__(self, pts: np.ndarray, size: int, pad: float = 0.05):
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        span = float(max(hi - lo)) or 1.0
        self.lo = lo - pad * span
        self.scale = size / (span * (1 + 2 * pad))
        self.size = size

    def __call__(self, p) -> tuple[float, float]:
        x = (p[0] - self.lo[0]) * self.scale
        y = self.size - (p[1] - self.lo[1]) * self.scale
        return round(float(x), 3), round(float(y), 3)

    def poly(self, pts, max_points: int = 2000) -> str:
        pts = np.asarray(pts)
        if len(pts) > max_points:
            idx = np.unique(np.r_[np.linspace(0, len(pts) - 1, max_points).astype(int), len(pts) - 1])
            pts = pts[idx]
        return " ".join(f"{x},{y}" for x, y in (self(p) for p in pts))


def render_svg(traj: Trajectory, cfg: GameConfig, size: int = 640, n_rays: int = 180) -> str:
    if cfg.n != 2:
        raise ValueError("SVG rendering supports planar games only")
    x0 = traj.states[0]
    plan = traj.initial_report.best
    regions = []
    for k, j in enumerate(range(x0.phase, cfg.m)):
        if k == 0:
            c, r = apollonius_center_radius(x0.attackers[j], x0.defender, cfg.speeds[j])
            regions.append(("circle", c, r))
        else:
            regions.append(("cloud", region_boundary(x0, cfg, j, plan.points[:k], n_rays), None))

    tgt = cfg.target
    extent = [traj.attackers.reshape(-1, 2), traj.defender]
    if isinstance(tgt, Ellipsoid):
        t = np.linspace(0, 2 * np.pi, 181)
        w, v = np.linalg.eigh(tgt.shape_matrix)
        circle = np.column_stack([np.cos(t), np.sin(t)]) * np.sqrt(tgt.level / w)
        target_pts = tgt.center + circle @ v.T
        extent.append(target_pts)
    for kind, c, r in regions:
        extent.append(np.array([c - r, c + r]) if kind == "circle" else c)
    frame = _Frame(np.vstack(extent), size)

    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg", width=str(size), height=str(size),
                     viewBox=f"0 0 {size} {size}")
    ET.SubElement(svg, "rect", width=str(size), height=str(size), fill="white")
    if isinstance(tgt, Ball):
        cx, cy = frame(tgt.center)
        ET.SubElement(svg, "circle", {"class": "target", "cx": str(cx), "cy": str(cy),
                                      "r": str(round(tgt.radius * frame.scale, 3)),
                                      "fill": "#dddddd", "stroke": "black"})
    elif isinstance(tgt, Ellipsoid):
        ET.SubElement(svg, "polygon", {"class": "target", "points": frame.poly(target_pts),
                                       "fill": "#dddddd", "stroke": "black"})
    elif isinstance(tgt, HalfSpace):
        # A long segment along the boundary; the viewBox clips it.
        nrm = tgt.normal
        base = nrm * tgt.offset
        tan = np.array([-nrm[1], nrm[0]]) * (size / frame.scale)
        ET.SubElement(svg, "line", {"class": "target", "stroke": "black",
                                    **dict(zip(("x1", "y1"), map(str, frame(base - tan)))),
                                    **dict(zip(("x2", "y2"), map(str, frame(base + tan))))})
    for k, (kind, c, r) in enumerate(regions):
        j = x0.phase + k
        color = PALETTE[j % len(PALETTE)]
        if kind == "circle":
            cx, cy = frame(c)
            ET.SubElement(svg, "circle", {"class": "region", "data-attacker": str(j), "cx": str(cx),
                                          "cy": str(cy), "r": str(round(r * frame.scale, 3)),
                                          "fill": "none", "stroke": color, "stroke-dasharray": "4 3"})
        else:
            g = ET.SubElement(svg, "g", {"class": "region-cloud", "data-attacker": str(j), "fill": color})
            for p in c:
                px, py = frame(p)
                ET.SubElement(g, "circle", cx=str(px), cy=str(py), r="1")
    for i in range(cfg.m):
        ET.SubElement(svg, "polyline", {"class": "attacker-path", "data-attacker": str(i),
                                        "points": frame.poly(traj.attackers[:, i]), "fill": "none",
                                        "stroke": PALETTE[i % len(PALETTE)], "stroke-width": "1.5"})
    ET.SubElement(svg, "polyline", {"class": "defender-path", "points": frame.poly(traj.defender),
                                    "fill": "none", "stroke": "black", "stroke-width": "2"})
    for e in traj.events:
        px, py = frame(e.point)
        ET.SubElement(svg, "circle", {"class": "capture-point", "data-attacker": str(e.attacker),
                                      "data-x": repr(float(e.point[0])), "data-y": repr(float(e.point[1])),
                                      "cx": str(px), "cy": str(py), "r": "4", "fill": "red"})
    ET.indent(svg)
    return ET.tostring(svg, encoding="unicode") + "\n"
