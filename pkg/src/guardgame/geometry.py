"""Convex target areas ``T = {x : h(x) <= 0}`` with exact derivatives.

Each shape exposes the proximity function ``h`` together with its gradient and
Hessian. All shapes are dimension-generic and immutable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import InvalidArgumentError


def _as_point(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (dim,):
        raise InvalidArgumentError(f"expected a point of dimension {dim}, got shape {x.shape}")
    return x


class ProximityShape:
    """Abstract convex, twice-differentiable proximity function."""

    kind: str = ""

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def value(self, x) -> float:
        raise NotImplementedError

    def gradient(self, x) -> np.ndarray:
        raise NotImplementedError

    def hessian(self, x) -> np.ndarray:
        raise NotImplementedError

    def contains(self, x) -> bool:
        return self.value(x) <= 0.0

    def values(self, pts: np.ndarray) -> np.ndarray:
        """Vectorized ``h`` over the last axis of ``pts``."""
        raise NotImplementedError

    def scaled(self, s: float) -> "ProximityShape":
        """Shape obtained by scaling space by ``s`` about the origin."""
        raise NotImplementedError

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Ellipsoid(ProximityShape):
    """``h(x) = (x - center)^T Q (x - center) - level`` with ``Q`` symmetric positive definite."""

    center: np.ndarray
    shape_matrix: np.ndarray
    level: float = 1.0
    kind: str = field(default="ellipsoid", init=False, repr=False)

    def __post_init__(self):
        c = np.array(self.center, dtype=float).reshape(-1)
        q = np.array(self.shape_matrix, dtype=float)
        if c.size < 1:
            raise InvalidArgumentError("center must have at least one coordinate")
        if q.shape != (c.size, c.size):
            raise InvalidArgumentError("shape_matrix must be square and match the center dimension")
        if not np.allclose(q, q.T, atol=1e-12):
            raise InvalidArgumentError("shape_matrix must be symmetric")
        if np.linalg.eigvalsh(q).min() <= 0.0:
            raise InvalidArgumentError("shape_matrix must be positive definite")
        c.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "shape_matrix", q)
        object.__setattr__(self, "level", float(self.level))

    @property
    def dim(self) -> int:
        return self.center.size

    def value(self, x) -> float:
        d = _as_point(x, self.dim) - self.center
        return float(d @ self.shape_matrix @ d - self.level)

    def values(self, pts: np.ndarray) -> np.ndarray:
        d = np.asarray(pts, dtype=float) - self.center
        return np.einsum("...i,ij,...j->...", d, self.shape_matrix, d) - self.level

    def gradient(self, x) -> np.ndarray:
        d = _as_point(x, self.dim) - self.center
        return 2.0 * self.shape_matrix @ d

    def hessian(self, x) -> np.ndarray:
        _as_point(x, self.dim)
        return 2.0 * np.array(self.shape_matrix)

    def scaled(self, s: float) -> "Ellipsoid":
        # h_s(x) = s^2 h(x / s) keeps the same zero level set scaled by s.
        return Ellipsoid(self.center * s, self.shape_matrix, self.level * s * s)

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": "ellipsoid",
            "params": {
                "center": self.center.tolist(),
                "shape_matrix": self.shape_matrix.tolist(),
                "level": self.level,
            },
        }


@dataclass(frozen=True, eq=False, init=False)
class Ball(Ellipsoid):
    """Euclidean ball, ``h(x) = ||x - center||^2 - radius^2``."""

    radius: float = 1.0
    kind: str = field(default="ball", init=False, repr=False)

    def __init__(self, center, radius: float):
        c = np.array(center, dtype=float).reshape(-1)
        if not radius > 0.0:
            raise InvalidArgumentError("ball radius must be positive")
        object.__setattr__(self, "radius", float(radius))
        super().__init__(c, np.eye(c.size), float(radius) ** 2)
        object.__setattr__(self, "kind", "ball")

    def value(self, x) -> float:
        d = _as_point(x, self.dim) - self.center
        return float(d @ d - self.radius**2)

    def values(self, pts: np.ndarray) -> np.ndarray:
        d = np.asarray(pts, dtype=float) - self.center
        return np.einsum("...i,...i->...", d, d) - self.radius**2

    def scaled(self, s: float) -> "Ball":
        return Ball(self.center * s, self.radius * s)

    def __repr__(self) -> str:
        return f"Ball(center={self.center.tolist()}, radius={self.radius})"

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "ball", "params": {"center": self.center.tolist(), "radius": self.radius}}


@dataclass(frozen=True, eq=False)
class HalfSpace(ProximityShape):
    """``h(x) = normal . x - offset`` with a unit normal."""

    normal: np.ndarray
    offset: float = 0.0
    kind: str = field(default="halfspace", init=False, repr=False)

    def __post_init__(self):
        nrm = np.array(self.normal, dtype=float).reshape(-1)
        if nrm.size < 1:
            raise InvalidArgumentError("normal must have at least one coordinate")
        if abs(np.linalg.norm(nrm) - 1.0) > 1e-9:
            raise InvalidArgumentError("half-space normal must have unit norm")
        nrm.setflags(write=False)
        object.__setattr__(self, "normal", nrm)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self) -> int:
        return self.normal.size

    def value(self, x) -> float:
        return float(self.normal @ _as_point(x, self.dim) - self.offset)

    def values(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(pts, dtype=float) @ self.normal - self.offset

    def gradient(self, x) -> np.ndarray:
        _as_point(x, self.dim)
        return np.array(self.normal)

    def hessian(self, x) -> np.ndarray:
        _as_point(x, self.dim)
        return np.zeros((self.dim, self.dim))

    def scaled(self, s: float) -> "HalfSpace":
        return HalfSpace(self.normal, self.offset * s)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "halfspace", "params": {"normal": self.normal.tolist(), "offset": self.offset}}


def h_value(shape: ProximityShape, x) -> float:
    return shape.value(x)


def h_gradient(shape: ProximityShape, x) -> np.ndarray:
    return shape.gradient(x)


def h_hessian(shape: ProximityShape, x) -> np.ndarray:
    return shape.hessian(x)


def contains(shape: ProximityShape, x) -> bool:
    return shape.contains(x)


def shape_from_dict(data: dict[str, Any]) -> ProximityShape:
    """Build a shape from ``{"kind": ..., "params": {...}}``."""
    try:
        kind = str(data["kind"]).lower()
        params = dict(data["params"])
    except (KeyError, TypeError) as exc:
        raise InvalidArgumentError("target must be an object with 'kind' and 'params'") from exc
    expected = {
        "ball": {"center", "radius"},
        "ellipsoid": {"center", "shape_matrix", "level"},
        "halfspace": {"normal", "offset"},
    }
    if kind not in expected:
        raise InvalidArgumentError(f"unknown target kind {kind!r}")
    if set(params) != expected[kind]:
        raise InvalidArgumentError(
            f"target {kind!r} expects params {sorted(expected[kind])}, got {sorted(params)}"
        )
    if kind == "ball":
        return Ball(params["center"], params["radius"])
    if kind == "ellipsoid":
        return Ellipsoid(params["center"], params["shape_matrix"], params["level"])
    return HalfSpace(params["normal"], params["offset"])
