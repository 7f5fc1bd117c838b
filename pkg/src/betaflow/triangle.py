"""Triangles: closed-form angle dynamics and the Lyapunov function
``V = -(pi - th0)(pi - th1)(pi - th2)``.

Edge ``l_j`` joins vertices j and j+1, so ``l_1`` is opposite the angle at
vertex 0, ``l_2`` opposite vertex 1 and ``l_0`` opposite vertex 2. Triangles
are expected counterclockwise; relabel a clockwise triangle (reverse its
vertex order) before using these functions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTriangle, DegenerateVertex
from .polygon import as_polygon, edge_lengths, interior_angles

DEGENERATE_SIN = 1e-12
AREA_RTOL = 1e-10
ANGLE_SUM_TOL = 1e-10


@dataclass(frozen=True)
class TriangleAngles:
    """Angles of a triangle: each in (0, pi), summing to pi within 1e-10."""

    theta: tuple

    def __post_init__(self):
        th = tuple(float(v) for v in self.theta)
        if len(th) != 3:
            raise ValueError("expected three angles")
        if not all(0.0 < v < np.pi for v in th):
            raise ValueError(f"angles must lie in (0, pi): {th}")
        if abs(sum(th) - np.pi) > ANGLE_SUM_TOL:
            raise ValueError(f"angle sum {sum(th)!r} differs from pi by more than {ANGLE_SUM_TOL}")
        object.__setattr__(self, "theta", th)

    def __iter__(self):
        return iter(self.theta)

    def __array__(self, dtype=None, copy=None):
        return np.array(self.theta, dtype=dtype)

    @classmethod
    def of(cls, P) -> "TriangleAngles":
        return cls(tuple(_triangle(P)[2]))


def _triangle(P):
    X = as_polygon(P)
    if X.shape[0] != 3:
        raise ValueError(f"expected a triangle, got {X.shape[0]} vertices")
    try:
        th = interior_angles(X)
    except DegenerateVertex as exc:
        raise DegenerateTriangle(str(exc)) from exc
    s = np.sin(th)
    if np.any(s < DEGENERATE_SIN):
        raise DegenerateTriangle(
            "triangle is degenerate or clockwise (some sin(theta) < 1e-12); "
            "reverse the vertex order for clockwise input"
        )
    return X, edge_lengths(X), th, s


def triangle_area(P) -> float:
    """Mean of ``l0 l2 sin th0 / 2``, ``l0 l1 sin th1 / 2`` and ``l1 l2 sin th2 / 2``.

    The three expressions must agree to 1e-10 relative.
    """
    _, l, _, s = _triangle(P)
    areas = 0.5 * np.array([l[0] * l[2] * s[0], l[0] * l[1] * s[1], l[1] * l[2] * s[2]])
    S = float(areas.mean())
    if np.ptp(areas) > AREA_RTOL * S:
        raise ArithmeticError(f"area expressions disagree: {areas}")
    return S


def triangle_angle_rhs(P, beta: float) -> np.ndarray:
    """``(d th0/dt, d th1/dt, d th2/dt)`` from the triangle closed forms."""
    _, l, _, s = _triangle(P)
    S = triangle_area(P)
    T = l**2 * s**2
    lb = l**beta
    return np.array(
        [
            T[1] * (lb[2] - lb[1]) + T[0] * (lb[0] - lb[1]),
            T[2] * (lb[0] - lb[2]) + T[1] * (lb[1] - lb[2]),
            T[0] * (lb[1] - lb[0]) + T[2] * (lb[2] - lb[0]),
        ]
    ) / (2 * S)


def lyapunov_V(angles) -> float:
    """``-(pi - th0)(pi - th1)(pi - th2)``; minimum ``-(2 pi/3)**3`` at the equilateral point."""
    th = np.asarray(angles, dtype=float)
    return float(-np.prod(np.pi - th))


def lyapunov_V_grad(angles) -> np.ndarray:
    d = np.pi - np.asarray(angles, dtype=float)
    return np.array([d[1] * d[2], d[0] * d[2], d[0] * d[1]])


def lyapunov_V_dot(P, beta: float) -> float:
    """Closed-form ``dV/dt``; nonpositive, zero only for the equilateral triangle."""
    _, l, th, s = _triangle(P)
    S = triangle_area(P)
    T = l**2 * s**2
    lb = l**beta
    val = (
        T[1] * (lb[2] - lb[1]) * (th[0] - th[1]) * (np.pi - th[2])
        + T[0] * (lb[0] - lb[1]) * (th[0] - th[2]) * (np.pi - th[1])
        + T[2] * (lb[0] - lb[2]) * (th[1] - th[2]) * (np.pi - th[0])
    )
    return float(val / (2 * S))
