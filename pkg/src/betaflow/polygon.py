"""Planar polygons and their elementary geometry.

A polygon is stored as a 1-D complex numpy array ``X`` of length N >= 3 with
vertex ``X[j] = x_j + i y_j``. Indices are cyclic modulo N everywhere.
Anything accepted by :func:`as_polygon` (complex sequences, ``(N, 2)`` real
arrays, lists of ``[x, y]`` pairs) can be passed where a polygon is expected.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateVertex

#: relative distance (in units of the polygon diameter) below which two
#: consecutive vertices count as coincident
COINCIDENCE_RTOL = 1e-12


def as_polygon(P) -> np.ndarray:
    """Validate ``P`` and return it as a complex vertex array (a copy)."""
    arr = np.asarray(P)
    if arr.ndim == 2 and arr.shape[1] == 2 and not np.iscomplexobj(arr):
        X = arr[:, 0].astype(float) + 1j * arr[:, 1].astype(float)
    elif arr.ndim == 1:
        X = arr.astype(complex)
    else:
        raise ValueError(f"cannot interpret array of shape {arr.shape} as a polygon")
    if X.shape[0] < 3:
        raise ValueError(f"a polygon needs at least 3 vertices, got {X.shape[0]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("polygon vertices must be finite")
    return X


def to_xy(P) -> np.ndarray:
    """``(N, 2)`` real array of vertex coordinates."""
    X = as_polygon(P)
    return np.column_stack([X.real, X.imag])


def flatten(P) -> np.ndarray:
    """Real 2N-vector ``(x_0..x_{N-1}, y_0..y_{N-1})`` (real block, then imaginary)."""
    X = as_polygon(P)
    return np.concatenate([X.real, X.imag])


def unflatten(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = v.shape[0] // 2
    return v[:n] + 1j * v[n:]


@dataclass(frozen=True)
class FlowParams:
    """Flow exponent ``beta >= 0``; the energy exponent is ``alpha = beta + 2``.

    ``angle_floor_delta`` is the optional ``delta`` in (0, 1] of the angle
    bound ``sin**2(theta) >= delta``.
    """

    beta: float
    angle_floor_delta: Optional[float] = None

    def __post_init__(self):
        if not self.beta >= 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        d = self.angle_floor_delta
        if d is not None and not 0 < d <= 1:
            raise ValueError(f"angle_floor_delta must lie in (0, 1], got {d}")

    @property
    def alpha(self) -> float:
        return self.beta + 2.0


def regular_polygon(N: int, k: int = 1) -> np.ndarray:
    """Vertices ``exp(2 pi i j k / N)``, j = 0..N-1.

    ``k = 1`` is the counterclockwise convex regular N-gon on the unit circle;
    other ``k`` give star polygons, and ``k = 0`` the point polygon at 1.
    """
    if N < 3:
        raise ValueError(f"N must be >= 3, got {N}")
    if not 0 <= k < N:
        raise ValueError(f"k must lie in [0, N-1], got {k}")
    j = np.arange(N)
    return np.exp(2j * np.pi * j * k / N)


def edges(P) -> np.ndarray:
    """Edge vectors ``X[j+1] - X[j]``."""
    X = as_polygon(P)
    return np.roll(X, -1) - X


def edge_lengths(P) -> np.ndarray:
    return np.abs(edges(P))


def diameter(P) -> float:
    X = as_polygon(P)
    return float(np.max(np.abs(X[:, None] - X[None, :])))


def interior_angles(P) -> np.ndarray:
    """Angle at each vertex, in (0, 2 pi).

    ``theta[j]`` is the counterclockwise rotation taking the direction of
    ``X[j+1] - X[j]`` onto the direction of ``X[j-1] - X[j]``. Convex
    counterclockwise polygons therefore get angles in (0, pi); reflex vertices
    get angles above pi.

    Raises
    ------
    DegenerateVertex
        If two consecutive vertices are closer than ``1e-12 * diameter``.
    """
    X = as_polygon(P)
    fwd = np.roll(X, -1) - X
    bwd = np.roll(X, 1) - X
    scale = diameter(X)
    bad = np.abs(fwd) <= COINCIDENCE_RTOL * scale
    if scale == 0.0 or np.any(bad):
        j = int(np.argmax(bad)) if scale > 0 else 0
        raise DegenerateVertex(f"vertices {j} and {(j + 1) % len(X)} coincide")
    # unit directions first, so the product cannot underflow for tiny polygons
    fwd = fwd / np.abs(fwd)
    bwd = bwd / np.abs(bwd)
    rel = bwd * np.conj(fwd)
    return np.mod(np.arctan2(rel.imag, rel.real), 2 * np.pi)


def energy(P, alpha: float) -> float:
    """``F_alpha = (1/alpha) * sum_j l_j**alpha``."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return float(np.sum(edge_lengths(P) ** alpha) / alpha)


def p_norm(P, p: float) -> float:
    """``(sum_k |X_k|**p)**(1/p)`` over the planar vertex magnitudes."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    r = np.abs(np.asarray(P, dtype=complex))
    if np.isinf(p):
        return float(r.max())
    return float(np.sum(r**p) ** (1.0 / p))


def center_of_mass(P) -> complex:
    return complex(np.mean(as_polygon(P)))


def edge_weights(P, beta: float) -> np.ndarray:
    # numpy gives 0.0**0.0 == 1.0, the convention wanted for beta == 0
    return edge_lengths(P) ** beta


def laplacian(P, beta: float) -> np.ndarray:
    """Weighted cycle Laplacian ``M_X`` with edge weights ``l_j**beta``.

    Symmetric, zero row sums, and ``M_X @ X`` is the flow velocity.
    """
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    X = as_polygon(P)
    N = X.shape[0]
    w = edge_weights(X, beta)
    j = np.arange(N)
    nxt = (j + 1) % N
    M = np.zeros((N, N))
    M[j, nxt] = w
    M[nxt, j] = w
    M[j, j] = -(w + np.roll(w, 1))
    return M


def apply_similarity(P, scale: float = 1.0, rotation: float = 0.0, translation=0.0) -> np.ndarray:
    """Map every vertex by ``z -> scale * exp(i rotation) * z + translation``."""
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    X = as_polygon(P)
    if not np.isscalar(translation):
        translation = complex(*translation)
    return scale * np.exp(1j * rotation) * X + translation


def is_counterclockwise(P) -> bool:
    """Sign of the shoelace area."""
    X = as_polygon(P)
    return float(np.sum((np.conj(X) * np.roll(X, -1)).imag)) > 0
