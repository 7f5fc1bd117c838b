"""Linearization of the rescaled flow at the regular polygon ``P_1``.

Polygons are flattened to real 2N-vectors ``(x_0..x_{N-1}, y_0..y_{N-1})``.
At ``P_1`` the Jacobian of the rescaled velocity is ``D + beta E`` with

    D = -lambda_1 I + diag(M, M),     E = [[A, C], [C, B]],

where ``M`` is the unweighted cycle Laplacian and ``A, B, C`` are weighted
cycle Laplacians with edge weights ``sin^2``, ``cos^2`` and ``-cos sin`` of
``(2k+1) pi/N``. The spectrum splits into translations (eigenvalue
``-lambda_1 > 0``), the rotation generator ``i P_1`` (eigenvalue 0, joined by
the reversed square ``conj(P_1)`` when N = 4), and a negative remainder.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import AmbiguousSpectrum
from .flow import regular_constants, rescaled_velocity
from .linalg import symmetric_eigs
from .polygon import flatten, regular_polygon, unflatten


def cycle_matrix(a) -> np.ndarray:
    """Cycle Laplacian with weight ``a[k]`` on the edge ``(k, k+1)``.

    ``x @ cycle_matrix(a) @ y == -sum_k a[k] (x[k+1]-x[k]) (y[k+1]-y[k])``.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    k = np.arange(n)
    nxt = (k + 1) % n
    A = np.zeros((n, n))
    A[k, nxt] += a
    A[nxt, k] += a
    A[k, k] -= a + np.roll(a, 1)
    return A


def quadratic_form_cycle(a, x, y) -> float:
    """``-sum_k a[k] (x[k+1]-x[k]) (y[k+1]-y[k])``, computed from differences."""
    a, x, y = (np.asarray(v, dtype=float) for v in (a, x, y))
    if not a.shape == x.shape == y.shape:
        raise ValueError("a, x and y must have equal lengths")
    return float(-np.sum(a * (np.roll(x, -1) - x) * (np.roll(y, -1) - y)))


@dataclass(frozen=True)
class BlockMatrices:
    N: int
    beta: float
    M: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    E: np.ndarray
    theta_param: float
    lambda_1: float

    @property
    def jacobian(self) -> np.ndarray:
        """``D + beta E``."""
        return self.D + self.beta * self.E


def build_blocks(N: int, beta: float) -> BlockMatrices:
    """Assemble ``M, A, B, C, D, E`` entry by entry for the regular N-gon."""
    if N < 3:
        raise ValueError(f"N must be >= 3, got {N}")
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    theta = np.pi / N
    _, lam1 = regular_constants(N, beta)
    k = np.arange(N)
    up, dn = (k + 1) % N, (k - 1) % N
    # index angles by edge so (k, k-1) and (k-1, k) share one rounded value
    ang_up, ang_dn = (2 * k + 1) * theta, (2 * dn + 1) * theta

    def fill(off_up, off_dn, diag):
        X = np.zeros((N, N))
        X[k, up] = off_up
        X[k, dn] = off_dn
        X[k, k] = diag
        return X

    A = fill(np.sin(ang_up) ** 2, np.sin(ang_dn) ** 2, -(np.sin(ang_dn) ** 2 + np.sin(ang_up) ** 2))
    B = fill(np.cos(ang_up) ** 2, np.cos(ang_dn) ** 2, -(np.cos(ang_dn) ** 2 + np.cos(ang_up) ** 2))
    cs_up, cs_dn = np.cos(ang_up) * np.sin(ang_up), np.cos(ang_dn) * np.sin(ang_dn)
    C = fill(-cs_up, -cs_dn, cs_dn + cs_up)
    M = fill(1.0, 1.0, -2.0)
    Z = np.zeros((N, N))
    D = -lam1 * np.eye(2 * N) + np.block([[M, Z], [Z, M]])
    E = np.block([[A, C], [C, B]])
    return BlockMatrices(N, beta, M, A, B, C, D, E, theta, lam1)


def E_quadratic_form(X, blocks: BlockMatrices) -> float:
    """``X E X^T`` as ``-sum_k [sin((2k+1)th) dx_k - cos((2k+1)th) dy_k]^2``."""
    v = np.asarray(X, dtype=float)
    N = blocks.N
    xr, xi = v[:N], v[N:]
    ang = (2 * np.arange(N) + 1) * blocks.theta_param
    dr = np.roll(xr, -1) - xr
    di = np.roll(xi, -1) - xi
    return float(-np.sum((np.sin(ang) * dr - np.cos(ang) * di) ** 2))


def fd_jacobian(N: int, beta: float, h: float = 1e-6, scale: float = 1.0) -> np.ndarray:
    """Central-difference Jacobian of the rescaled velocity at ``scale * P_1``."""
    if h <= 0:
        raise ValueError("h must be positive")
    y0 = flatten(scale * regular_polygon(N, 1))
    J = np.empty((2 * N, 2 * N))
    for j in range(2 * N):
        e = np.zeros(2 * N)
        e[j] = h
        fp = flatten(rescaled_velocity(unflatten(y0 + e), beta))
        fm = flatten(rescaled_velocity(unflatten(y0 - e), beta))
        J[:, j] = (fp - fm) / (2 * h)
    return J


def translation_vectors(N: int) -> np.ndarray:
    """Columns ``(1, 0)`` and ``(0, 1)`` blocks, normalized."""
    T = np.zeros((2 * N, 2))
    T[:N, 0] = 1.0
    T[N:, 1] = 1.0
    return T / np.sqrt(N)


def center_space_vectors(N: int) -> np.ndarray:
    """Flattened ``i P_1`` (and ``conj(P_1)`` for N = 4) as normalized columns."""
    if N < 4:
        raise ValueError("center space vectors are described for N >= 4")
    P1 = regular_polygon(N, 1)
    cols = [flatten(1j * P1)]
    if N == 4:
        cols.append(flatten(np.conj(P1)))
    return np.column_stack(cols) / np.sqrt(N)


def d_eigen_residual(N: int) -> float:
    """Largest ``|D v - (lambda_k - lambda_1) v|`` over the Fourier vectors ``(c_k, 0), (s_k, 0), (0, c_k), (0, s_k)``."""
    blocks = build_blocks(N, 1.0)
    theta = np.pi / N
    j = np.arange(N)
    worst = 0.0
    for k in range(N // 2 + 1):
        lam_k = -4 * np.sin(np.pi * k / N) ** 2
        for u in (np.cos(2 * k * j * theta), np.sin(2 * k * j * theta)):
            if not np.any(np.abs(u) > 1e-12):
                continue
            for v in (np.concatenate([u, np.zeros(N)]), np.concatenate([np.zeros(N), u])):
                r = blocks.D @ v - (lam_k - blocks.lambda_1) * v
                worst = max(worst, float(np.max(np.abs(r))))
    return worst


def _span_error(basis: np.ndarray, vectors: np.ndarray) -> float:
    """Largest distance of a (unit) column of ``vectors`` from span(``basis``)."""
    if basis.shape[1] == 0:
        return 1.0
    Qb, _ = np.linalg.qr(basis)
    worst = 0.0
    for v in vectors.T:
        v = v / np.linalg.norm(v)
        worst = max(worst, float(np.linalg.norm(v - Qb @ (Qb.T @ v))))
    return worst


@dataclass
class SpectralReport:
    N: int
    beta: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    dim_unstable: int
    dim_center: int
    dim_stable: int
    unstable_basis: np.ndarray
    center_basis: np.ndarray
    zero_threshold: float
    checks: dict = field(default_factory=dict)

    def expected_dims(self) -> tuple[int, int, int]:
        center = 2 if self.N == 4 else 1
        return 2, center, 2 * self.N - 2 - center

    @property
    def dims_ok(self) -> bool:
        return (self.dim_unstable, self.dim_center, self.dim_stable) == self.expected_dims()

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "beta": self.beta,
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "dims": {"unstable": self.dim_unstable, "center": self.dim_center, "stable": self.dim_stable},
            "zero_threshold": self.zero_threshold,
            "checks": {k: (bool(v) if isinstance(v, (bool, np.bool_)) else float(v)) for k, v in self.checks.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def classify_spectrum(
    N: int,
    beta: float,
    zero_threshold: Optional[float] = None,
    fd_h: Optional[float] = 1e-6,
) -> SpectralReport:
    """Split the spectrum of ``D + beta E`` into unstable, center and stable parts.

    Eigenvalues above ``zero_threshold`` (default ``1e-8 ||D + beta E||_2``)
    are unstable, those below ``-zero_threshold`` stable, the rest center.
    An eigenvalue within a factor 10 outside the threshold is accepted as
    zero only if its eigenvector lies in the span of
    :func:`center_space_vectors`.

    ``checks`` records eigenvector residuals, agreement of the unstable and
    center spaces with the translation and rotation vectors, the residual of
    ``D + beta E`` on the analytic center vectors, and (unless ``fd_h`` is
    None) the largest entry error of the finite-difference Jacobian.

    Raises
    ------
    AmbiguousSpectrum
    """
    blocks = build_blocks(N, beta)
    S = blocks.jacobian
    w, V = symmetric_eigs(S)
    snorm = float(np.max(np.abs(w)))
    thr = 1e-8 * snorm if zero_threshold is None else float(zero_threshold)
    analytic_center = center_space_vectors(N) if N >= 4 else np.zeros((2 * N, 0))

    kinds = []
    for i, lam in enumerate(w):
        if abs(lam) <= thr:
            kinds.append("c")
        elif abs(lam) <= 10 * thr:
            if analytic_center.shape[1] and _span_error(analytic_center, V[:, [i]]) < 1e-6:
                kinds.append("c")
            else:
                raise AmbiguousSpectrum(f"eigenvalue {lam:.3e} lies within 10x of the zero threshold {thr:.3e}")
        else:
            kinds.append("u" if lam > 0 else "s")
    kinds = np.array(kinds)

    rep = SpectralReport(
        N=N,
        beta=beta,
        eigenvalues=w,
        eigenvectors=V,
        dim_unstable=int(np.sum(kinds == "u")),
        dim_center=int(np.sum(kinds == "c")),
        dim_stable=int(np.sum(kinds == "s")),
        unstable_basis=V[:, kinds == "u"],
        center_basis=V[:, kinds == "c"],
        zero_threshold=thr,
    )
    unstable_vals = w[kinds == "u"]
    rep.checks["eig_residual"] = float(np.max(np.linalg.norm(S @ V - V * w, axis=0))) / snorm
    rep.checks["unstable_value_err"] = (
        float(np.max(np.abs(unstable_vals + blocks.lambda_1))) if unstable_vals.size else float("inf")
    )
    rep.checks["unstable_span_err"] = _span_error(rep.unstable_basis, translation_vectors(N))
    if N >= 4:
        rep.checks["center_residual"] = float(np.max(np.linalg.norm(S @ analytic_center, axis=0))) / snorm
        rep.checks["center_span_err"] = _span_error(rep.center_basis, analytic_center)
    stable_vals = w[kinds == "s"]
    if stable_vals.size:
        rep.checks["stable_gap"] = float(-np.max(stable_vals))
    rep.checks["E_max_eig"] = float(symmetric_eigs(blocks.E)[0][0])
    rep.checks["d_eigen_residual"] = d_eigen_residual(N)
    if fd_h is not None:
        rep.checks["fd_jacobian_max_err"] = float(np.max(np.abs(fd_jacobian(N, beta, fd_h) - S)))
    rep.checks["dims_ok"] = rep.dims_ok
    return rep


def orbit_distance(Y, N: Optional[int] = None) -> tuple[float, float]:
    """``min_eta |Y - exp(i eta) P_1|_2`` and the minimizing ``eta`` in [0, 2 pi).

    ``|Y - e^{i eta} P_1|^2 = |Y|^2 + N - 2 Re(e^{-i eta} <P_1, Y>)``, so the
    minimizer is the argument of ``<P_1, Y>``.
    """
    Y = np.asarray(Y, dtype=complex)
    N = Y.shape[0] if N is None else N
    P1 = regular_polygon(N, 1)
    eta = float(np.mod(np.angle(np.vdot(P1, Y)), 2 * np.pi))
    return float(np.linalg.norm(Y - np.exp(1j * eta) * P1)), eta


def project_out_unstable(perturbation, N: int) -> np.ndarray:
    """Remove the translation component (the unstable space) from a perturbation."""
    Z = np.asarray(perturbation, dtype=complex)
    return Z - Z.mean()
