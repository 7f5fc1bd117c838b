"""Reproducible experiments: heptagon dilations, quadrilaterals, triangles, entropy."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .flow import (
    IntegratorConfig,
    RescalingSchedule,
    Trajectory,
    dilation_sequence,
    entropy_rho,
    evolve,
    evolve_rescaled,
    rho_rate,
    rho_rate_fd,
    self_similar_residual,
)
from .polygon import as_polygon, edge_lengths, interior_angles, is_counterclockwise, regular_polygon
from .rng import SplitMix64
from .triangle import lyapunov_V, lyapunov_V_dot


def perturbed_regular(N: int, amplitude: float, seed: int) -> np.ndarray:
    """Regular N-gon with vertex j moved to ``P_j (1 + amplitude (u_j + i v_j))``.

    ``u_j, v_j`` are uniform on [-1, 1) drawn from ``SplitMix64(seed)`` in the
    order u_0, v_0, u_1, v_1, ...; ``u`` is the radial and ``v`` the
    tangential offset.
    """
    g = SplitMix64(seed)
    P = regular_polygon(N, 1)
    uv = np.array(g.uniforms(2 * N, -1.0, 1.0)).reshape(N, 2)
    return P * (1.0 + amplitude * (uv[:, 0] + 1j * uv[:, 1]))


def random_polygon(g: SplitMix64, N: int) -> np.ndarray:
    """Star-shaped counterclockwise N-gon: sorted random angles, radii in [0.5, 1.5)."""
    phi = np.sort(np.array(g.uniforms(N, 0.0, 2 * np.pi)))
    r = np.array(g.uniforms(N, 0.5, 1.5))
    return r * np.exp(1j * phi)


def random_triangle(g: SplitMix64) -> np.ndarray:
    """Counterclockwise triangle with vertices uniform in the unit square."""
    while True:
        xy = np.array(g.uniforms(6)).reshape(3, 2)
        T = xy[:, 0] + 1j * xy[:, 1]
        area2 = ((T[1] - T[0]).conjugate() * (T[2] - T[0])).imag
        if abs(area2) > 1e-3:
            return T if area2 > 0 else T[::-1]


def angle_error(P, N: Optional[int] = None) -> float:
    """``sum_i (theta_i - (N-2) pi / N)**2``."""
    X = as_polygon(P)
    N = len(X) if N is None else N
    return float(np.sum((interior_angles(X) - (N - 2) * np.pi / N) ** 2))


def edge_ratio_error(P) -> float:
    """``sum_i (l_i / l_{i+1} - 1)**2``."""
    l = edge_lengths(P)
    return float(np.sum((l / np.roll(l, -1) - 1.0) ** 2))


@dataclass
class IterationRecord:
    k: int
    c_k: float
    angle_error: float
    edge_ratio_error: float
    self_similar_residual: float


@dataclass
class ExperimentResult:
    name: str
    records: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    polygons: list = field(default_factory=list, repr=False)
    trajectories: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "records": [asdict(r) for r in self.records],
            "provenance": self.provenance,
            "artifacts": self.artifacts,
            "summary": self.summary,
        }


def _record(k, c, Y, beta) -> IterationRecord:
    try:
        ssr = self_similar_residual(Y, beta)[0]
    except ValueError:
        ssr = float("nan")
    return IterationRecord(k, float(c), angle_error(Y), edge_ratio_error(Y), ssr)


def run_heptagon(
    seed: int = 7,
    perturb: float = 0.2,
    iterations: int = 6,
    tau: float = 1.0,
    beta: float = 1.0,
    ratio: float = 10.0,
    N: int = 7,
    procedure: str = "iterate",
    cfg: Optional[IntegratorConfig] = None,
) -> ExperimentResult:
    """Rescale the flow of a perturbed regular polygon by ``c_k = ratio**k``.

    ``procedure="iterate"`` evolves for time ``tau``, records the polygon,
    multiplies it by ``ratio`` and repeats. Since ``c X(c**beta t)`` is again
    a solution, record k equals ``c_k X(s_k)`` with
    ``s_k = tau (1 + ratio**-beta + ... + ratio**-(k beta)) c_k**beta``, a
    dilation taken at a slightly later time.
    ``procedure="dilation"`` evaluates ``Y^k = c_k (X(c_k**beta tau) - x0)``
    on a single run (x0 the center of mass).
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    cfg = cfg or IntegratorConfig()
    X0 = perturbed_regular(N, perturb, seed)
    res = ExperimentResult(
        name="heptagon" if N == 7 else f"{N}-gon",
        provenance={
            "seed": seed, "perturb": perturb, "iterations": iterations, "tau": tau,
            "beta": beta, "ratio": ratio, "N": N, "procedure": procedure,
            "generator": "splitmix64", "rel_tol": cfg.rel_tol, "abs_tol": cfg.abs_tol,
        },
    )
    res.polygons.append(X0)
    if procedure == "dilation":
        sched = RescalingSchedule.geometric(ratio, iterations, tau)
        times = sched.times(beta)
        traj = evolve(X0, beta, times[-1], cfg, checkpoints=times)
        res.trajectories.append(traj)
        for k, (c, Y) in enumerate(zip(sched.c_values, dilation_sequence(traj, None, sched))):
            res.records.append(_record(k, c, Y, beta))
            res.polygons.append(Y)
    elif procedure == "iterate":
        Z = X0
        for k in range(iterations):
            traj = evolve(Z, beta, tau, cfg)
            res.trajectories.append(traj)
            Z = traj.final
            res.records.append(_record(k, ratio**k, Z, beta))
            res.polygons.append(Z)
            Z = ratio * Z
    else:
        raise ValueError(f"unknown procedure {procedure!r}")
    first, last = res.records[0], res.records[-1]
    res.summary = {
        "angle_error_decreasing": bool(all(b.angle_error < a.angle_error for a, b in zip(res.records, res.records[1:]))),
        "edge_ratio_error_decreasing": bool(
            all(b.edge_ratio_error < a.edge_ratio_error for a, b in zip(res.records, res.records[1:]))
        ),
        "angle_error_reduction": first.angle_error / last.angle_error if last.angle_error > 0 else float("inf"),
        "edge_ratio_error_reduction": (
            first.edge_ratio_error / last.edge_ratio_error if last.edge_ratio_error > 0 else float("inf")
        ),
    }
    return res


QUAD_SHAPES = ("rectangle", "rhombus", "generic")


def quad_initial(shape: str, aspect: float = 2.0, rhombus_angle: float = np.pi / 3, seed: int = 11, perturb: float = 0.3):
    if shape == "rectangle":
        a, b = 1.0, 1.0 / aspect
        return np.array([-a - 1j * b, a - 1j * b, a + 1j * b, -a + 1j * b])
    if shape == "rhombus":
        e = np.exp(1j * rhombus_angle)
        R = np.array([0.0, 1.0, 1.0 + e, e])
        return R - R.mean()
    if shape == "generic":
        return perturbed_regular(4, perturb, seed)
    raise ValueError(f"unknown shape {shape!r}; choose from {QUAD_SHAPES}")


def classify_quad(edge_res: float, angle_res: float, tol: float = 1e-4) -> str:
    if edge_res <= tol and angle_res <= tol:
        return "square"
    if edge_res <= tol:
        return "rhombus"
    return "other"


def run_quad(
    shape: str = "rectangle",
    beta: float = 1.0,
    tau_end: float = 40.0,
    record_every: float = 5.0,
    aspect: float = 2.0,
    rhombus_angle: float = np.pi / 3,
    seed: int = 11,
    perturb: float = 0.3,
    cfg: Optional[IntegratorConfig] = None,
) -> ExperimentResult:
    """Rescaled flow of a quadrilateral; records the edge-equality residual
    ``sum (l_i/l_{i+1} - 1)**2`` and the right-angle residual
    ``sum (theta_i - pi/2)**2`` every ``record_every`` units of tau."""
    cfg = cfg or IntegratorConfig()
    Y0 = quad_initial(shape, aspect, rhombus_angle, seed, perturb)
    marks = list(np.arange(record_every, tau_end, record_every)) + [tau_end]
    traj = evolve_rescaled(Y0, beta, tau_end, cfg, recenter=True, checkpoints=marks)
    res = ExperimentResult(
        name=f"quad-{shape}",
        provenance={
            "shape": shape, "beta": beta, "tau_end": tau_end, "aspect": aspect,
            "rhombus_angle": rhombus_angle, "seed": seed, "perturb": perturb,
            "generator": "splitmix64", "rel_tol": cfg.rel_tol,
        },
        trajectories=[traj],
    )
    for k, tk in enumerate([0.0] + marks):
        Y = traj.at(tk)
        res.records.append(_record(k, tk, Y, beta))
        res.polygons.append(Y)
    Y = traj.final
    edge_res = edge_ratio_error(Y)
    angle_res = angle_error(Y, 4)
    res.summary = {"edge_residual": edge_res, "angle_residual": angle_res, "limit": classify_quad(edge_res, angle_res)}
    return res


@dataclass
class TriangleRun:
    trajectory: Trajectory
    rows: list
    converged: bool
    max_angle_dev: float

    @property
    def V(self) -> np.ndarray:
        return np.array([r[4] for r in self.rows])


def run_triangle(
    vertices,
    beta: float = 1.0,
    tau_end: float = 200.0,
    tol: float = 1e-6,
    cfg: Optional[IntegratorConfig] = None,
) -> TriangleRun:
    """Rescaled flow of a triangle until every angle is within ``tol`` of pi/3.

    Clockwise input is relabelled counterclockwise. ``rows`` holds
    ``(tau, theta0, theta1, theta2, V, Vdot)`` for every accepted step, with
    ``Vdot`` the closed-form derivative in the unrescaled time.
    """
    T = as_polygon(vertices)
    if len(T) != 3:
        raise ValueError("expected three vertices")
    if not is_counterclockwise(T):
        T = T[::-1].copy()

    def done(t, y):
        return bool(np.max(np.abs(interior_angles(y) - np.pi / 3)) < tol)

    traj = evolve_rescaled(T, beta, tau_end, cfg, recenter=True, stop=done)
    rows = []
    for t, Y in zip(traj.t, traj.X):
        th = interior_angles(Y)
        rows.append((float(t), *map(float, th), lyapunov_V(th), lyapunov_V_dot(Y, beta)))
    dev = float(np.max(np.abs(interior_angles(traj.final) - np.pi / 3)))
    return TriangleRun(traj, rows, dev < tol, dev)


def entropy_checkpoints(ts, h: float = 1e-5) -> list:
    return sorted({float(v) for t in ts for v in (t - h, t, t + h)})


def run_entropy(P0, beta: float = 1.0, t_end: float = 2.0, x0=None, n_times: int = 20, h: float = 1e-5, cfg=None):
    """Entropy along the flow: rows ``(t, rho, drho_fd, drho_formula, residual)``.

    Times are spread evenly over ``[t_end/n_times, t_end - 2h]``; each
    ``t`` and ``t +- h`` is placed on the step grid so the difference
    quotient does not see interpolation error.
    """
    ts = np.linspace(t_end / n_times, t_end - 2 * h, n_times)
    traj = evolve(P0, beta, t_end, cfg, checkpoints=entropy_checkpoints(ts, h))
    rows = []
    for t in ts:
        num = rho_rate_fd(traj, x0, float(t), h)
        closed = rho_rate(traj, x0, float(t))
        rows.append((float(t), entropy_rho(traj, x0, float(t)), num, closed, abs(num - closed)))
    return traj, rows
