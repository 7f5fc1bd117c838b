"""The beta-polygon flow, its rescaled form, and the quantities it controls.

The flow moves each vertex by

    dX_j/dt = l_j**beta (X_{j+1} - X_j) + l_{j-1}**beta (X_{j-1} - X_j),

i.e. ``dX/dt = M_X X`` with the weighted cycle Laplacian of
:func:`betaflow.polygon.laplacian`. Regular polygons shrink self-similarly;
dividing out that shrinking gives the "rescaled" flow

    dY/dtau = -lambda_1 Y + l**(-beta) M_Y Y,

for which the regular polygon ``P_1`` is an equilibrium.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import integrate
from .errors import (
    BetaZero,
    CollinearVertex,
    RangeExceeded,
    StepLimitExceeded,
    ZeroVelocity,
)
from .integrate import IntegratorConfig, hermite, simpson_on_step
from .polygon import as_polygon, edge_lengths, energy, interior_angles

__all__ = [
    "IntegratorConfig",
    "RescalingSchedule",
    "Trajectory",
    "angle_bound_check",
    "angle_rhs",
    "dilation_sequence",
    "edge_length_rhs",
    "energy_decay_exponent",
    "entropy_rho",
    "evolve",
    "evolve_rescaled",
    "extend",
    "flow_samples",
    "monotone_report",
    "monotonicity_residual",
    "nonincreasing",
    "regular_constants",
    "rescaled_to_flow",
    "rescaled_velocity",
    "rho_rate",
    "rho_rate_fd",
    "self_similar_residual",
    "self_similar_scale",
    "t_of_tau",
    "tau_of_t",
    "velocity",
]

COLLINEAR_SIN = 1e-10


# ---------------------------------------------------------------------------
# velocity fields


def _velocity(X: np.ndarray, beta: float) -> np.ndarray:
    d = np.roll(X, -1) - X
    wd = np.abs(d) ** beta * d
    return wd - np.roll(wd, 1)


def velocity(P, beta: float) -> np.ndarray:
    """Flow velocity of every vertex; equals ``laplacian(P, beta) @ P``."""
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    return _velocity(as_polygon(P), beta)


def regular_constants(N: int, beta: float, k: int = 1) -> tuple[float, float]:
    """Edge length ``l`` and eigenvalue ``lambda_k`` of the regular polygon ``P_k``."""
    s = np.sin(np.pi * k / N)
    return 2.0 * abs(s), -4.0 * s * s


def rescaled_velocity(Y, beta: float, N: Optional[int] = None) -> np.ndarray:
    """``-lambda_1 Y + l**(-beta) M_Y Y`` with ``l, lambda_1`` of the regular N-gon."""
    Y = as_polygon(Y)
    if N is None:
        N = Y.shape[0]
    elif N != Y.shape[0]:
        raise ValueError(f"polygon has {Y.shape[0]} vertices, expected {N}")
    l, lam1 = regular_constants(N, beta)
    return -lam1 * Y + _velocity(Y, beta) / l**beta


def self_similar_scale(t, beta: float, l: float, lambda_k: float):
    """``a(t) = (1 - beta l**beta lambda_k t)**(-1/beta)``; ``a(t) P_k`` solves the flow."""
    return (1.0 - beta * l**beta * lambda_k * np.asarray(t, dtype=float)) ** (-1.0 / beta)


def tau_of_t(t, beta: float, l: float, lambda_1: float):
    """Rescaled time ``tau = ln(1 - beta l**beta lambda_1 t) / (-beta lambda_1)``."""
    return np.log1p(-beta * l**beta * lambda_1 * np.asarray(t, dtype=float)) / (-beta * lambda_1)


def t_of_tau(tau, beta: float, l: float, lambda_1: float):
    return np.expm1(-beta * lambda_1 * np.asarray(tau, dtype=float)) / (-beta * l**beta * lambda_1)


# ---------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True)
class Trajectory:
    """Accepted integration steps with dense output.

    ``kind`` is ``"flow"`` for the beta-polygon flow in time ``t`` and
    ``"rescaled"`` for the rescaled flow, whose time axis is ``tau``.
    ``entropy_integral[i]`` is ``int_0^t[i] (beta/2) s**(2/beta+1) |M_X X|**2 ds``
    (flow trajectories with beta > 0 only).
    """

    t: np.ndarray
    X: np.ndarray
    dX: np.ndarray
    beta: float
    kind: str = "flow"
    entropy_integral: Optional[np.ndarray] = None
    steps_accepted: int = 0
    steps_rejected: int = 0
    next_dt: float = 0.0
    err_old: float = 1e-4
    recentered: bool = False
    cfg: IntegratorConfig = field(default_factory=IntegratorConfig)

    @property
    def N(self) -> int:
        return self.X.shape[1]

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    @property
    def final(self) -> np.ndarray:
        return self.X[-1].copy()

    def __len__(self):
        return self.t.shape[0]

    def rhs(self, t, y):
        if self.kind == "flow":
            return _velocity(y, self.beta)
        l, lam1 = regular_constants(self.N, self.beta)
        return -lam1 * y + _velocity(y, self.beta) / l**self.beta

    def _locate(self, t: float) -> int:
        if not self.t[0] <= t <= self.t[-1]:
            raise RangeExceeded(f"t={t} outside trajectory range [{self.t[0]}, {self.t[-1]}]")
        i = int(np.searchsorted(self.t, t, side="right")) - 1
        return min(i, len(self.t) - 2)

    def at(self, t: float) -> np.ndarray:
        """Polygon at time ``t`` (exact at samples, Hermite in between)."""
        return self.at_with_derivative(t)[0]

    def at_with_derivative(self, t: float):
        if len(self.t) == 1:
            if t != self.t[0]:
                raise RangeExceeded(f"t={t} outside trajectory range")
            return self.X[0].copy(), self.dX[0].copy()
        i = self._locate(t)
        return hermite(self.t[i], self.t[i + 1], self.X[i], self.X[i + 1], self.dX[i], self.dX[i + 1], t)

    def entropy_integral_at(self, t: float) -> float:
        if self.entropy_integral is None:
            raise BetaZero("entropy integral is only tracked for the flow with beta > 0")
        if len(self.t) == 1:
            return 0.0
        i = self._locate(t)
        if t == self.t[i]:
            return float(self.entropy_integral[i])
        part = simpson_on_step(
            _entropy_integrand(self.beta),
            self.rhs,
            self.t[i], self.t[i + 1],
            self.X[i], self.X[i + 1],
            self.dX[i], self.dX[i + 1],
            self.t[i], t,
        )
        return float(self.entropy_integral[i] + part)

    # per-sample diagnostics
    def energies(self, alpha: Optional[float] = None) -> np.ndarray:
        alpha = self.beta + 2 if alpha is None else alpha
        return np.sum(np.abs(np.roll(self.X, -1, axis=1) - self.X) ** alpha, axis=1) / alpha

    def centers(self) -> np.ndarray:
        return self.X.mean(axis=1)

    def min_sin2(self) -> np.ndarray:
        out = np.empty(len(self.t))
        for i, X in enumerate(self.X):
            try:
                out[i] = np.min(np.sin(interior_angles(X)) ** 2)
            except ValueError:
                out[i] = 0.0
        return out


def _entropy_integrand(beta):
    p = 2.0 / beta + 1.0

    def g(s, f):
        return 0.5 * beta * s**p * float(np.vdot(f, f).real)

    return g


def _from_state(st, beta, kind, cfg, recentered=False) -> Trajectory:
    return Trajectory(
        t=np.array(st.ts, dtype=float),
        X=np.array(st.ys),
        dX=np.array(st.fs),
        beta=beta,
        kind=kind,
        entropy_integral=np.array(st.integral) if st.integral else None,
        steps_accepted=st.accepted,
        steps_rejected=st.rejected,
        next_dt=st.dt,
        err_old=st.err_old,
        recentered=recentered,
        cfg=cfg,
    )


def evolve(
    P0,
    beta: float,
    t_end: float,
    cfg: Optional[IntegratorConfig] = None,
    checkpoints: Sequence[float] = (),
    stop: Optional[Callable[[float, np.ndarray], bool]] = None,
) -> Trajectory:
    """Integrate the beta-polygon flow from ``P0`` over ``[0, t_end]``.

    Every accepted step becomes a sample; steps are shortened to land exactly
    on ``checkpoints``. For ``beta > 0`` the entropy integral is accumulated
    with Simpson's rule per step. ``stop(t, X)`` may end the run early.

    Raises
    ------
    StepLimitExceeded, StepUnderflow
        From the step-size controller.
    """
    if t_end <= 0:
        raise ValueError(f"t_end must be positive, got {t_end}")
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    cfg = cfg or IntegratorConfig()
    X0 = as_polygon(P0)

    def rhs(t, y):
        return _velocity(y, beta)

    track = beta > 0
    st = integrate.start_state(rhs, 0.0, X0, cfg, with_integral=track)
    integrate.dopri_run(
        rhs, st, t_end, cfg,
        checkpoints=checkpoints,
        integrand=_entropy_integrand(beta) if track else None,
        stop=stop,
    )
    return _from_state(st, beta, "flow", cfg)


def _recenter(lam1):
    def post(t, y, f):
        q = y.mean()
        return y - q, f + lam1 * q

    return post


def evolve_rescaled(
    Y0,
    beta: float,
    tau_end: float,
    cfg: Optional[IntegratorConfig] = None,
    recenter: bool = False,
    checkpoints: Sequence[float] = (),
    stop: Optional[Callable[[float, np.ndarray], bool]] = None,
) -> Trajectory:
    """Integrate the rescaled flow over ``[0, tau_end]``.

    The center of mass of a rescaled polygon grows like ``exp(-lambda_1 tau)``,
    so rounding noise in it is amplified over long horizons. ``recenter=True``
    subtracts the centroid after every accepted step; this leaves the
    dynamics of a centered ``Y0`` unchanged and removes the noise (the
    initial centroid is subtracted as well).
    """
    if beta <= 0:
        raise BetaZero("the rescaled flow needs beta > 0")
    if tau_end <= 0:
        raise ValueError(f"tau_end must be positive, got {tau_end}")
    cfg = cfg or IntegratorConfig()
    Y0 = as_polygon(Y0)
    N = Y0.shape[0]
    l, lam1 = regular_constants(N, beta)
    lb = l**beta

    def rhs(t, y):
        return -lam1 * y + _velocity(y, beta) / lb

    if recenter:
        Y0 = Y0 - Y0.mean()
    st = integrate.start_state(rhs, 0.0, Y0, cfg, with_integral=False)
    integrate.dopri_run(
        rhs, st, tau_end, cfg,
        checkpoints=checkpoints,
        stop=stop,
        post_step=_recenter(lam1) if recenter else None,
    )
    return _from_state(st, beta, "rescaled", cfg, recentered=recenter)


def extend(
    traj: Trajectory,
    t_end: float,
    checkpoints: Sequence[float] = (),
    cfg: Optional[IntegratorConfig] = None,
) -> Trajectory:
    """Continue ``traj`` to ``t_end``; returns a new trajectory (the input is untouched).

    The step size and controller state carry over, so extending in pieces reproduces the steps
    of a single run that passes through the same checkpoints.
    """
    if t_end <= traj.t_end:
        return traj
    cfg = cfg or traj.cfg
    st = integrate._State(t=traj.t_end, y=traj.X[-1].copy(), f=traj.dX[-1].copy(), dt=traj.next_dt, err_old=traj.err_old)
    st.accepted, st.rejected = traj.steps_accepted, traj.steps_rejected
    st.ts, st.ys, st.fs = list(traj.t), list(traj.X), list(traj.dX)
    st.integral = list(traj.entropy_integral) if traj.entropy_integral is not None else []
    integrand = _entropy_integrand(traj.beta) if traj.entropy_integral is not None else None
    post = None
    if traj.kind == "rescaled" and traj.recentered:
        post = _recenter(regular_constants(traj.N, traj.beta)[1])
    integrate.dopri_run(traj.rhs, st, t_end, cfg, checkpoints=checkpoints, integrand=integrand, post_step=post)
    return _from_state(st, traj.beta, traj.kind, cfg, recentered=traj.recentered)


def rescaled_to_flow(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """Map a rescaled trajectory back to the flow: ``X(t) = a(t) Y(tau(t))``.

    Returns ``(t, X)`` sample arrays. ``a(t) Y(tau(t))`` solves the
    beta-polygon flow for any ``Y0``, centered or not.
    """
    if traj.kind != "rescaled":
        raise ValueError("expected a rescaled trajectory")
    l, lam1 = regular_constants(traj.N, traj.beta)
    t = t_of_tau(traj.t, traj.beta, l, lam1)
    a = self_similar_scale(t, traj.beta, l, lam1)
    return t, a[:, None] * traj.X


# ---------------------------------------------------------------------------
# entropy and monotonicity


def _resolve_x0(traj: Trajectory, x0) -> complex:
    if x0 is None or (isinstance(x0, str) and x0 == "auto"):
        return complex(traj.X[0].mean())
    if np.isscalar(x0):
        return complex(x0)
    return complex(*x0)


def _need_entropy(traj: Trajectory):
    if traj.beta == 0:
        raise BetaZero("the entropy functional divides by beta; beta must be > 0")
    if traj.kind != "flow" or traj.entropy_integral is None:
        raise ValueError("entropy needs a flow trajectory produced by evolve()")


def entropy_rho(traj: Trajectory, x0=None, t: float = 0.0) -> float:
    """``exp[-t**(2/beta) |X(t) - x0|**2 - int_0^t (beta/2) s**(2/beta+1) |M_X X|**2 ds]``.

    ``x0`` is a planar point (complex or ``(x, y)``), read as the point
    polygon; ``None`` or ``"auto"`` uses the center of mass of ``X(0)``.
    """
    _need_entropy(traj)
    x0 = _resolve_x0(traj, x0)
    X = traj.at(t)
    d = X - x0
    return float(np.exp(-(t ** (2.0 / traj.beta)) * np.vdot(d, d).real - traj.entropy_integral_at(t)))


def rho_rate(traj: Trajectory, x0=None, t: float = 0.0) -> float:
    """Closed form ``-(2/beta) rho t**(2/beta-1) |X - x0 + (beta/2) t M_X X|**2``."""
    _need_entropy(traj)
    x0c = _resolve_x0(traj, x0)
    beta = traj.beta
    X = traj.at(t)
    bracket = X - x0c + 0.5 * beta * t * _velocity(X, beta)
    rho = entropy_rho(traj, x0c, t)
    return float(-(2.0 / beta) * rho * t ** (2.0 / beta - 1.0) * np.vdot(bracket, bracket).real)


def rho_rate_fd(traj: Trajectory, x0=None, t: float = 0.0, h: float = 1e-5) -> float:
    """Centered difference of :func:`entropy_rho`."""
    _need_entropy(traj)
    if t - h < traj.t[0] or t + h > traj.t_end:
        raise ValueError(f"t={t} too close to the trajectory ends for step h={h}")
    return (entropy_rho(traj, x0, t + h) - entropy_rho(traj, x0, t - h)) / (2 * h)


def monotonicity_residual(traj: Trajectory, x0=None, t: float = 0.0, h: float = 1e-5) -> float:
    """``|d rho/dt (numeric) - closed form|`` at ``t``.

    For ``beta > 2`` the factor ``t**(2/beta-1)`` is singular at 0 and times
    below ``cfg.dt_init`` are refused.
    """
    _need_entropy(traj)
    if traj.beta > 2 and t < traj.cfg.dt_init:
        raise ValueError(f"t={t} below dt_init; the formula is singular at t=0 for beta > 2")
    return abs(rho_rate_fd(traj, x0, t, h) - rho_rate(traj, x0, t))


# ---------------------------------------------------------------------------
# dilations and self-similarity


@dataclass(frozen=True)
class RescalingSchedule:
    c_values: tuple
    tau: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.c_values, dtype=float)
        if c.ndim != 1 or c.size == 0 or np.any(c <= 0) or np.any(np.diff(c) <= 0):
            raise ValueError("c_values must be a nonempty strictly increasing sequence of positive reals")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        object.__setattr__(self, "c_values", tuple(float(v) for v in c))

    @classmethod
    def geometric(cls, ratio: float, K: int, tau: float = 1.0) -> "RescalingSchedule":
        return cls(tuple(ratio**k for k in range(K)), tau)

    def times(self, beta: float) -> list[float]:
        return [c**beta * self.tau for c in self.c_values]


def dilation_sequence(
    traj: Trajectory,
    x0,
    sched: RescalingSchedule,
    cfg: Optional[IntegratorConfig] = None,
) -> list[np.ndarray]:
    """``Y^k = c_k (X(c_k**beta tau) - x0)`` for every ``c_k`` of the schedule.

    The trajectory is extended (with the needed times as checkpoints) when it
    ends too early.

    Raises
    ------
    RangeExceeded
        If extending the run hits the step limit.
    """
    if traj.kind != "flow":
        raise ValueError("dilations are defined for flow trajectories")
    x0 = _resolve_x0(traj, x0)
    times = sched.times(traj.beta)
    if max(times) > traj.t_end:
        try:
            traj = extend(traj, max(times), checkpoints=times, cfg=cfg)
        except StepLimitExceeded as exc:
            raise RangeExceeded(str(exc)) from exc
    return [c * (traj.at(tk) - x0) for c, tk in zip(sched.c_values, times)]


def self_similar_residual(P, beta: float) -> tuple[float, float]:
    """How far ``M_P P`` is from a multiple of ``P - mean(P)``.

    Returns ``(residual, sigma)`` where ``sigma`` minimizes
    ``|M_P P - sigma (P - mean(P))|`` and ``residual`` is that minimum divided
    by ``|M_P P|``. Zero exactly for self-similarly shrinking shapes.
    """
    X = as_polygon(P)
    v = _velocity(X, beta)
    d = X - X.mean()
    vn = np.linalg.norm(v)
    if vn <= 1e-300 or vn <= 1e-14 * np.max(np.abs(d)) ** (beta + 1):
        raise ZeroVelocity("polygon is a fixed point of the flow")
    dd = np.vdot(d, d).real
    sigma = float(np.vdot(d, v).real / dd)
    return float(np.linalg.norm(v - sigma * d) / vn), sigma


# ---------------------------------------------------------------------------
# edge-length and angle evolution


def edge_length_rhs(P, beta: float, j: Optional[int] = None):
    """``dl_j/dt = -2 l_j**(b+1) - l_{j+1}**(b+1) cos th_{j+1} - l_{j-1}**(b+1) cos th_j``.

    All edges when ``j`` is None.
    """
    X = as_polygon(P)
    th = interior_angles(X)
    lb = edge_lengths(X) ** (beta + 1)
    rates = -2 * lb - np.roll(lb, -1) * np.cos(np.roll(th, -1)) - np.roll(lb, 1) * np.cos(th)
    return rates if j is None else float(rates[j % len(X)])


def angle_rhs(P, beta: float, j: Optional[int] = None):
    """Closed-form ``d theta_j / dt`` along the flow (all vertices when ``j`` is None).

    Raises
    ------
    CollinearVertex
        When ``|sin theta_j| < 1e-10``.
    """
    X = as_polygon(P)
    N = len(X)
    th = interior_angles(X)
    l = edge_lengths(X)
    s = np.sin(th)
    idx = range(N) if j is None else [j % N]
    out = []
    for k in idx:
        if abs(s[k]) < COLLINEAR_SIN:
            raise CollinearVertex(f"vertex {k} is collinear with its neighbours")
        lm1, l0, lp1, lm2 = l[k - 1], l[k], l[(k + 1) % N], l[k - 2]
        val = (
            (lm1 ** (beta + 2) + l0 ** (beta + 2)) * s[k]
            - lp1 ** (beta + 1) * lm1 * s[(k + 1) % N]
            - lm2 ** (beta + 1) * l0 * s[k - 1]
        ) / (l0 * lm1)
        out.append(val)
    return np.array(out) if j is None else float(out[0])


def angle_bound_check(traj: Trajectory, delta: float) -> tuple[bool, Optional[float]]:
    """Whether ``min sin**2(theta_i) >= delta`` over all samples.

    Returns ``(ok, first_violation_time)``; the time is None when ``ok``.
    """
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    m = traj.min_sin2()
    bad = np.nonzero(m < delta)[0]
    if bad.size:
        return False, float(traj.t[bad[0]])
    return True, None


# ---------------------------------------------------------------------------
# conservation and monotonicity along sampled runs

#: slack, relative to the value, allowed when checking that a sampled
#: quantity does not increase (rounding of equal consecutive values)
MONOTONE_RTOL = 1e-12


def nonincreasing(values, rtol: float = MONOTONE_RTOL) -> bool:
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return True
    slack = rtol * np.maximum(np.abs(v[:-1]), np.abs(v[1:]))
    return bool(np.all(v[1:] <= v[:-1] + slack))


def flow_samples(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """``(t, X)`` of the unrescaled flow behind ``traj``."""
    if traj.kind == "rescaled":
        return rescaled_to_flow(traj)
    return traj.t, traj.X


def monotone_report(traj: Trajectory, Q_points=None, rng_seed: int = 0, n_points: int = 10) -> dict:
    """Conservation and monotonicity checks on the flow behind ``traj``.

    Checks the energy ``F_{beta+2}``, ``|X - Q|_{beta+2}`` for ``Q_points``
    (``n_points`` random points near the polygon when omitted), and the drift
    of the center of mass relative to ``|X(0)|_2``. Rescaled trajectories are
    mapped back through ``X = a(t) Y`` first.
    """
    t, X = flow_samples(traj)
    beta = traj.beta
    alpha = beta + 2
    F = np.sum(np.abs(np.roll(X, -1, axis=1) - X) ** alpha, axis=1) / alpha
    if Q_points is None:
        rng = np.random.default_rng(rng_seed)
        R = float(np.max(np.abs(X[0]))) or 1.0
        Q_points = R * (rng.uniform(-2, 2, n_points) + 1j * rng.uniform(-2, 2, n_points))
    norms_ok = []
    for Q in np.atleast_1d(Q_points):
        norms = np.sum(np.abs(X - Q) ** alpha, axis=1) ** (1 / alpha)
        norms_ok.append(nonincreasing(norms))
    com = X.mean(axis=1)
    drift = float(np.max(np.abs(com - com[0])) / max(np.linalg.norm(X[0]), 1e-300))
    return {
        "energy_nonincreasing": nonincreasing(F),
        "alpha_norm_nonincreasing": all(norms_ok),
        "center_drift": drift,
        "center_drift_ok": drift <= 10 * traj.cfg.rel_tol,
    }


def energy_decay_exponent(traj: Trajectory, t_min: Optional[float] = None) -> tuple[float, float]:
    """Least-squares slope of ``log F_alpha`` against ``log t`` for ``t >= t_min``.

    Returns ``(fitted, expected)`` with ``expected = -(beta + 2) / beta``, the
    exponent of a self-similarly shrinking solution. ``t_min`` defaults to a
    tenth of the final time of the (unrescaled) flow.
    """
    if traj.beta <= 0:
        raise BetaZero("the power-law decay needs beta > 0")
    t, X = flow_samples(traj)
    alpha = traj.beta + 2
    F = np.sum(np.abs(np.roll(X, -1, axis=1) - X) ** alpha, axis=1) / alpha
    t_min = 0.1 * t[-1] if t_min is None else t_min
    sel = (t >= t_min) & (t > 0) & (F > 0)
    if np.count_nonzero(sel) < 3:
        raise ValueError("fewer than three samples with t >= t_min")
    slope = np.polyfit(np.log(t[sel]), np.log(F[sel]), 1)[0]
    return float(slope), -(traj.beta + 2) / traj.beta
