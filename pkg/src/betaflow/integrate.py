"""Adaptive Dormand-Prince 5(4) integration with dense output.

The state is a complex vector (one entry per polygon vertex). Accepted steps
are stored together with the right-hand side at each sample so that the
trajectory can be evaluated anywhere through piecewise cubic Hermite
interpolation. An optional scalar integrand ``g(t, f)`` of the velocity is
integrated alongside with Simpson's rule on each accepted step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import StepLimitExceeded, StepUnderflow

# Dormand & Prince (1980), RK5(4)7M. The 5th order solution is propagated
# and the last stage is evaluated at the new point (FSAL).
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

# PI controller constants (Hairer, Norsett & Wanner, II.4)
_SAFETY = 0.9
_PI_BETA = 0.04
_PI_ALPHA = 0.2 - 0.75 * _PI_BETA
_FAC_MIN = 0.2
_FAC_MAX = 10.0


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    dt_init: float = 1e-3
    dt_max: float = np.inf
    max_steps: int = 200_000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("rel_tol and abs_tol must be positive")
        if not 0 < self.dt_init <= self.dt_max:
            raise ValueError("need 0 < dt_init <= dt_max")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


def hermite(t0, t1, y0, y1, f0, f1, t):
    """Cubic Hermite interpolant and its derivative at ``t`` in [t0, t1]."""
    h = t1 - t0
    s = (t - t0) / h
    s2, s3 = s * s, s * s * s
    y = (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * f0 + (3 * s2 - 2 * s3) * y1 + (s3 - s2) * h * f1
    dy = ((6 * s2 - 6 * s) * (y0 - y1)) / h + (3 * s2 - 4 * s + 1) * f0 + (3 * s2 - 2 * s) * f1
    return y, dy


def simpson_on_step(g, rhs, t0, t1, y0, y1, f0, f1, ta, tb):
    """Simpson's rule for ``int_ta^tb g(s, f(s)) ds`` inside one step.

    ``f`` at the endpoints and midpoint comes from the Hermite interpolant's
    state pushed through ``rhs``; at the step ends the stored values are used.
    """
    if tb == ta:
        return 0.0

    def f_at(s):
        if s == t0:
            return f0
        if s == t1:
            return f1
        y, _ = hermite(t0, t1, y0, y1, f0, f1, s)
        return rhs(s, y)

    tm = 0.5 * (ta + tb)
    return (tb - ta) / 6.0 * (g(ta, f_at(ta)) + 4.0 * g(tm, f_at(tm)) + g(tb, f_at(tb)))


@dataclass
class _State:
    t: float
    y: np.ndarray
    f: np.ndarray
    dt: float
    err_old: float = 1e-4
    accepted: int = 0
    rejected: int = 0
    ts: list = field(default_factory=list)
    ys: list = field(default_factory=list)
    fs: list = field(default_factory=list)
    integral: list = field(default_factory=list)


def _error_norm(err, y0, y1, cfg):
    e = err.view(float) if np.iscomplexobj(err) else err
    a = np.abs(y0.view(float) if np.iscomplexobj(y0) else y0)
    b = np.abs(y1.view(float) if np.iscomplexobj(y1) else y1)
    sc = cfg.abs_tol + cfg.rel_tol * np.maximum(a, b)
    return float(np.max(np.abs(e) / sc))


def dopri_run(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    state: _State,
    t_end: float,
    cfg: IntegratorConfig,
    checkpoints: Sequence[float] = (),
    integrand: Optional[Callable] = None,
    stop: Optional[Callable[[float, np.ndarray], bool]] = None,
    post_step: Optional[Callable[[float, np.ndarray, np.ndarray], tuple]] = None,
) -> _State:
    """Advance ``state`` to ``t_end`` in place, appending every accepted step.

    Steps are shortened to land exactly on each checkpoint and on ``t_end``.
    ``post_step(t, y, f) -> (y, f)`` may adjust an accepted state (used to
    pin the center of mass of the rescaled flow).
    """
    eps = np.finfo(float).eps
    targets = sorted(c for c in checkpoints if state.t < c < t_end) + [t_end]
    ti = 0
    underflow = 1e-3 * eps * abs(t_end)
    while state.t < t_end:
        if stop is not None and stop(state.t, state.y):
            break
        if state.accepted + state.rejected >= cfg.max_steps:
            raise StepLimitExceeded(
                f"max_steps={cfg.max_steps} reached at t={state.t:.6g} (target {t_end:.6g})"
            )
        while targets[ti] <= state.t:
            ti += 1
        target = targets[ti]
        dt = min(state.dt, cfg.dt_max)
        clipped = state.t + dt >= target
        if clipped:
            dt = target - state.t
        if dt < underflow or state.t + dt == state.t:
            raise StepUnderflow(f"step size {dt:.3g} underflowed at t={state.t:.6g}")

        t0, y0, f0 = state.t, state.y, state.f
        k = [f0]
        for i in range(1, 7):
            yi = y0 + dt * sum(a * kj for a, kj in zip(_A[i], k) if a != 0.0)
            k.append(rhs(t0 + _C[i] * dt, yi))
        y1 = yi  # stage 7 is evaluated at the 5th order solution
        f1 = k[6]
        err = dt * sum(e * kj for e, kj in zip(_E, k) if e != 0.0)
        en = _error_norm(err, y0, y1, cfg)

        if en <= 1.0:
            t1 = target if clipped else t0 + dt
            if post_step is not None:
                y1, f1 = post_step(t1, y1, f1)
            if integrand is not None:
                inc = simpson_on_step(integrand, rhs, t0, t1, y0, y1, f0, f1, t0, t1)
                state.integral.append(state.integral[-1] + inc)
            state.ts.append(t1)
            state.ys.append(y1)
            state.fs.append(f1)
            fac = _SAFETY * max(en, 1e-10) ** (-_PI_ALPHA) * state.err_old**_PI_BETA
            fac = min(_FAC_MAX, max(_FAC_MIN, fac))
            state.err_old = max(en, 1e-4)
            state.t, state.y, state.f = t1, y1, f1
            state.dt = dt * fac
            state.accepted += 1
        else:
            fac = max(_FAC_MIN, _SAFETY * en ** (-0.2))
            state.dt = dt * fac
            state.rejected += 1
    return state


def start_state(rhs, t0: float, y0: np.ndarray, cfg: IntegratorConfig, with_integral: bool) -> _State:
    y0 = np.array(y0, dtype=complex)
    f0 = rhs(t0, y0)
    st = _State(t=t0, y=y0, f=f0, dt=cfg.dt_init)
    st.ts.append(t0)
    st.ys.append(y0)
    st.fs.append(f0)
    if with_integral:
        st.integral.append(0.0)
    return st
