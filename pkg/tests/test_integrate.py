import numpy as np
import pytest
from scipy.integrate import solve_ivp

from betaflow.errors import StepLimitExceeded, StepUnderflow
from betaflow.integrate import IntegratorConfig, dopri_run, hermite, simpson_on_step, start_state


def run(rhs, y0, t_end, cfg=None, **kw):
    cfg = cfg or IntegratorConfig()
    st = start_state(rhs, 0.0, np.atleast_1d(np.asarray(y0, dtype=complex)), cfg, with_integral="integrand" in kw)
    return dopri_run(rhs, st, t_end, cfg, **kw)


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(rel_tol=0)
    with pytest.raises(ValueError):
        IntegratorConfig(dt_init=1.0, dt_max=0.5)
    with pytest.raises(ValueError):
        IntegratorConfig(max_steps=0)


def test_exponential_decay_and_rotation():
    lam = -1.3 + 2.0j
    st = run(lambda t, y: lam * y, [1.0], 3.0)
    assert st.ts[-1] == 3.0
    assert abs(st.y[0] - np.exp(lam * 3.0)) < 1e-8


def test_matches_scipy_on_nonlinear_system():
    # van der Pol in complex form x + i v
    def rhs(t, y):
        x, v = y[0].real, y[0].imag
        return np.array([v + 1j * (2.0 * (1 - x * x) * v - x)])

    st = run(rhs, [2.0 + 0j], 5.0, IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12))
    ref = solve_ivp(lambda t, u: [u[1], 2.0 * (1 - u[0] ** 2) * u[1] - u[0]], (0, 5), [2.0, 0.0], rtol=1e-12, atol=1e-13, method="DOP853")
    assert abs(st.y[0].real - ref.y[0, -1]) < 1e-7
    assert abs(st.y[0].imag - ref.y[1, -1]) < 1e-7


def test_checkpoints_are_hit_exactly():
    cps = [0.1, 0.25, 1.0 / 3.0, 0.9]
    st = run(lambda t, y: -y, [1.0], 1.0, checkpoints=cps)
    for c in cps:
        assert c in st.ts
    assert np.all(np.diff(st.ts) > 0)


def test_prefix_extension_is_deterministic():
    f = lambda t, y: -y * (1 + 0.5 * np.sin(5 * t))
    a = run(f, [1.0], 1.0, checkpoints=[0.5])
    b = run(f, [1.0], 2.0, checkpoints=[0.5, 1.0])
    n = len(a.ts)
    assert a.ts == b.ts[:n]
    assert all(np.array_equal(x, y) for x, y in zip(a.ys, b.ys[:n]))


def test_step_limit():
    with pytest.raises(StepLimitExceeded):
        run(lambda t, y: -y, [1.0], 100.0, IntegratorConfig(max_steps=3))


def test_step_underflow_on_blowup():
    with pytest.raises((StepUnderflow, StepLimitExceeded)):
        run(lambda t, y: y * y, [1.0], 2.0)  # solution 1/(1-t) blows up at t = 1


def test_stop_predicate():
    st = run(lambda t, y: -y, [1.0], 10.0, stop=lambda t, y: abs(y[0]) < 0.5)
    assert abs(st.y[0]) < 0.5
    assert st.ts[-1] < 10.0


def test_hermite_reproduces_cubics():
    p = lambda t: 1 - 2 * t + 0.5 * t**2 + 0.3 * t**3
    dp = lambda t: -2 + t + 0.9 * t**2
    t0, t1 = 0.2, 1.7
    for t in np.linspace(t0, t1, 7):
        y, dy = hermite(t0, t1, p(t0), p(t1), dp(t0), dp(t1), t)
        assert y == pytest.approx(p(t), abs=1e-13)
        assert dy == pytest.approx(dp(t), abs=1e-12)


def test_simpson_exact_for_cubic_integrand():
    # y' = 1 so y is linear, and g = s**3 integrates exactly under Simpson's rule
    rhs = lambda t, y: np.ones_like(y)
    val = simpson_on_step(lambda s, f: s**3, rhs, 0.0, 2.0, np.zeros(1), 2 * np.ones(1), np.ones(1), np.ones(1), 0.0, 2.0)
    assert val == pytest.approx(4.0, abs=1e-14)


def test_integrand_accumulates():
    st = run(lambda t, y: -y, [1.0], 2.0, integrand=lambda s, f: float(abs(f[0]) ** 2))
    # int_0^2 e^{-2s} ds; Simpson per step on steps of a few tenths
    assert st.integral[-1] == pytest.approx((1 - np.exp(-4)) / 2, rel=1e-7)
    assert np.all(np.diff(st.integral) >= 0)
