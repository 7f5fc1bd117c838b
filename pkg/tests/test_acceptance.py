"""Acceptance criteria, each at its stated tolerance.

A summary line per criterion is printed at the end of the pytest run.
"""

import time

import numpy as np

from betaflow.flow import (
    entropy_rho,
    flow_samples,
    monotone_report,
    monotonicity_residual,
    nonincreasing,
    regular_constants,
    rho_rate,
    self_similar_scale,
)
from betaflow.linalg import symmetric_eigs
from betaflow.linearization import build_blocks, center_space_vectors, classify_spectrum, fd_jacobian
from betaflow.polygon import interior_angles, regular_polygon
from conftest import BETAS, ENTROPY_TIMES, SELFSIM_NS


def test_criterion_01_self_similar_exactness(runs, acceptance):
    worst, where = 0.0, None
    for N, k, beta, tr in runs.selfsim:
        l, lam = regular_constants(N, beta, k)
        a = self_similar_scale(tr.t, beta, l, lam)
        P = regular_polygon(N, k)
        err = float(np.max(np.abs(tr.X - a[:, None] * P) / a[:, None]))
        if err > worst:
            worst, where = err, (N, k, beta)
        assert abs(a[-1] - 0.1) < 1e-12
    ok = worst <= 1e-6
    acceptance(1, ok, f"max relative vertex error {worst:.2e} over {len(runs.selfsim)} runs (at N,k,beta={where}); tol 1e-6")
    assert ok


def test_criterion_02_eigenvalue_formula(acceptance):
    worst = 0.0
    t0 = time.perf_counter()
    for N in range(3, 65):
        M = build_blocks(N, 1.0).M
        w, _ = symmetric_eigs(M)
        expected = np.sort(-4 * np.sin(np.pi * np.arange(N) / N) ** 2)[::-1]
        worst = max(worst, float(np.max(np.abs(w - expected))))
    ok = worst <= 1e-12
    acceptance(2, ok, f"max |eig - (-4 sin^2(pi k/N))| = {worst:.2e} for N=3..64 ({time.perf_counter() - t0:.1f}s); tol 1e-12")
    assert ok


def test_criterion_03_linearization_certification(acceptance):
    worst = 0.0
    for N in SELFSIM_NS:
        for beta in BETAS:
            J = build_blocks(N, beta).jacobian
            worst = max(worst, float(np.max(np.abs(fd_jacobian(N, beta, 1e-6) - J))))
    ok = worst <= 1e-6
    acceptance(3, ok, f"max entry |fd_jacobian - (D + beta E)| = {worst:.2e}, N=4..12, beta in {BETAS}; tol 1e-6")
    assert ok


def test_criterion_04_spectral_dimensions(acceptance):
    failures = []
    worst_val = worst_center = 0.0
    for N in range(4, 17):
        rep = classify_spectrum(N, 1.0)
        S = build_blocks(N, 1.0).jacobian
        w = rep.eigenvalues
        pos = w[w > rep.zero_threshold]
        neg = w[w < -rep.zero_threshold]
        zero = w[np.abs(w) <= rep.zero_threshold]
        lam1 = regular_constants(N, 1.0)[1]
        center = center_space_vectors(N)
        center_res = float(np.max(np.linalg.norm(S @ center, axis=0)))
        worst_center = max(worst_center, center_res)
        if N >= 5:
            if len(pos) != 2 or len(zero) != 1 or len(neg) != 2 * N - 3:
                failures.append((N, len(pos), len(zero), len(neg)))
            worst_val = max(worst_val, float(np.max(np.abs(pos + lam1))))
        else:
            if len(pos) != 2 or len(zero) != 2 or len(neg) != 2 * N - 4:
                failures.append((N, len(pos), len(zero), len(neg)))
        if rep.checks["center_span_err"] > 1e-6:
            failures.append((N, "center span", rep.checks["center_span_err"]))
    ok = not failures and worst_val <= 1e-10 and worst_center <= 1e-10
    acceptance(
        4, ok,
        f"dims ok for N=4..16 (failures: {failures}); max |pos eig + lambda_1| {worst_val:.2e}, "
        f"max center residual {worst_center:.2e}; tol 1e-10",
    )
    assert ok


def test_criterion_05_monotonicity_formula(runs, acceptance):
    worst = 0.0
    rho_ok = True
    for tr in runs.entropy:
        for t in ENTROPY_TIMES:
            worst = max(worst, monotonicity_residual(tr, None, t) / abs(rho_rate(tr, None, t)))
        rho_ok &= nonincreasing([entropy_rho(tr, None, float(t)) for t in tr.t])
    ok = worst <= 1e-5 and rho_ok
    acceptance(5, ok, f"max residual/|drho/dt| {worst:.2e} on 20 polygons at t={ENTROPY_TIMES} (tol 1e-5); rho nonincreasing: {rho_ok}")
    assert ok


def test_criterion_06_triangle_convergence(runs, acceptance):
    t0 = time.perf_counter()
    worst = max(float(np.max(np.abs(interior_angles(r.trajectory.final) - np.pi / 3))) for r in runs.triangles)
    v_ok = all(nonincreasing(r.V) for r in runs.triangles)
    ok = worst < 1e-3 and v_ok and len(runs.triangles) == 50
    acceptance(6, ok, f"50 triangles: max |theta - pi/3| = {worst:.2e} (tol 1e-3); V nonincreasing at every step: {v_ok}")
    assert ok
    assert time.perf_counter() - t0 < 60


def _heptagon_ok(res):
    recs = res.records
    a = [r.angle_error for r in recs]
    e = [r.edge_ratio_error for r in recs]
    dec = all(y < x for x, y in zip(a, a[1:])) and all(y < x for x, y in zip(e, e[1:]))
    return dec and a[-1] * 10 <= a[0] and e[-1] * 10 <= e[0], a, e


def test_criterion_07_heptagon(runs, acceptance):
    ok, a, e = _heptagon_ok(runs.heptagon)
    ok_dil, _, _ = _heptagon_ok(runs.heptagon_dilation)
    acceptance(
        7, ok and ok_dil,
        f"angle error {a[0]:.3e} -> {a[-1]:.3e}, edge ratio error {e[0]:.3e} -> {e[-1]:.3e}, strictly decreasing over k=0..5 "
        f"(dilation variant also: {ok_dil})",
    )
    assert len(a) == 6
    assert ok and ok_dil


def test_criterion_08_quadrilateral_dichotomy(runs, acceptance):
    rect = runs.quads["rectangle"].summary
    rh = runs.quads["rhombus"].summary
    ok_rect = rect["edge_residual"] <= 1e-6 and rect["angle_residual"] <= 1e-6
    ok_rh = rh["edge_residual"] <= 1e-8 and rh["angle_residual"] >= 1e-2
    # the rhombus keeps its angles along the whole run, not only at the end
    ok_rh &= all(r.edge_ratio_error <= 1e-8 and r.angle_error >= 1e-2 for r in runs.quads["rhombus"].records)
    acceptance(
        8, ok_rect and ok_rh,
        f"rectangle -> residuals {rect['edge_residual']:.1e}/{rect['angle_residual']:.1e} (tol 1e-6); "
        f"pi/3 rhombus edge {rh['edge_residual']:.1e} (tol 1e-8), angle {rh['angle_residual']:.3f} (>= 1e-2)",
    )
    assert ok_rect and ok_rh


def test_criterion_09_conservation_monotone_suite(runs, acceptance):
    failures = []
    worst_drift = 0.0
    trajs = runs.all_trajectories()
    for i, (name, tr) in enumerate(trajs):
        rep = monotone_report(tr, rng_seed=i, n_points=10)
        worst_drift = max(worst_drift, rep["center_drift"] / tr.cfg.rel_tol)
        if not (rep["energy_nonincreasing"] and rep["alpha_norm_nonincreasing"] and rep["center_drift_ok"]):
            failures.append((name, rep))
    ok = not failures
    acceptance(
        9, ok,
        f"{len(trajs)} trajectories: F_alpha and |X-Q|_(beta+2) (10 Q each) nonincreasing, "
        f"worst center drift {worst_drift:.2e} x rel_tol (tol 10); failures: {len(failures)}",
    )
    assert ok, failures[:3]


def test_criterion_10_self_similar_residual_heptagon(runs, acceptance):
    r5 = runs.heptagon.records[5].self_similar_residual
    r5d = runs.heptagon_dilation.records[5].self_similar_residual
    ok = r5 <= 1e-3 and r5d <= 1e-3
    acceptance(10, ok, f"k=5 self-similar residual {r5:.3e} (dilation variant {r5d:.3e}); tol 1e-3")
    assert ok


def test_flow_samples_cover_rescaled_runs(runs):
    # criterion 9 reads rescaled runs through X = a(t) Y; make sure that map is in use
    tr = runs.quads["rectangle"].trajectories[0]
    t, X = flow_samples(tr)
    assert tr.kind == "rescaled"
    assert np.all(np.diff(t) > 0)
    assert np.linalg.norm(X[-1]) < np.linalg.norm(X[0])
