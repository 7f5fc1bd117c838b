import math
from dataclasses import dataclass, field

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from betaflow.experiments import (
    entropy_checkpoints,
    random_polygon,
    random_triangle,
    run_heptagon,
    run_quad,
    run_triangle,
)
from betaflow.flow import evolve, regular_constants
from betaflow.polygon import regular_polygon
from betaflow.rng import SplitMix64

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


# ---------------------------------------------------------------------------
# acceptance reporting: one line per criterion at the end of the run

_ACCEPTANCE = {}


@pytest.fixture
def acceptance(request):
    """Record ``(criterion, ok, detail)``; the summary prints one line each."""

    def record(criterion: int, ok: bool, detail: str) -> None:
        _ACCEPTANCE[criterion] = (bool(ok), detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for c in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[c]
        terminalreporter.write_line(f"criterion {c:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


# ---------------------------------------------------------------------------
# shared runs (each is integrated once per session)

BETAS = (0.5, 1.0, 2.0)
SELFSIM_NS = range(4, 13)


def t_until_scale(N, k, beta, a_end=0.1):
    l, lam = regular_constants(N, beta, k)
    return (a_end ** (-beta) - 1.0) / (-beta * l**beta * lam)


@dataclass
class Runs:
    selfsim: list = field(default_factory=list)
    entropy: list = field(default_factory=list)
    triangles: list = field(default_factory=list)
    heptagon: object = None
    heptagon_dilation: object = None
    quads: dict = field(default_factory=dict)

    def all_trajectories(self):
        out = [(f"selfsim N={N} k={k} beta={b}", tr) for (N, k, b, tr) in self.selfsim]
        out += [(f"entropy #{i}", tr) for i, tr in enumerate(self.entropy)]
        out += [(f"triangle #{i}", r.trajectory) for i, r in enumerate(self.triangles)]
        out += [(f"heptagon iterate run {i}", tr) for i, tr in enumerate(self.heptagon.trajectories)]
        out += [("heptagon dilation", tr) for tr in self.heptagon_dilation.trajectories]
        out += [(f"quad {s}", r.trajectories[0]) for s, r in self.quads.items()]
        return out


ENTROPY_TIMES = (0.1, 0.5, 1.0)
ENTROPY_SEED = 2024
TRIANGLE_SEED = 31


@pytest.fixture(scope="session")
def runs():
    R = Runs()
    for N in SELFSIM_NS:
        for k in range(1, N):
            if math.gcd(k, N) != 1:
                continue
            for b in BETAS:
                tr = evolve(regular_polygon(N, k), b, t_until_scale(N, k, b))
                R.selfsim.append((N, k, b, tr))
    g = SplitMix64(ENTROPY_SEED)
    for _ in range(20):
        N = 4 + int(g.uniform() * 6)
        P = random_polygon(g, N)
        R.entropy.append(evolve(P, 1.0, 1.0 + 1e-3, checkpoints=entropy_checkpoints(ENTROPY_TIMES)))
    g = SplitMix64(TRIANGLE_SEED)
    for _ in range(50):
        R.triangles.append(run_triangle(random_triangle(g), beta=1.0))
    R.heptagon = run_heptagon()
    R.heptagon_dilation = run_heptagon(procedure="dilation")
    for shape in ("rectangle", "rhombus", "generic"):
        R.quads[shape] = run_quad(shape, beta=1.0)
    return R


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
