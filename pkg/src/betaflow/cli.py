"""Command-line driver: ``betaflow <command> [options]``.

Commands: evolve, heptagon, quad, triangle, spectrum, entropy. Every command
writes its files into ``--out`` (default: current directory) and prints a
one-line summary.

Exit codes: 0 success, 1 usage error or invalid input, 2 numerical failure,
3 a check reported by the command failed.

A config file (``--config FILE``) holds ``key = value`` lines; keys are
option names with ``-`` or ``_``. Lines after a ``[command]`` header apply to
that command only. Command-line flags override the file, which overrides the
built-in defaults.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .errors import AmbiguousSpectrum, BetaflowError, IntegrationError
from .experiments import (
    QUAD_SHAPES,
    entropy_checkpoints,
    perturbed_regular,
    random_triangle,
    run_heptagon,
    run_quad,
    run_triangle,
)
from .flow import (
    IntegratorConfig,
    entropy_rho,
    evolve,
    monotone_report,
    nonincreasing,
    regular_constants,
    rho_rate,
    rho_rate_fd,
    self_similar_scale,
)
from .io import (
    TRIANGLE_HEADER,
    dump_json,
    read_polygon,
    trajectory_summary,
    write_rows_csv,
    write_trajectory_csv,
)
from .linearization import classify_spectrum
from .polygon import center_of_mass, regular_polygon
from .rng import SplitMix64
from .svg import write_svg

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_CHECK = 0, 1, 2, 3

ENTROPY_RTOL = 1e-5
SELFSIM_TOL = 1e-6


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# config files


_TOP = "__top__"


def _unquote(v: str) -> str:
    if len(v) >= 2 and v[0] == v[-1] and v[0] in "'\"":
        return v[1:-1]
    return v


def load_config(path) -> dict:
    """``{section: {key: value}}`` with top-level keys under ``""``."""
    cp = configparser.ConfigParser(
        delimiters=("=",), comment_prefixes=("#",), inline_comment_prefixes=("#",),
        interpolation=None, default_section="__defaults__",
    )
    cp.optionxform = str
    try:
        cp.read_string(f"[{_TOP}]\n" + Path(path).read_text(), source=str(path))
    except configparser.ParsingError as exc:
        # line numbers count the injected header
        n = exc.errors[0][0]
        raise UsageError(f"{path}:{n - 1}: expected key = value") from None
    except configparser.DuplicateSectionError as exc:
        raise UsageError(f"{path}:{exc.lineno - 1}: section [{exc.section}] repeated") from None
    except configparser.DuplicateOptionError as exc:
        raise UsageError(f"{path}:{exc.lineno - 1}: option {exc.option!r} repeated") from None
    except configparser.Error as exc:
        raise UsageError(str(exc)) from None
    out: dict = {}
    for section in cp.sections():
        name = "" if section == _TOP else section.strip()
        out[name] = {k.strip().replace("-", "_"): _unquote(v.strip()) for k, v in cp.items(section)}
    return out


def _to_bool(v: str) -> bool:
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {v!r}")


def _apply_config(sub: argparse.ArgumentParser, values: dict) -> None:
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for k, v in values.items():
        a = actions[k]
        if isinstance(a, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            defaults[k] = _to_bool(v)
        elif a.type is not None:
            try:
                defaults[k] = a.type(v)
            except (TypeError, ValueError) as exc:
                raise UsageError(f"config value for {k}: {exc}") from None
        else:
            defaults[k] = v
        if a.choices is not None and defaults[k] not in a.choices:
            raise UsageError(f"config value for {k} must be one of {list(a.choices)}")
    sub.set_defaults(**defaults)


# ---------------------------------------------------------------------------
# argument types


def n_range(s: str) -> list:
    """``"4..12"`` (inclusive), ``"4,6,9"`` or ``"7"``; sorted, without repeats."""
    try:
        if ".." in s:
            a, b = s.split("..", 1)
            lo, hi = int(a), int(b)
            if lo > hi:
                raise ValueError
            return list(range(lo, hi + 1))
        return sorted({int(v) for v in s.split(",")})
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {s!r}; use A..B or a comma list") from None


def float_list(s: str) -> list:
    try:
        return sorted({float(v) for v in s.split(",")})
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad list of numbers {s!r}") from None


def point(s: str):
    if s == "auto":
        return None
    try:
        x, y = (float(v) for v in s.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or 'x,y', got {s!r}") from None
    return complex(x, y)


def positive(s: str) -> float:
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {s}")
    return v


def nonneg(s: str) -> float:
    v = float(s)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {s}")
    return v


def pos_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {s}")
    return v


# ---------------------------------------------------------------------------
# helpers


def _cfg(args) -> IntegratorConfig:
    return IntegratorConfig(rel_tol=args.rel_tol, abs_tol=args.abs_tol, max_steps=args.max_steps)


def _outdir(args) -> Path:
    d = Path(args.out)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _initial_polygon(args):
    if args.input is not None:
        return read_polygon(args.input)
    if args.regular is not None:
        return regular_polygon(args.regular, args.k)
    if args.random is not None:
        return perturbed_regular(args.random, args.perturb, args.seed)
    raise UsageError("one of --regular, --input or --random is required")


def _pf(ok) -> str:
    return "pass" if ok else "fail"


def _sample_indices(n: int, count: int) -> list:
    return sorted(set(np.linspace(0, n - 1, min(count, n)).round().astype(int).tolist()))


# ---------------------------------------------------------------------------
# commands


def cmd_evolve(args) -> int:
    P0 = _initial_polygon(args)
    cfg = _cfg(args)
    traj = evolve(P0, args.beta, args.t_end, cfg)
    checks = monotone_report(traj, rng_seed=args.seed)
    ok = checks["energy_nonincreasing"] and checks["alpha_norm_nonincreasing"] and checks["center_drift_ok"]
    extra = {}
    if args.check_selfsim:
        if args.regular is None:
            raise UsageError("--check-selfsim needs --regular")
        l, lam = regular_constants(args.regular, args.beta, args.k)
        if args.beta == 0:
            a = np.exp(lam * traj.t)
        else:
            a = self_similar_scale(traj.t, args.beta, l, lam)
        dev = float(np.max(np.abs(traj.X - a[:, None] * P0[None, :]) / a[:, None]))
        extra["selfsim_max_rel_deviation"] = dev
        extra["selfsim_check"] = _pf(dev <= SELFSIM_TOL)
        ok = ok and dev <= SELFSIM_TOL
    out = _outdir(args)
    write_trajectory_csv(out / "trajectory.csv", traj, x0=args.x0)
    summary = trajectory_summary(traj, checks, **extra)
    if args.svg:
        idx = _sample_indices(len(traj.t), args.snapshots)
        write_svg(
            out / "snapshots.svg",
            [traj.X[i] for i in idx],
            titles=[f"t = {traj.t[i]:.4g}" for i in idx],
            reproducible=args.reproducible,
        )
    dump_json(out / "summary.json", summary)
    line = f"evolve: N={traj.N} beta={args.beta:g} steps={traj.steps_accepted} F_alpha monotone: {_pf(checks['energy_nonincreasing'])}"
    if "selfsim_max_rel_deviation" in extra:
        line += f" selfsim deviation: {extra['selfsim_max_rel_deviation']:.3e}"
    print(line)
    return EXIT_OK if ok else EXIT_CHECK


def _write_experiment(res, args, stem: str, titles) -> None:
    out = _outdir(args)
    res.artifacts = [f"{stem}.csv", f"{stem}.json"] + ([f"{stem}.svg"] if args.svg else [])
    write_rows_csv(
        out / f"{stem}.csv",
        ["k", "c_k", "angle_error", "edge_ratio_error", "self_similar_residual"],
        [(r.k, r.c_k, r.angle_error, r.edge_ratio_error, r.self_similar_residual) for r in res.records],
    )
    if args.svg:
        write_svg(out / f"{stem}.svg", res.polygons[1:], titles=titles, reproducible=args.reproducible)
    dump_json(out / f"{stem}.json", res.to_dict())


def cmd_heptagon(args) -> int:
    res = run_heptagon(
        seed=args.seed, perturb=args.perturb, iterations=args.iterations, tau=args.tau,
        beta=args.beta, ratio=args.ratio, N=args.n, procedure=args.procedure, cfg=_cfg(args),
    )
    checks = {}
    for i, tr in enumerate(res.trajectories):
        rep = monotone_report(tr, rng_seed=i)
        checks[f"run{i}"] = rep["energy_nonincreasing"] and rep["alpha_norm_nonincreasing"] and rep["center_drift_ok"]
    res.summary["monotone_checks"] = _pf(all(checks.values()))
    ok = all(checks.values())
    if args.perturb > 0:
        ok = ok and res.summary["angle_error_decreasing"] and res.summary["edge_ratio_error_decreasing"]
    _write_experiment(res, args, "heptagon" if args.n == 7 else f"polygon{args.n}", [f"k = {r.k}" for r in res.records])
    last = res.records[-1]
    line = f"heptagon: k={last.k} angle_error={last.angle_error:.6g} edge_ratio_error={last.edge_ratio_error:.6g}"
    if args.perturb > 0:
        line += f" decreasing: {_pf(res.summary['angle_error_decreasing'] and res.summary['edge_ratio_error_decreasing'])}"
    print(line)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_quad(args) -> int:
    res = run_quad(
        shape=args.shape, beta=args.beta, tau_end=args.tau_end, record_every=args.record_every,
        aspect=args.aspect, rhombus_angle=args.angle, seed=args.seed, perturb=args.perturb, cfg=_cfg(args),
    )
    rep = monotone_report(res.trajectories[0], rng_seed=args.seed)
    ok = rep["energy_nonincreasing"] and rep["alpha_norm_nonincreasing"] and rep["center_drift_ok"]
    res.summary["monotone_checks"] = _pf(ok)
    _write_experiment(res, args, f"quad-{args.shape}", [f"tau = {r.c_k:g}" for r in res.records[1:]])
    s = res.summary
    print(f"quad: shape={args.shape} edge_residual={s['edge_residual']:.3e} angle_residual={s['angle_residual']:.3e} limit={s['limit']}")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_triangle(args) -> int:
    if args.vertices is not None:
        T = read_polygon(args.vertices)
    else:
        T = random_triangle(SplitMix64(args.seed))
    run = run_triangle(T, args.beta, args.tau_end, args.tol, _cfg(args))
    V_ok = nonincreasing(run.V)
    out = _outdir(args)
    write_rows_csv(out / "triangle.csv", TRIANGLE_HEADER, run.rows)
    dump_json(out / "triangle.json", {
        "beta": args.beta,
        "tol": args.tol,
        "converged": run.converged,
        "max_angle_deviation": run.max_angle_dev,
        "tau_final": run.trajectory.t_end,
        "steps_accepted": run.trajectory.steps_accepted,
        "V_nonincreasing": _pf(V_ok),
    })
    print(f"triangle: converged={run.converged} max|theta-pi/3|={run.max_angle_dev:.3e} V monotone: {_pf(V_ok)}")
    return EXIT_OK if (V_ok and run.converged) else EXIT_CHECK


def _spectrum_job(job):
    N, beta, fd_h = job
    return classify_spectrum(N, beta, fd_h=fd_h).to_dict()


def cmd_spectrum(args) -> int:
    jobs = [(N, b, args.fd_h) for N in args.n_range for b in args.beta]
    for N, _, _ in jobs:
        if N < 3:
            raise UsageError("N must be >= 3")
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            reports = list(ex.map(_spectrum_job, jobs))
    else:
        reports = [_spectrum_job(j) for j in jobs]
    out = _outdir(args)
    rows = []
    for rep in reports:
        name = f"spectrum-N{rep['N']}-beta{rep['beta']:g}.json"
        dump_json(out / name, rep)
        rows.append({"N": rep["N"], "beta": rep["beta"], "dims": rep["dims"], "dims_ok": _pf(rep["checks"]["dims_ok"]), "file": name})
    all_ok = all(rep["checks"]["dims_ok"] for rep in reports)
    dump_json(out / "spectrum-summary.json", {"reports": rows, "all_dims_ok": _pf(all_ok)})
    print(f"spectrum: {len(reports)} reports, dimension checks: {_pf(all_ok)}")
    return EXIT_OK if all_ok else EXIT_CHECK


def cmd_entropy(args) -> int:
    if args.beta <= 0:
        raise UsageError("entropy needs beta > 0")
    P0 = _initial_polygon(args)
    h = args.h
    ts = np.linspace(args.t_end / args.n_times, args.t_end - 2 * h, args.n_times)
    traj = evolve(P0, args.beta, args.t_end, _cfg(args), checkpoints=entropy_checkpoints(ts, h))
    x0 = args.x0
    rows, rel = [], []
    for t in ts:
        t = float(t)
        num = rho_rate_fd(traj, x0, t, h)
        closed = rho_rate(traj, x0, t)
        res = abs(num - closed)
        rel.append(res / max(abs(closed), 1e-300))
        rows.append((t, entropy_rho(traj, x0, t), num, closed, res))
    rho_steps = [entropy_rho(traj, x0, float(t)) for t in traj.t]
    rho_ok = nonincreasing(rho_steps)
    res_ok = max(rel) <= ENTROPY_RTOL
    out = _outdir(args)
    write_rows_csv(out / "entropy.csv", ["t", "rho", "drho_numeric", "drho_formula", "residual"], rows)
    xc = center_of_mass(traj.X[0]) if x0 is None else x0
    dump_json(out / "entropy.json", {
        "beta": args.beta,
        "x0": [xc.real, xc.imag],
        "max_relative_residual": max(rel),
        "rho_nonincreasing": _pf(rho_ok),
        "residual_check": _pf(res_ok),
        "steps_accepted": traj.steps_accepted,
    })
    print(f"entropy: rho monotone: {_pf(rho_ok)} max relative residual={max(rel):.3e}")
    return EXIT_OK if (rho_ok and res_ok) else EXIT_CHECK


# ---------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("common options")
    g.add_argument("--config", metavar="FILE", help="key = value defaults (flags take precedence)")
    g.add_argument("--out", default=".", metavar="DIR", help="output directory (default: %(default)s)")
    g.add_argument("--reproducible", action="store_true", help="omit the timestamp comment from SVG output")
    g.add_argument("--rel-tol", type=positive, default=1e-9, help="integrator relative tolerance (default: %(default)g)")
    g.add_argument("--abs-tol", type=positive, default=1e-12, help="integrator absolute tolerance (default: %(default)g)")
    g.add_argument("--max-steps", type=pos_int, default=200_000, help="step limit per run (default: %(default)d)")


def _polygon_source(p: argparse.ArgumentParser, perturb: float = 0.2) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--regular", type=int, metavar="N", help="start from the regular N-gon P_k")
    src.add_argument("--input", metavar="FILE", help="polygon file (.json list of [x, y] or .csv with j,x,y)")
    src.add_argument("--random", type=int, metavar="N", help="seeded perturbation of the regular N-gon")
    p.add_argument("--k", type=int, default=1, help="winding index for --regular (default: %(default)d)")
    p.add_argument("--seed", type=int, default=0, help="seed for --random and sampled checks (default: %(default)d)")
    p.add_argument("--perturb", type=nonneg, default=perturb, help="amplitude for --random (default: %(default)g)")
    p.add_argument("--x0", type=point, default=None, help="entropy center 'x,y' or 'auto' (center of mass)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="betaflow", description="Numerical experiments with the beta-polygon flow.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    subs.required = True

    p = subs.add_parser("evolve", help="integrate the flow and write the trajectory")
    _polygon_source(p)
    p.add_argument("--beta", type=nonneg, default=1.0, help="weight exponent, 0 allowed (default: %(default)g)")
    p.add_argument("--t-end", type=positive, default=1.0, help="final time (default: %(default)g)")
    p.add_argument("--check-selfsim", action="store_true", help="compare with a(t) P_k (needs --regular)")
    p.add_argument("--svg", action="store_true", help="write snapshots.svg")
    p.add_argument("--snapshots", type=pos_int, default=6, help="number of SVG panels (default: %(default)d)")
    _common(p)
    p.set_defaults(func=cmd_evolve)

    p = subs.add_parser("heptagon", help="rescaling sequence of a perturbed regular polygon")
    p.add_argument("--seed", type=int, default=7, help="perturbation seed (default: %(default)d)")
    p.add_argument("--perturb", type=nonneg, default=0.2, help="perturbation amplitude (default: %(default)g)")
    p.add_argument("--iterations", type=pos_int, default=6, help="number of rescalings K (default: %(default)d)")
    p.add_argument("--tau", type=positive, default=1.0, help="evolution time per iteration (default: %(default)g)")
    p.add_argument("--beta", type=positive, default=1.0, help="(default: %(default)g)")
    p.add_argument("--ratio", type=positive, default=10.0, help="rescaling factor c (default: %(default)g)")
    p.add_argument("--n", type=int, default=7, help="number of vertices (default: %(default)d)")
    p.add_argument("--procedure", choices=("iterate", "dilation"), default="iterate",
                   help="iterate: evolve, multiply, repeat; dilation: c_k X(c_k^beta tau) on one run")
    p.add_argument("--svg", action="store_true", help="write one panel per iteration")
    _common(p)
    p.set_defaults(func=cmd_heptagon)

    p = subs.add_parser("quad", help="rescaled flow of a quadrilateral")
    p.add_argument("--shape", choices=QUAD_SHAPES, default="rectangle")
    p.add_argument("--beta", type=positive, default=1.0, help="(default: %(default)g)")
    p.add_argument("--tau-end", type=positive, default=40.0, help="rescaled end time (default: %(default)g)")
    p.add_argument("--record-every", type=positive, default=5.0, help="(default: %(default)g)")
    p.add_argument("--aspect", type=positive, default=2.0, help="rectangle aspect ratio (default: %(default)g)")
    p.add_argument("--angle", type=positive, default=float(np.pi / 3), help="rhombus angle (default: pi/3)")
    p.add_argument("--seed", type=int, default=11, help="seed of the generic shape (default: %(default)d)")
    p.add_argument("--perturb", type=nonneg, default=0.3, help="generic shape amplitude (default: %(default)g)")
    p.add_argument("--svg", action="store_true")
    _common(p)
    p.set_defaults(func=cmd_quad)

    p = subs.add_parser("triangle", help="rescaled triangle run with the angle Lyapunov function")
    p.add_argument("--vertices", metavar="FILE", help="triangle file; a seeded random triangle otherwise")
    p.add_argument("--seed", type=int, default=0, help="(default: %(default)d)")
    p.add_argument("--beta", type=positive, default=1.0, help="(default: %(default)g)")
    p.add_argument("--tau-end", type=positive, default=200.0, help="(default: %(default)g)")
    p.add_argument("--tol", type=positive, default=1e-6, help="stop when max|theta - pi/3| < tol (default: %(default)g)")
    _common(p)
    p.set_defaults(func=cmd_triangle)

    p = subs.add_parser("spectrum", help="classify the linearization at the regular polygon")
    p.add_argument("--n-range", type=n_range, default=n_range("4..12"), help="A..B or a comma list (default: 4..12)")
    p.add_argument("--beta", type=float_list, default=[1.0], help="comma list (default: 1)")
    p.add_argument("--fd-h", type=positive, default=1e-6, help="finite-difference step (default: %(default)g)")
    p.add_argument("--jobs", type=pos_int, default=1, help="worker processes (default: %(default)d)")
    _common(p)
    p.set_defaults(func=cmd_spectrum)

    p = subs.add_parser("entropy", help="entropy along the flow and its monotonicity formula")
    _polygon_source(p)
    p.add_argument("--beta", type=positive, default=1.0, help="(default: %(default)g)")
    p.add_argument("--t-end", type=positive, default=2.0, help="(default: %(default)g)")
    p.add_argument("--n-times", type=pos_int, default=20, help="(default: %(default)d)")
    p.add_argument("--h", type=positive, default=1e-5, help="difference step (default: %(default)g)")
    _common(p)
    p.set_defaults(func=cmd_entropy)
    return parser


def _configure(parser: argparse.ArgumentParser, path) -> None:
    conf = load_config(path)
    subs = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for section in conf:
        if section and section not in subs.choices:
            raise UsageError(f"unknown config section [{section}]")
    known = set()
    for name, sub in subs.choices.items():
        dests = {a.dest for a in sub._actions}
        known |= dests
        values = {k: v for k, v in conf[""].items() if k in dests}
        section = conf.get(name, {})
        bad = set(section) - dests
        if bad:
            raise UsageError(f"unknown option(s) in [{name}]: {', '.join(sorted(bad))}")
        values.update(section)
        _apply_config(sub, values)
    bad = set(conf[""]) - known
    if bad:
        raise UsageError(f"unknown config option(s): {', '.join(sorted(bad))}")


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    try:
        if known.config:
            _configure(parser, known.config)
    except (UsageError, OSError) as exc:
        print(f"betaflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (IntegrationError, AmbiguousSpectrum, ArithmeticError, FloatingPointError) as exc:
        print(f"betaflow {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, ValueError, OSError, KeyError, BetaflowError) as exc:
        print(f"betaflow {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
