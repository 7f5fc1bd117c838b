"""File formats: polygons (JSON / CSV), trajectory CSV, run summaries.

Floats are written with 17 significant digits so every value round-trips.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .errors import DegenerateVertex
from .flow import Trajectory, entropy_rho, flow_samples
from .polygon import as_polygon, interior_angles

TRAJECTORY_HEADER = ["t", "j", "x", "y", "l_j", "theta_j", "F_alpha", "rho"]
TRIANGLE_HEADER = ["t", "theta0", "theta1", "theta2", "V", "Vdot"]


def fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    if np.isnan(x):
        return "nan"
    return format(x, ".17g")


def polygon_to_json(P) -> str:
    X = as_polygon(P)
    return json.dumps([[float(z.real), float(z.imag)] for z in X])


def polygon_from_json(text: str) -> np.ndarray:
    data = json.loads(text)
    if isinstance(data, dict):
        data = data.get("vertices", data)
    return as_polygon(np.array(data, dtype=float))


def polygon_to_csv(P) -> str:
    X = as_polygon(P)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["j", "x", "y"])
    for j, z in enumerate(X):
        w.writerow([j, fmt(z.real), fmt(z.imag)])
    return buf.getvalue()


def polygon_from_csv(text: str) -> np.ndarray:
    rows = list(csv.DictReader(io.StringIO(text)))
    rows.sort(key=lambda r: int(r["j"]))
    if [int(r["j"]) for r in rows] != list(range(len(rows))):
        raise ValueError("vertex indices j must be 0..N-1")
    return as_polygon(np.array([[float(r["x"]), float(r["y"])] for r in rows]))


def read_polygon(path) -> np.ndarray:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".csv":
        return polygon_from_csv(text)
    return polygon_from_json(text)


def write_polygon(path, P) -> None:
    path = Path(path)
    path.write_text(polygon_to_csv(P) if path.suffix.lower() == ".csv" else polygon_to_json(P) + "\n")


def trajectory_rows(traj: Trajectory, x0=None):
    """Rows of the trajectory CSV, one per (sample, vertex).

    Rescaled trajectories are written in their own time ``tau`` and leave the
    ``rho`` column empty, as does the flow with ``beta == 0``.
    """
    alpha = traj.beta + 2
    with_rho = traj.kind == "flow" and traj.beta > 0
    F = traj.energies(alpha)
    for i, t in enumerate(traj.t):
        X = traj.X[i]
        l = np.abs(np.roll(X, -1) - X)
        try:
            th = interior_angles(X)
        except DegenerateVertex:
            th = np.full(len(X), np.nan)
        rho = entropy_rho(traj, x0, float(t)) if with_rho else None
        for j in range(len(X)):
            yield [fmt(t), j, fmt(X[j].real), fmt(X[j].imag), fmt(l[j]), fmt(th[j]), fmt(F[i]), fmt(rho)]


def write_trajectory_csv(path, traj: Trajectory, x0=None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_HEADER)
        w.writerows(trajectory_rows(traj, x0))


def write_rows_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([v if isinstance(v, (int, str)) else fmt(v) for v in r])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dump_json(path, obj) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def trajectory_summary(traj: Trajectory, checks: dict, **extra) -> dict:
    _, X = flow_samples(traj)
    com = complex(X[-1].mean())
    out = {
        "beta": traj.beta,
        "N": traj.N,
        "t_end": traj.t_end,
        "steps_accepted": traj.steps_accepted,
        "steps_rejected": traj.steps_rejected,
        "final_center_of_mass": [com.real, com.imag],
        "monotone_checks": {k: ("pass" if v else "fail") if isinstance(v, (bool, np.bool_)) else v for k, v in checks.items()},
    }
    out.update(extra)
    return _jsonable(out)
