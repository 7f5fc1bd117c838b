"""Static SVG panels of polygons: a closed path with a dot on each vertex.

Each panel is a nested ``<svg>`` whose viewBox fits its own polygon, so a
sequence of shrinking polygons stays readable (every panel is drawn at the
same on-page size).
"""

from __future__ import annotations

import datetime as _dt
from typing import Optional, Sequence

import numpy as np

from .polygon import as_polygon


def _num(x: float) -> str:
    return f"{x:.6g}"


def panel(P, x: float, y: float, size: float, title: Optional[str] = None) -> str:
    X = as_polygon(P)
    # flip y so that the plane's orientation is kept on screen
    pts = np.column_stack([X.real, -X.imag])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = float(max(hi - lo)) or 1.0
    pad = 0.1 * span
    cx, cy = (lo + hi) / 2
    half = span / 2 + pad
    vb = f"{_num(cx - half)} {_num(cy - half)} {_num(2 * half)} {_num(2 * half)}"
    d = "M " + " L ".join(f"{_num(px)} {_num(py)}" for px, py in pts) + " Z"
    stroke = _num(span / 150)
    r = _num(span / 60)
    out = [f'<svg x="{_num(x)}" y="{_num(y)}" width="{_num(size)}" height="{_num(size)}" viewBox="{vb}">']
    out.append(f'<path d="{d}" fill="none" stroke="black" stroke-width="{stroke}"/>')
    out.extend(f'<circle cx="{_num(px)}" cy="{_num(py)}" r="{r}" fill="black"/>' for px, py in pts)
    out.append("</svg>")
    if title:
        out.append(f'<text x="{_num(x + size / 2)}" y="{_num(y + size + 14)}" text-anchor="middle" font-size="12">{title}</text>')
    return "\n".join(out)


def polygons_svg(
    polygons: Sequence,
    titles: Optional[Sequence[str]] = None,
    columns: int = 3,
    size: float = 200.0,
    reproducible: bool = False,
) -> str:
    """A grid of panels, one per polygon.

    Unless ``reproducible`` is set a generation timestamp is written as a
    comment; nothing else in the output depends on the time.
    """
    n = len(polygons)
    cols = max(1, min(columns, n))
    rows = (n + cols - 1) // cols
    gap = 24.0
    width = cols * (size + gap)
    height = rows * (size + gap)
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_num(width)}" height="{_num(height)}" '
        f'viewBox="0 0 {_num(width)} {_num(height)}">',
    ]
    if not reproducible:
        parts.append(f"<!-- generated {_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')} -->")
    parts.append(f'<rect width="{_num(width)}" height="{_num(height)}" fill="white"/>')
    for i, P in enumerate(polygons):
        r, c = divmod(i, cols)
        title = titles[i] if titles else None
        parts.append(panel(P, c * (size + gap) + gap / 2, r * (size + gap) + 4, size, title))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_svg(path, polygons, **kw) -> None:
    with open(path, "w") as fh:
        fh.write(polygons_svg(polygons, **kw))
