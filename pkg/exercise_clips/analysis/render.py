"""Stick-figure SVG drawings of cluster centroids.

A centroid is 99 values (33 landmarks x ``x, y, z``). The drawing projects
onto ``x, y``, fits the figure into a square canvas with a margin while
keeping the aspect ratio, and draws the fixed skeleton edge list as lines
plus a dot per landmark. Image ``y`` already grows downward, as in SVG, so
no flip is applied. Output depends only on the centroid values.
"""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np
import numpy.typing as npt

from ..io import atomic_write_text
from ..poses import N_LANDMARKS

CANVAS: int = 400
MARGIN: int = 20
STROKE: str = "#1f3a5f"

# Face, arms and hands, torso, legs and feet.
SKELETON_EDGES: tuple[tuple[int, int], ...] = (
    (0, 1), (1, 2), (2, 3), (3, 7), (0, 4), (4, 5), (5, 6), (6, 8), (9, 10),
    (11, 12), (11, 13), (13, 15), (15, 17), (15, 19), (15, 21), (17, 19),
    (12, 14), (14, 16), (16, 18), (16, 20), (16, 22), (18, 20),
    (11, 23), (12, 24), (23, 24),
    (23, 25), (24, 26), (25, 27), (26, 28), (27, 29), (28, 30), (29, 31), (30, 32),
    (27, 31), (28, 32),
)  # fmt: skip


def _project(centroid: npt.ArrayLike) -> npt.NDArray[np.float64]:
    points = np.asarray(centroid, dtype=np.float64).reshape(N_LANDMARKS, -1)[:, :2]
    lo = points.min(axis=0)
    extent = points.max(axis=0) - lo
    span = float(extent.max())
    usable = CANVAS - 2 * MARGIN
    scale = usable / span if span > 1e-12 else 0.0
    offset = MARGIN + (usable - extent * scale) / 2.0
    return (points - lo) * scale + offset


def centroid_svg(centroid: npt.ArrayLike, title: str | None = None) -> str:
    """SVG document for one centroid; an all-equal centroid collapses to a point."""

    xy = _project(centroid)
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{CANVAS}" '
        f'height="{CANVAS}" viewBox="0 0 {CANVAS} {CANVAS}">',
    ]
    if title:
        parts.append(f"<title>{escape(title)}</title>")
    parts.append(f'<g stroke="{STROKE}" stroke-width="3" stroke-linecap="round">')
    for a, b in SKELETON_EDGES:
        parts.append(
            f'<line x1="{xy[a, 0]:.3f}" y1="{xy[a, 1]:.3f}" '
            f'x2="{xy[b, 0]:.3f}" y2="{xy[b, 1]:.3f}"/>'
        )
    parts.append("</g>")
    parts.append(f'<g fill="{STROKE}">')
    for i in range(N_LANDMARKS):
        parts.append(f'<circle cx="{xy[i, 0]:.3f}" cy="{xy[i, 1]:.3f}" r="3"/>')
    parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_centroid(centroid: npt.ArrayLike, out: str | Path, title: str | None = None) -> Path:
    """Write the stick figure of ``centroid`` to ``out`` (atomically)."""

    return atomic_write_text(out, centroid_svg(centroid, title))
