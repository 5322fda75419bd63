"""
SVG renderings of hull cells and unfolded shortest paths
"""

import logging
import math
from typing import Union

import matplotlib
matplotlib.use('Agg')  # Use non-interactive backend
import matplotlib.pyplot as plt
import numpy as np
import seaborn as sns
from matplotlib.patches import Polygon

from cat0.services.complex_core import PolyComplex2D, unfold

logger = logging.getLogger(__name__)

plt.style.use('seaborn-v0_8')
sns.set_palette("husl")


def _grid(n: int):
    cols = min(n, 4)
    rows = max(1, math.ceil(n / cols))
    fig, axes = plt.subplots(rows, cols, figsize=(3.2 * cols, 3.2 * rows), squeeze=False)
    for ax in axes.flat[n:]:
        ax.set_visible(False)
    return fig, list(axes.flat)


def _save(fig, out: Union[str, "object"]):
    plt.tight_layout()
    fig.savefig(out, format='svg', bbox_inches='tight')
    plt.close(fig)


def render_cells(result, out) -> int:
    """One panel per cone: its two rays, the input points in it and the hull cell"""
    c = result.complex
    cones = sorted(c.cones)
    fig, axes = _grid(len(cones))
    colors = sns.color_palette("husl", len(cones))
    reach = max([p.radius for p in result.points.values()] + [1.0]) * 1.2
    by_cone = {}
    for label, p in result.points.items():
        if p.is_origin:
            continue
        cone, xy = c.cone_coords(p)
        by_cone.setdefault(cone, []).append((label, xy))
    for ax, cone, color in zip(axes, cones, colors):
        angle = c.cones[cone].angle
        first, second = c.cones[cone].rays
        ax.plot([0, reach], [0, 0], color="black", lw=1)
        ax.plot([0, reach * math.cos(angle)], [0, reach * math.sin(angle)], color="black", lw=1)
        ax.annotate(first, (reach, 0), fontsize=8)
        ax.annotate(second, (reach * math.cos(angle), reach * math.sin(angle)), fontsize=8)
        if cone in result.cells:
            poly = result.polygon(cone)
            if len(poly) >= 3:
                ax.add_patch(Polygon(poly, closed=True, alpha=0.35, color=color))
            elif poly:
                xs, ys = zip(*poly)
                ax.plot(xs, ys, color=color, lw=2)
        for label, xy in by_cone.get(cone, []):
            ax.plot(xy[0], xy[1], "o", color="black", ms=3)
            ax.annotate(label, (xy[0], xy[1]), fontsize=8)
        ax.set_title(cone)
        ax.set_aspect("equal")
        ax.set_xlim(-reach, reach)
        ax.set_ylim(-reach, reach)
    _save(fig, out)
    logger.info(f"Rendered {len(cones)} hull cells")
    return len(cones)


def render_path(complex_: PolyComplex2D, path, out) -> int:
    """One panel per straight piece of the path, drawn over its unfolded faces"""
    segments = [s for s in path.segments if s.faces]
    fig, axes = _grid(max(1, len(segments)))
    for ax, seg in zip(axes, segments):
        layout = unfold(complex_, list(seg.faces), list(seg.edges))
        colors = sns.color_palette("husl", len(seg.faces))
        for i, fid in enumerate(seg.faces):
            f = complex_.faces[fid]
            corners = [layout.place(i, f.xy(v)) for v in f.vertices]
            ax.add_patch(Polygon(np.array(corners), closed=True, alpha=0.3, color=colors[i]))
            centre = np.mean(corners, axis=0)
            ax.annotate(fid, (centre[0], centre[1]), fontsize=7, ha="center")
        ax.plot([seg.start[0], seg.end[0]], [seg.start[1], seg.end[1]], color="red", lw=2)
        ax.set_aspect("equal")
        ax.autoscale_view()
    axes[0].set_title(f"length {path.length:.6g}")
    _save(fig, out)
    logger.info(f"Rendered path of {len(segments)} segments")
    return len(segments)
