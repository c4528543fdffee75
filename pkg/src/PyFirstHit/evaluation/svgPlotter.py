# -*- coding: UTF-8 -*-
"""
@Project    : PyFirstHit
@File       : svgPlotter.py
@Description: 用 jinja2 模板渲染诊断用 SVG（柱状直方图、散点图），固定 800×600 视窗。
@Version    : v0.1.0
@Dependencies:
    - jinja2
    - numpy
"""
import os
from typing import Dict, List, Optional, Sequence

import numpy as np
from jinja2 import Environment, FileSystemLoader

from ..utils.constants import SVG_HEIGHT, SVG_WIDTH
from ..utils.exceptions import PreconditionError
from ..utils.filePathHelper import AtomicWrite
from .metrics import Histogram

# 配置 jinja 模板
template_path = os.path.join(os.path.dirname(__file__), "../templates")
jinja_env = Environment(
    loader=FileSystemLoader(template_path), autoescape=True, trim_blocks=True, lstrip_blocks=True
)

MARGIN = 60
MAX_SCATTER_POINTS = 5000


def _frame() -> Dict[str, float]:
    return {"width": SVG_WIDTH, "height": SVG_HEIGHT, "left": MARGIN, "top": MARGIN,
            "right": SVG_WIDTH - MARGIN, "bottom": SVG_HEIGHT - MARGIN,
            "plot_w": SVG_WIDTH - 2 * MARGIN, "plot_h": SVG_HEIGHT - 2 * MARGIN}


def _ticks(lo: float, hi: float, count: int = 5) -> List[float]:
    return [float(v) for v in np.linspace(lo, hi, count)]


def render_histogram_svg(hist: Histogram, title: str = "", reference: Optional[Sequence[float]] = None,
                         xlabel: str = "", notes: Sequence[str] = ()) -> str:
    """
    Bar chart of bin frequencies; `reference` (bin probabilities) is drawn as a step line.
    """
    freqs = hist.frequencies
    n_bins = freqs.size
    if n_bins == 0:
        raise PreconditionError("histogram has no bins")
    frame = _frame()
    top = max(float(freqs.max()), float(np.max(reference)) if reference is not None else 0.0) or 1.0
    bar_w = frame["plot_w"] / n_bins
    bars = [{"x": frame["left"] + i * bar_w, "y": frame["bottom"] - f / top * frame["plot_h"],
             "w": bar_w, "h": f / top * frame["plot_h"]} for i, f in enumerate(freqs)]
    line = ""
    if reference is not None:
        points = []
        for i, p in enumerate(np.asarray(reference, dtype=float)):
            y = frame["bottom"] - p / top * frame["plot_h"]
            points.append(f"{frame['left'] + i * bar_w:.2f},{y:.2f}")
            points.append(f"{frame['left'] + (i + 1) * bar_w:.2f},{y:.2f}")
        line = " ".join(points)
    if hist.binning.kind in ("circle", "real"):
        edges = hist.binning.edges
        xticks = _ticks(float(edges[0]), float(edges[-1]))
    else:
        xticks = _ticks(0.0, float(n_bins))
    template = jinja_env.get_template("histogram.svg.j2")
    return template.render(frame=frame, title=title, bars=bars, reference=line, xlabel=xlabel,
                           xticks=[{"x": frame["left"] + i / (len(xticks) - 1) * frame["plot_w"], "label": f"{v:.3g}"}
                                   for i, v in enumerate(xticks)],
                           ymax=f"{top:.3g}", total=hist.total, notes=list(notes))


def render_scatter_svg(points: np.ndarray, title: str = "", columns: Sequence[int] = (0, 1)) -> str:
    """Scatter of two coordinates; at most MAX_SCATTER_POINTS points are drawn."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] == 0:
        raise PreconditionError("nothing to plot")
    cx, cy = columns
    xs = points[:MAX_SCATTER_POINTS, cx]
    ys = points[:MAX_SCATTER_POINTS, cy] if points.shape[1] > cy else np.zeros_like(xs)
    frame = _frame()
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = float(ys.min()), float(ys.max())
    x_span = (x_hi - x_lo) or 1.0
    y_span = (y_hi - y_lo) or 1.0
    dots = [{"x": frame["left"] + (x - x_lo) / x_span * frame["plot_w"],
             "y": frame["bottom"] - (y - y_lo) / y_span * frame["plot_h"]} for x, y in zip(xs, ys)]
    template = jinja_env.get_template("scatter.svg.j2")
    return template.render(frame=frame, title=title, dots=dots, total=points.shape[0],
                           xrange=f"[{x_lo:.3g}, {x_hi:.3g}]", yrange=f"[{y_lo:.3g}, {y_hi:.3g}]",
                           xlabel=f"x{cx + 1}", ylabel=f"x{cy + 1}")


def save_svg(path: str, svg: str) -> None:
    with AtomicWrite(path, newline="\n") as fp:
        fp.write(svg)
