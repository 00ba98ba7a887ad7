"""
Self-contained SVG line charts of mean cumulative regret against t.
"""
import math
import os
from dataclasses import dataclass
from typing import List, Sequence
from xml.sax.saxutils import escape

import numpy as np

from ..logging_utils import get_logger

logger = get_logger(__name__)

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")
DASHES = ("", "6,3", "2,2", "8,3,2,3")


@dataclass
class ChartSeries:
    label: str
    t: np.ndarray
    values: np.ndarray


class SVG:
    def __init__(self):
        self.svg = ""

    def header(self, width: int, height: int) -> None:
        self.svg += (
            '<?xml version="1.0" encoding="UTF-8" standalone="no"?>\n'
            f'<svg version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" '
            'xmlns="http://www.w3.org/2000/svg">\n'
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>\n'
        )

    def line(self, x1: float, y1: float, x2: float, y2: float, stroke: str = "black", extra: str = "") -> None:
        self.svg += f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" stroke="{stroke}" {extra}/>\n'

    def polyline(self, points: Sequence[tuple], stroke: str, dash: str = "", title: str = "") -> None:
        coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        self.svg += f'<polyline fill="none" stroke="{stroke}" stroke-width="1.5"{dash_attr} points="{coords}"'
        if title:
            self.svg += f"><title>{escape(title)}</title></polyline>\n"
        else:
            self.svg += "/>\n"

    def text(self, x: float, y: float, string: str, extra: str = "", size: int = 12) -> None:
        self.svg += f'<text x="{x:.2f}" y="{y:.2f}" font-family="sans-serif" font-size="{size}" {extra}>{escape(string)}</text>\n'

    def get_svg(self) -> str:
        return f"{self.svg}</svg>\n"


def _nice_ticks(upper: float, count: int = 5) -> List[float]:
    if upper <= 0 or not math.isfinite(upper):
        return [0.0]
    raw = upper / count
    magnitude = 10 ** math.floor(math.log10(raw))
    step = next(m * magnitude for m in (1, 2, 2.5, 5, 10) if m * magnitude >= raw)
    return [i * step for i in range(int(math.floor(upper / step)) + 1)]


def render_regret_chart(
    series: Sequence[ChartSeries],
    path: str,
    title: str = "Cumulative regret",
    width: int = 800,
    height: int = 500,
) -> str:
    left, right, top, bottom = 70, 190, 40, 50
    plot_w, plot_h = width - left - right, height - top - bottom
    t_max = max((float(np.max(s.t)) for s in series if s.t.size), default=1.0)
    finite = [float(np.nanmax(s.values)) for s in series if s.values.size and np.any(np.isfinite(s.values))]
    y_max = max(finite + [0.0])
    y_ticks = _nice_ticks(y_max)
    y_top = max(y_max, y_ticks[-1]) or 1.0
    x_ticks = _nice_ticks(t_max)

    def sx(t: float) -> float:
        return left + plot_w * (t / t_max if t_max > 0 else 0.0)

    def sy(v: float) -> float:
        return top + plot_h * (1.0 - v / y_top)

    svg = SVG()
    svg.header(width, height)
    svg.text(left, top - 15, title, 'font-weight="bold"', size=14)
    svg.line(left, top + plot_h, left + plot_w, top + plot_h)
    svg.line(left, top, left, top + plot_h)
    for tick in x_ticks:
        svg.line(sx(tick), top + plot_h, sx(tick), top + plot_h + 5)
        svg.text(sx(tick), top + plot_h + 18, f"{tick:g}", 'text-anchor="middle"')
    for tick in y_ticks:
        svg.line(left - 5, sy(tick), left, sy(tick))
        svg.line(left, sy(tick), left + plot_w, sy(tick), "#dddddd")
        svg.text(left - 8, sy(tick) + 4, f"{tick:g}", 'text-anchor="end"')
    svg.text(left + plot_w / 2, height - 10, "t", 'text-anchor="middle"')
    middle = top + plot_h / 2
    svg.text(15, middle, "regret", f'transform="rotate(-90 15 {middle:.2f})"')

    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        dash = DASHES[(i // len(PALETTE)) % len(DASHES)]
        mask = np.isfinite(s.values)
        points = [(sx(t), sy(v)) for t, v in zip(s.t[mask], s.values[mask])]
        svg.polyline(points, color, dash, s.label)
        legend_y = top + 10 + 18 * i
        legend_extra = 'stroke-width="2"' + (f' stroke-dasharray="{dash}"' if dash else "")
        svg.line(left + plot_w + 15, legend_y, left + plot_w + 40, legend_y, color, legend_extra)
        svg.text(left + plot_w + 45, legend_y + 4, s.label)

    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(svg.get_svg())
    logger.info("Wrote regret chart with %s lines to %s", len(series), path)
    return path
