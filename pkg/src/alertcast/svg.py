"""Minimal SVG chart writers: heatmap, horizontal bars, boxplots, line and ROC charts.

Output is plain text with fixed number formatting so identical inputs give
identical bytes.
"""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

from alertcast.eda import BoxStats

FONT = "font-family='sans-serif'"
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def _num(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".") if math.isfinite(v) else "0"


class Canvas:
    def __init__(self, width: float, height: float, title: str = "") -> None:
        self.width, self.height = width, height
        self.parts: list[str] = []
        if title:
            self.text(width / 2, 20, title, size=14, anchor="middle", weight="bold")

    def rect(self, x, y, w, h, fill, stroke="none") -> None:
        self.parts.append(
            f"<rect x='{_num(x)}' y='{_num(y)}' width='{_num(w)}' height='{_num(h)}' fill='{fill}' stroke='{stroke}'/>"
        )

    def line(self, x1, y1, x2, y2, stroke="#000", width=1.0, dash: str | None = None) -> None:
        extra = f" stroke-dasharray='{dash}'" if dash else ""
        self.parts.append(
            f"<line x1='{_num(x1)}' y1='{_num(y1)}' x2='{_num(x2)}' y2='{_num(y2)}' "
            f"stroke='{stroke}' stroke-width='{_num(width)}'{extra}/>"
        )

    def polyline(self, points: Sequence[tuple[float, float]], stroke: str, width=1.5) -> None:
        pts = " ".join(f"{_num(x)},{_num(y)}" for x, y in points)
        self.parts.append(f"<polyline points='{pts}' fill='none' stroke='{stroke}' stroke-width='{_num(width)}'/>")

    def text(self, x, y, s: str, size=10, anchor="start", weight="normal", rotate: float | None = None) -> None:
        transform = f" transform='rotate({_num(rotate)} {_num(x)} {_num(y)})'" if rotate is not None else ""
        self.parts.append(
            f"<text x='{_num(x)}' y='{_num(y)}' font-size='{size}' text-anchor='{anchor}' "
            f"font-weight='{weight}' {FONT}{transform}>{escape(str(s))}</text>"
        )

    def render(self) -> str:
        head = (
            f"<svg xmlns='http://www.w3.org/2000/svg' width='{_num(self.width)}' height='{_num(self.height)}' "
            f"viewBox='0 0 {_num(self.width)} {_num(self.height)}'>"
        )
        body = "\n".join(self.parts)
        return f"{head}\n<rect width='100%' height='100%' fill='white'/>\n{body}\n</svg>\n"


def _heat_color(t: float) -> str:
    # white -> dark red
    t = min(max(t, 0.0), 1.0)
    r = round(255 - 75 * t)
    g = b = round(255 - 255 * t)
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap(
    values: Sequence[Sequence[float]],
    row_labels: Sequence[str],
    col_labels: Sequence[str],
    title: str,
    fmt: str = "{:.0f}",
) -> str:
    """Annotated heatmap; colors scale linearly between the finite min and max."""
    rows, cols = len(row_labels), len(col_labels)
    finite = [v for row in values for v in row if math.isfinite(v)]
    lo, hi = (min(finite), max(finite)) if finite else (0.0, 1.0)
    span = hi - lo or 1.0
    cell_w, cell_h = max(40.0, 9.0 * max(len(fmt.format(v)) for v in finite or [0])), 22.0
    left, top = 10 + 6.5 * max(map(len, row_labels)), 40 + 6.0 * max(map(len, col_labels))
    c = Canvas(left + cols * cell_w + 20, top + rows * cell_h + 20, title)
    for j, label in enumerate(col_labels):
        c.text(left + (j + 0.5) * cell_w, top - 6, label, size=9, rotate=-60)
    for i, label in enumerate(row_labels):
        c.text(left - 6, top + (i + 0.7) * cell_h, label, size=9, anchor="end")
        for j in range(cols):
            v = values[i][j]
            x, y = left + j * cell_w, top + i * cell_h
            if math.isfinite(v):
                t = (v - lo) / span
                c.rect(x, y, cell_w, cell_h, _heat_color(t), "#ffffff")
                c.text(x + cell_w / 2, y + cell_h * 0.68, fmt.format(v), size=8, anchor="middle")
            else:
                c.rect(x, y, cell_w, cell_h, "#cccccc", "#ffffff")
                c.text(x + cell_w / 2, y + cell_h * 0.68, "n/a", size=8, anchor="middle")
    return c.render()


def bar_chart(labels: Sequence[str], values: Sequence[float], title: str, fmt: str = "{:.3f}") -> str:
    """Horizontal bars, largest on top."""
    order = sorted(range(len(values)), key=lambda k: (-values[k], k))
    left = 10 + 6.5 * max(map(len, labels))
    bar_h, plot_w = 18.0, 360.0
    vmax = max(max(values), 0.0) or 1.0
    c = Canvas(left + plot_w + 80, 40 + len(values) * bar_h + 20, title)
    for rank, k in enumerate(order):
        y = 40 + rank * bar_h
        w = plot_w * max(values[k], 0.0) / vmax
        c.text(left - 6, y + bar_h * 0.7, labels[k], size=9, anchor="end")
        c.rect(left, y + 2, w, bar_h - 4, PALETTE[0])
        c.text(left + w + 4, y + bar_h * 0.7, fmt.format(values[k]), size=9)
    return c.render()


def boxplot(stats: Sequence[BoxStats], labels: Sequence[str], title: str, unit: str = "minutes") -> str:
    """Vertical Tukey boxplots on a shared linear axis (outliers summarized as counts)."""
    n = len(stats)
    left, top, plot_h, box_w = 60.0, 40.0, 300.0, 36.0
    bottom = top + plot_h
    c = Canvas(left + n * (box_w + 14) + 30, bottom + 8 + 6.0 * max(map(len, labels)), title)
    hi = max(s.max for s in stats) or 1.0

    def y_of(v: float) -> float:
        return bottom - plot_h * v / hi

    c.line(left, top, left, bottom)
    for k in range(5):
        v = hi * k / 4
        c.line(left - 4, y_of(v), left, y_of(v))
        c.text(left - 6, y_of(v) + 3, _num(v), size=8, anchor="end")
    c.text(14, top + plot_h / 2, unit, size=9, anchor="middle", rotate=-90)
    for i, (s, label) in enumerate(zip(stats, labels)):
        x = left + 14 + i * (box_w + 14)
        mid = x + box_w / 2
        c.line(mid, y_of(s.whisker_low), mid, y_of(s.q1))
        c.line(mid, y_of(s.q3), mid, y_of(s.whisker_high))
        c.line(x + 8, y_of(s.whisker_low), x + box_w - 8, y_of(s.whisker_low))
        c.line(x + 8, y_of(s.whisker_high), x + box_w - 8, y_of(s.whisker_high))
        c.rect(x, y_of(s.q3), box_w, max(y_of(s.q1) - y_of(s.q3), 0.5), "#aec7e8", "#1f77b4")
        c.line(x, y_of(s.median), x + box_w, y_of(s.median), stroke="#d62728", width=2)
        if s.n_outliers:
            c.text(mid, y_of(s.max) - 3, f"+{s.n_outliers}", size=7, anchor="middle")
        c.text(mid, bottom + 10, label, size=9, rotate=60)
    return c.render()


def line_chart(
    series: dict[str, Sequence[tuple[float, float]]],
    title: str,
    x_label: str = "",
    y_label: str = "",
) -> str:
    left, top, plot_w, plot_h = 60.0, 40.0, 640.0, 300.0
    pts = [p for s in series.values() for p in s]
    x_lo = min((p[0] for p in pts), default=0.0)
    x_hi = max((p[0] for p in pts), default=1.0)
    y_hi = max((p[1] for p in pts), default=1.0) or 1.0
    x_span = (x_hi - x_lo) or 1.0
    legend_h = 14.0 * len(series)
    c = Canvas(left + plot_w + 20, top + plot_h + 50 + legend_h, title)

    def xy(p: tuple[float, float]) -> tuple[float, float]:
        return left + plot_w * (p[0] - x_lo) / x_span, top + plot_h * (1 - p[1] / y_hi)

    c.line(left, top + plot_h, left + plot_w, top + plot_h)
    c.line(left, top, left, top + plot_h)
    for k in range(5):
        v = y_hi * k / 4
        c.text(left - 6, top + plot_h * (1 - k / 4) + 3, _num(v), size=8, anchor="end")
    c.text(left + plot_w / 2, top + plot_h + 30, x_label, size=9, anchor="middle")
    c.text(14, top + plot_h / 2, y_label, size=9, anchor="middle", rotate=-90)
    for i, (name, s) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        if s:
            c.polyline([xy(p) for p in s], color, width=1.0)
        ly = top + plot_h + 46 + 14 * i
        c.line(left, ly - 3, left + 16, ly - 3, stroke=color, width=2)
        c.text(left + 20, ly, name, size=9)
    return c.render()


def roc_chart(points: Sequence[tuple[float, float]], auc: float, title: str) -> str:
    left, top, size = 50.0, 40.0, 320.0
    c = Canvas(left + size + 20, top + size + 50, title)
    c.rect(left, top, size, size, "none", "#000")
    c.line(left, top + size, left + size, top, stroke="#999", dash="4 3")
    for k in range(5):
        v = k / 4
        c.text(left + size * v, top + size + 14, _num(v), size=8, anchor="middle")
        c.text(left - 6, top + size * (1 - v) + 3, _num(v), size=8, anchor="end")
    c.polyline([(left + size * f, top + size * (1 - t)) for f, t in points], PALETTE[3], width=2)
    c.text(left + size / 2, top + size + 32, "false positive rate", size=9, anchor="middle")
    c.text(14, top + size / 2, "true positive rate", size=9, anchor="middle", rotate=-90)
    c.text(left + size - 8, top + size - 10, f"AUC = {auc:.4f}", size=11, anchor="end")
    return c.render()
