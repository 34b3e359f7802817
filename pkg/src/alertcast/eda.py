"""Event-level and per-day duration statistics."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import asdict, dataclass
from datetime import date
from typing import Sequence

import numpy as np

from alertcast.ingest import AlertEvent, StudyWindow
from alertcast.timegrid import StatusGrid

MINUTES_PER_DAY = 1440


@dataclass(frozen=True)
class BoxStats:
    """Tukey boxplot summary; quartiles interpolate linearly between order statistics."""

    min: float
    q1: float
    median: float
    q3: float
    max: float
    whisker_low: float
    whisker_high: float
    n_outliers: int
    n: int

    def as_dict(self) -> dict:
        return asdict(self)


def event_durations(events: Sequence[AlertEvent], n_regions: int) -> list[list[int]]:
    out: list[list[int]] = [[] for _ in range(n_regions)]
    for ev in events:
        out[ev.region].append(ev.end - ev.start)
    return out


def daily_median_durations(
    events: Sequence[AlertEvent], n_regions: int, window: StudyWindow
) -> list[list[tuple[date, float]]]:
    """Median event duration per region and calendar day of the event start.

    Days without any starting event are left out.
    """
    buckets: list[dict[date, list[int]]] = [defaultdict(list) for _ in range(n_regions)]
    for ev in events:
        day = window.stamp(ev.start).date()
        buckets[ev.region][day].append(ev.end - ev.start)
    return [
        [(day, float(np.median(durations))) for day, durations in sorted(per_day.items())]
        for per_day in buckets
    ]


def duration_boxstats(durations: Sequence[float]) -> BoxStats:
    values = np.sort(np.asarray(durations, dtype=np.float64))
    if values.size == 0:
        raise ValueError("boxplot statistics need at least one value")
    q1, median, q3 = np.quantile(values, [0.25, 0.5, 0.75], method="linear")
    iqr = q3 - q1
    low_fence, high_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = values[(values >= low_fence) & (values <= high_fence)]
    return BoxStats(
        min=float(values[0]),
        q1=float(q1),
        median=float(median),
        q3=float(q3),
        max=float(values[-1]),
        whisker_low=float(inside[0]),
        whisker_high=float(inside[-1]),
        n_outliers=int(values.size - inside.size),
        n=int(values.size),
    )


def day_boundaries(window: StudyWindow) -> tuple[list[date], np.ndarray]:
    """Calendar days touched by the window and the minute offset where each begins.

    The first day starts at minute 0 even when the window opens mid-day.
    """
    first = window.start.date()
    last = window.stamp(window.n_minutes - 1).date()
    days = [date.fromordinal(o) for o in range(first.toordinal(), last.toordinal() + 1)]
    offset = window.start.hour * 60 + window.start.minute
    starts = np.array([0] + [i * MINUTES_PER_DAY - offset for i in range(1, len(days))], dtype=np.int64)
    return days, starts


def daily_totals(grid: StatusGrid) -> tuple[list[date], np.ndarray]:
    """Alert minutes per calendar day, shape ``(n_days, n_regions)``; zero days kept."""
    days, starts = day_boundaries(grid.window)
    totals = np.zeros((len(days), grid.n_regions), dtype=np.int64)
    for r in range(grid.n_regions):
        col = grid.column(r).astype(np.int64)
        totals[:, r] = np.add.reduceat(col, starts)
    return days, totals


def daily_total_stats(grid: StatusGrid) -> list[BoxStats]:
    _, totals = daily_totals(grid)
    return [duration_boxstats(totals[:, r]) for r in range(grid.n_regions)]
