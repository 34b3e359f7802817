"""Model dataset construction: running alert durations, calendar fields, horizon labels."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime
from typing import IO

import numpy as np

from alertcast.ingest import StudyWindow
from alertcast.timegrid import StatusGrid

CALENDAR_COLUMNS = ("month", "day_of_week", "hour", "ndays")
TARGET_MODES = ("at", "within")
_EPOCH = datetime(1970, 1, 1)


@dataclass(frozen=True)
class CalendarFeatures:
    month: int
    day_of_week: int  # Monday = 0
    hour: int
    ndays: int


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Per-minute feature rows with a binary horizon target.

    ``X`` holds the running alert duration of every region (registry order)
    followed by the calendar columns; all values are integers.
    """

    X: np.ndarray  # int32, (n_rows, n_columns)
    target: np.ndarray  # uint8, (n_rows,)
    row_stamp: np.ndarray  # int64 minute offsets, (n_rows,)
    column_names: tuple[str, ...]
    window: StudyWindow
    target_region: str = ""
    horizon: int = 0

    def __post_init__(self) -> None:
        n = len(self.row_stamp)
        if self.X.shape != (n, len(self.column_names)) or self.target.shape != (n,):
            raise ValueError("feature matrix parts disagree in shape")

    def __len__(self) -> int:
        return len(self.row_stamp)

    def take(self, rows: np.ndarray) -> "FeatureMatrix":
        return FeatureMatrix(
            self.X[rows],
            self.target[rows],
            self.row_stamp[rows],
            self.column_names,
            self.window,
            self.target_region,
            self.horizon,
        )

    def write_csv(self, stream: IO[str]) -> None:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow([*self.column_names, "target"])
        for row, y in zip(self.X.tolist(), self.target.tolist()):
            writer.writerow([*row, y])


def cumulative_duration_series(status: np.ndarray) -> np.ndarray:
    """Minutes the current alert has lasted, counting the current minute; 0 when off.

    >>> cumulative_duration_series(np.array([0, 1, 1, 1, 0, 1])).tolist()
    [0, 1, 2, 3, 0, 1]
    """
    status = np.asarray(status)
    if status.size and not np.isin(status, (0, 1)).all():
        raise ValueError("status series must be 0/1")
    idx = np.arange(status.size, dtype=np.int64)
    last_off = np.maximum.accumulate(np.where(status == 0, idx, -1)) if status.size else idx
    return np.where(status == 1, idx - last_off, 0)


def _epoch_minutes(window: StudyWindow) -> int:
    return (window.start - _EPOCH).days * 1440 + (window.start - _EPOCH).seconds // 60


def calendar_columns(minutes: np.ndarray, window: StudyWindow) -> np.ndarray:
    """Vectorized month, day-of-week, hour and ndays for window minute offsets."""
    minutes = np.asarray(minutes, dtype=np.int64)
    absolute = minutes + _epoch_minutes(window)
    epoch_days = absolute // 1440
    month = epoch_days.astype("datetime64[D]").astype("datetime64[M]").astype(np.int64) % 12 + 1
    day_of_week = (epoch_days + 3) % 7  # 1970-01-01 was a Thursday
    hour = absolute % 1440 // 60
    ndays = minutes // 1440
    return np.stack([month, day_of_week, hour, ndays], axis=1)


def calendar_features(minute: int, window: StudyWindow = StudyWindow()) -> CalendarFeatures:
    if not 0 <= minute < window.n_minutes:
        raise ValueError(f"minute {minute} lies outside the study window")
    ts = window.stamp(minute)
    return CalendarFeatures(ts.month, ts.weekday(), ts.hour, minute // 1440)


def label_target(status: np.ndarray, horizon: int, mode: str = "at") -> np.ndarray:
    """Binary labels for rows ``t = 0 .. len - horizon - 1``.

    ``mode="at"`` labels the status exactly ``horizon`` minutes ahead;
    ``mode="within"`` labels 1 if any minute in ``(t, t + horizon]`` is on alert.
    """
    status = np.asarray(status).astype(np.uint8)
    if horizon < 1:
        raise ValueError("horizon must be at least one minute")
    if horizon >= status.size:
        raise ValueError(f"horizon {horizon} leaves no rows in a series of {status.size} minutes")
    if mode == "at":
        return status[horizon:].copy()
    if mode == "within":
        csum = np.concatenate([[0], np.cumsum(status, dtype=np.int64)])
        t = np.arange(status.size - horizon)
        return (csum[t + horizon + 1] - csum[t + 1] > 0).astype(np.uint8)
    raise ValueError(f"unknown target mode {mode!r}; expected one of {TARGET_MODES}")


def assemble_dataset(
    grid: StatusGrid,
    target_region: int,
    horizon: int,
    stride: int = 1,
    target_mode: str = "at",
) -> FeatureMatrix:
    """Rows at minutes ``0, stride, 2*stride, ...`` up to ``n_minutes - horizon - 1``."""
    if not 0 <= target_region < grid.n_regions:
        raise IndexError(f"target region {target_region} out of range")
    if stride < 1:
        raise ValueError("stride must be at least 1")
    n = grid.n_minutes
    if horizon >= n:
        raise ValueError(f"window of {n} minutes is too short for horizon {horizon}")
    rows = np.arange(0, n - horizon, stride, dtype=np.int64)

    X = np.empty((rows.size, grid.n_regions + len(CALENDAR_COLUMNS)), dtype=np.int32)
    for r in range(grid.n_regions):
        X[:, r] = cumulative_duration_series(grid.column(r))[rows]
    X[:, grid.n_regions :] = calendar_columns(rows, grid.window)
    target = label_target(grid.column(target_region), horizon, target_mode)[rows]

    return FeatureMatrix(
        X=X,
        target=target,
        row_stamp=rows,
        column_names=(*grid.regions.names, *CALENDAR_COLUMNS),
        window=grid.window,
        target_region=grid.regions.names[target_region],
        horizon=horizon,
    )
