import io
from datetime import datetime, timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alertcast.features import (
    CALENDAR_COLUMNS,
    CalendarFeatures,
    assemble_dataset,
    calendar_columns,
    calendar_features,
    cumulative_duration_series,
    label_target,
)
from alertcast.ingest import AlertEvent, StudyWindow, build_registry
from alertcast.timegrid import StatusGrid, rasterize


def counter_oracle(status):
    out, run = [], 0
    for s in status:
        run = run + 1 if s else 0
        out.append(run)
    return out


def test_cumulative_examples():
    assert cumulative_duration_series(np.array([0, 1, 1, 1, 0, 1])).tolist() == [0, 1, 2, 3, 0, 1]
    assert cumulative_duration_series(np.zeros(7, dtype=int)).tolist() == [0] * 7
    assert cumulative_duration_series(np.array([1, 1])).tolist() == [1, 2]
    assert cumulative_duration_series(np.array([], dtype=int)).tolist() == []


def test_cumulative_rejects_non_binary():
    with pytest.raises(ValueError):
        cumulative_duration_series(np.array([0, 2]))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 1), max_size=300))
def test_cumulative_matches_counter(status):
    got = cumulative_duration_series(np.array(status, dtype=np.uint8))
    assert got.tolist() == counter_oracle(status)
    assert ((got > 0) == (np.array(status) == 1)).all()


def test_calendar_examples():
    assert calendar_features(0) == CalendarFeatures(month=3, day_of_week=4, hour=0, ndays=0)
    assert calendar_features(1440).ndays == 1 and calendar_features(1440).hour == 0
    assert calendar_features(1439) == CalendarFeatures(3, 4, 23, 0)
    with pytest.raises(ValueError):
        calendar_features(StudyWindow().n_minutes)
    with pytest.raises(ValueError):
        calendar_features(-1)


def test_vectorized_calendar_matches_datetime(rng):
    window = StudyWindow()
    minutes = np.concatenate([rng.integers(0, window.n_minutes, 2000), [0, window.n_minutes - 1]])
    cols = calendar_columns(minutes, window)
    for m, row in zip(minutes.tolist(), cols.tolist()):
        ts = window.start + timedelta(minutes=m)
        assert row == [ts.month, ts.weekday(), ts.hour, m // 1440]


def test_calendar_for_window_starting_mid_day():
    start = datetime(2023, 12, 31, 23, 30)
    window = StudyWindow(start, start + timedelta(days=1))
    row = calendar_columns(np.array([45]), window)[0].tolist()
    assert row == [1, 0, 0, 0]  # 2024-01-01 00:15 was a Monday


def test_label_target_examples():
    assert label_target(np.array([0, 0, 1, 1, 0]), 2).tolist() == [1, 1, 0]
    assert label_target(np.ones(9, dtype=int), 4).tolist() == [1] * 5
    with pytest.raises(ValueError):
        label_target(np.array([0, 1, 0]), 3)
    with pytest.raises(ValueError):
        label_target(np.array([0, 1, 0]), 0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=2, max_size=200), st.integers(1, 30))
def test_label_target_shift_and_window_oracles(status, horizon):
    if horizon >= len(status):
        return
    arr = np.array(status)
    assert label_target(arr, horizon).tolist() == [status[t + horizon] for t in range(len(status) - horizon)]
    within = label_target(arr, horizon, mode="within").tolist()
    assert within == [int(any(status[t + 1 : t + horizon + 1])) for t in range(len(status) - horizon)]


def grid_from_events(events, names, minutes):
    start = datetime(2022, 3, 25)
    return rasterize(events, build_registry(names), StudyWindow(start, start + timedelta(minutes=minutes)))


def test_assemble_shapes():
    grid = grid_from_events([AlertEvent(0, 2, 4)], ["A", "B"], 10)
    fm = assemble_dataset(grid, 0, 5)
    assert fm.X.shape == (5, 6) and fm.target.shape == (5,)
    assert fm.column_names == ("A", "B", *CALENDAR_COLUMNS)
    assert fm.row_stamp.tolist() == [0, 1, 2, 3, 4]
    assert len(assemble_dataset(grid, 0, 5, stride=5)) == 1


def test_assemble_planted_target():
    grid = grid_from_events([AlertEvent(0, 6, 10)], ["A"], 20)
    fm = assemble_dataset(grid, 0, 5)
    assert fm.target[1] == 1
    assert fm.target[0] == 0
    assert fm.X[7, 0] == 2


def test_assemble_errors():
    grid = grid_from_events([AlertEvent(0, 6, 10)], ["A"], 20)
    with pytest.raises(ValueError):
        assemble_dataset(grid, 0, 20)
    with pytest.raises(IndexError):
        assemble_dataset(grid, 1, 5)
    with pytest.raises(ValueError):
        assemble_dataset(grid, 0, 5, stride=0)


def random_grid(rng, minutes, k):
    bits = np.zeros((minutes, k), dtype=np.uint8)
    for r in range(k):
        for _ in range(8):
            s = int(rng.integers(0, minutes))
            bits[s : s + int(rng.integers(1, 60)), r] = 1
    start = datetime(2022, 6, 30, 20, 0)
    return bits, StatusGrid.from_dense(bits, build_registry([f"R{i}" for i in range(k)]), StudyWindow(start, start + timedelta(minutes=minutes)))


def test_assemble_invariants(rng):
    bits, grid = random_grid(rng, 800, 3)
    fm = assemble_dataset(grid, 1, 5)
    k = grid.n_regions
    assert ((fm.X[:, :k] > 0) == (bits[fm.row_stamp] == 1)).all()
    for r in range(k):
        col, on = fm.X[:, r], bits[: len(fm), r]
        both = (on[1:] == 1) & (on[:-1] == 1)
        assert (col[1:][both] - col[:-1][both] == 1).all()
    # rows where the target region is quiet: label 1 iff an interval covers t + H
    quiet = bits[fm.row_stamp, 1] == 0
    for t, y in zip(fm.row_stamp[quiet], fm.target[quiet]):
        assert y == bits[t + 5, 1]


@pytest.mark.parametrize("stride", [2, 3, 7])
def test_stride_equals_downsampling(rng, stride):
    _, grid = random_grid(rng, 500, 2)
    full = assemble_dataset(grid, 0, 15)
    sparse = assemble_dataset(grid, 0, 15, stride=stride)
    assert np.array_equal(sparse.X, full.X[::stride])
    assert np.array_equal(sparse.target, full.target[::stride])
    assert np.array_equal(sparse.row_stamp, full.row_stamp[::stride])


def test_feature_matrix_csv():
    grid = grid_from_events([AlertEvent(0, 1, 3)], ["A"], 4)
    fm = assemble_dataset(grid, 0, 1)
    buf = io.StringIO()
    fm.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "A,month,day_of_week,hour,ndays,target"
    assert lines[1:] == ["0,3,4,0,0,1", "1,3,4,0,0,1", "2,3,4,0,0,0"]
