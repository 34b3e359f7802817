import io
import json
import random
from datetime import date, datetime, timedelta

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alertcast.ingest import (
    AlertEvent,
    IngestError,
    RawEvent,
    StudyWindow,
    build_registry,
    events_from_json,
    events_to_json,
    events_to_records,
    normalize_events,
    parse_events,
    write_events_csv,
)

HEADER = "region,start,end\n"
ORIGIN = datetime(2022, 3, 25)


def test_default_window_minutes_match_calendar_count():
    # count days by stepping the calendar one day at a time
    day, n_days = date(2022, 3, 25), 0
    while day != date(2024, 11, 6):
        day += timedelta(days=1)
        n_days += 1
    assert n_days == 957
    assert StudyWindow().n_minutes == n_days * 1440 == 1_378_080


def test_parse_closed_interval():
    (rec,) = parse_events(HEADER + "Lvivska oblast,2022-03-25T00:10,2022-03-25T00:13\n")
    window = StudyWindow()
    assert rec.region == "Lvivska oblast"
    assert window.minute_of(rec.start) == 10
    assert window.minute_of(rec.end) == 13
    assert rec.line == 2


def test_parse_ongoing_alert_has_no_end():
    (rec,) = parse_events(HEADER + "Kyivska oblast,2022-03-25T00:00,\n")
    assert rec.end is None


def test_parse_bad_timestamp_reports_line():
    text = HEADER + "X,notatime,2022-03-25T00:05\n"
    with pytest.raises(IngestError, match="line 2") as err:
        parse_events(text)
    assert err.value.line == 2


def test_parse_error_line_counts_header_and_rows():
    text = HEADER + "A,2022-03-25T00:00,2022-03-25T00:05\nB,2022-03-25T00:00,bad\n"
    with pytest.raises(IngestError) as err:
        parse_events(text)
    assert err.value.line == 3


@pytest.mark.parametrize("header", ["region,start\n", "region,start,stop\n", "a,b,c,d\n", ""])
def test_parse_rejects_unknown_columns(header):
    with pytest.raises(IngestError, match="line 1"):
        parse_events(header + "A,2022-03-25T00:00,2022-03-25T00:05\n")


def test_parse_rejects_non_utf8_bytes():
    data = (HEADER + "A,2022-03-25T00:00,2022-03-25T00:05\n").encode() + b"\xff\xfe,2022,\n"
    with pytest.raises(IngestError, match="UTF-8") as err:
        parse_events(io.BytesIO(data))
    assert err.value.line == 3


def test_parse_accepts_reordered_columns_and_offsets():
    (rec,) = parse_events("end,region,start\n2022-03-25T00:13:59+02:00,A,2022-03-25T00:10Z\n")
    assert rec.start == datetime(2022, 3, 25, 0, 10)
    assert rec.end == datetime(2022, 3, 25, 0, 13)


def _rec(region, start, end):
    return RawEvent(region, ORIGIN + timedelta(minutes=start), None if end is None else ORIGIN + timedelta(minutes=end))


def test_normalize_merges_overlaps():
    registry, events = normalize_events([_rec("A", 10, 20), _rec("A", 15, 30)])
    assert registry.names == ("A",)
    assert events == [AlertEvent(0, 10, 30)]


def test_normalize_merges_touching_intervals():
    _, events = normalize_events([_rec("A", 10, 20), _rec("A", 20, 25)])
    assert events == [AlertEvent(0, 10, 25)]


def test_normalize_clips_ongoing_to_window_end():
    window = StudyWindow.days(1)
    _, events = normalize_events([_rec("A", 100, None)], window)
    assert events == [AlertEvent(0, 100, 1440)]


def test_normalize_drops_events_outside_window():
    window = StudyWindow(ORIGIN + timedelta(minutes=100), ORIGIN + timedelta(days=1))
    registry, events = normalize_events([_rec("A", 10, 50), _rec("B", 90, 130)], window)
    assert registry.names == ("B",)
    assert events == [AlertEvent(0, 0, 30)]


def test_normalize_drops_zero_length():
    registry, events = normalize_events([_rec("A", 5, 5), _rec("B", 1, 2)])
    assert registry.names == ("B",)


def test_normalize_rejects_reversed_interval():
    with pytest.raises(IngestError, match="ends before it starts"):
        normalize_events([RawEvent("A", ORIGIN + timedelta(minutes=9), ORIGIN, line=4)])


def test_normalize_flags_short_history():
    window = StudyWindow.days(10)
    registry, _ = normalize_events([_rec("Luhanska", 0, 60), _rec("Lvivska", 0, 60), _rec("Lvivska", 8 * 1440, 8 * 1440 + 5)], window)
    assert registry.partial == frozenset({"Luhanska"})


def test_build_registry_examples():
    assert build_registry(["B", "A", "B"]).names == ("A", "B")
    reg = build_registry(["Kharkivska oblast"])
    assert reg.index("Kharkivska oblast") == 0
    with pytest.raises(ValueError):
        build_registry([])


def test_json_round_trip():
    registry, events = normalize_events([_rec("B", 0, 4), _rec("A", 3, 9), _rec("A", 20, 22)])
    text = events_to_json(registry, events)
    assert json.loads(text)["events"] == [[0, 3, 9], [0, 20, 22], [1, 0, 4]]
    assert events_from_json(text) == (registry, events)


def test_csv_writer_round_trips():
    records = [_rec("A", 3, 9), _rec("B", 0, None)]
    buf = io.StringIO()
    write_events_csv(records, buf)
    parsed = parse_events(buf.getvalue())
    assert [(r.region, r.start, r.end) for r in parsed] == [(r.region, r.start, r.end) for r in records]


raw_intervals = st.lists(
    st.tuples(
        st.sampled_from(["Kyivska", "Lvivska", "Sumska"]),
        st.integers(-50, 1500),
        st.one_of(st.none(), st.integers(0, 300)),
    ),
    max_size=25,
)


def _clipped_minutes(items, n):
    out = set()
    for region, start, length in items:
        end = n if length is None else start + length
        out.update((region, m) for m in range(max(start, 0), min(end, n)))
    return out


@settings(max_examples=150, deadline=None)
@given(raw_intervals)
def test_normalize_preserves_minute_union_and_disjointness(items):
    window = StudyWindow.days(1)
    records = [_rec(r, s, None if length is None else s + length) for r, s, length in items]
    expected = _clipped_minutes(items, window.n_minutes)
    if not expected:
        with pytest.raises(IngestError):
            normalize_events(records, window)
        return
    registry, events = normalize_events(records, window)
    got = {(registry.names[ev.region], m) for ev in events for m in range(ev.start, ev.end)}
    assert got == expected
    assert events == sorted(events)
    for a, b in zip(events, events[1:]):
        if a.region == b.region:
            assert a.end < b.start  # disjoint and not touching
    # idempotent
    again = normalize_events(events_to_records(registry, events, window), window)
    assert again[1] == events and again[0].names == registry.names


@settings(max_examples=50, deadline=None)
@given(raw_intervals.filter(lambda x: any(length != 0 for _, _, length in x)), st.randoms())
def test_registry_independent_of_row_order(items, rnd):
    window = StudyWindow.days(1)
    records = [_rec(r, s, None if length is None else s + length) for r, s, length in items]
    if not _clipped_minutes(items, window.n_minutes):
        return
    shuffled = list(records)
    rnd.shuffle(shuffled)
    assert normalize_events(records, window) == normalize_events(shuffled, window)


def test_registry_stable_under_random_permutations():
    names = [f"R{i:02d}" for i in range(20)]
    expected = build_registry(names).names
    for seed in range(5):
        shuffled = list(names)
        random.Random(seed).shuffle(shuffled)
        assert build_registry(shuffled).names == expected
