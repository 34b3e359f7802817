"""Parsing and normalization of raw alert-interval CSV records.

Input rows look like ``region,start,end`` with ISO-8601 timestamps at minute
precision. Timestamps are naive wall-clock values: any UTC offset is dropped
without conversion, and seconds are floored to the minute.
"""

from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import IO, Iterable, Sequence

DEFAULT_WINDOW_START = datetime(2022, 3, 25)
DEFAULT_WINDOW_END = datetime(2024, 11, 6)

CSV_COLUMNS = ("region", "start", "end")

# a region whose recorded history covers less than this share of the window is flagged
PARTIAL_HISTORY_SHARE = 0.5


class IngestError(ValueError):
    """Raised for malformed input rows or records violating the event contract."""

    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class StudyWindow:
    """Half-open time range ``[start, end)`` at minute resolution.

    Minute stamps throughout the package are integer offsets from ``start``.
    """

    start: datetime = DEFAULT_WINDOW_START
    end: datetime = DEFAULT_WINDOW_END

    def __post_init__(self) -> None:
        if self.start.tzinfo is not None or self.end.tzinfo is not None:
            raise ValueError("study window bounds must be naive datetimes")
        if self.start.second or self.start.microsecond or self.end.second or self.end.microsecond:
            raise ValueError("study window bounds must fall on whole minutes")
        if not self.start < self.end:
            raise ValueError(f"empty study window: {self.start} >= {self.end}")

    @property
    def n_minutes(self) -> int:
        return (self.end - self.start) // timedelta(minutes=1)

    def minute_of(self, ts: datetime) -> int:
        """Offset of ``ts`` from the window start in whole minutes (may be out of range)."""
        return (ts - self.start) // timedelta(minutes=1)

    def stamp(self, minute: int) -> datetime:
        return self.start + timedelta(minutes=int(minute))

    @classmethod
    def from_strings(cls, start: str, end: str) -> "StudyWindow":
        return cls(parse_timestamp(start), parse_timestamp(end))

    @classmethod
    def days(cls, n_days: int, start: datetime = DEFAULT_WINDOW_START) -> "StudyWindow":
        return cls(start, start + timedelta(days=n_days))


@dataclass(frozen=True)
class RegionRegistry:
    """Lexicographically ordered, duplicate-free region names.

    ``partial`` holds names whose recorded history is short relative to the
    study window; such regions still act as features.
    """

    names: tuple[str, ...]
    partial: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if list(self.names) != sorted(set(self.names)):
            raise ValueError("registry names must be unique and sorted")

    def __len__(self) -> int:
        return len(self.names)

    def __iter__(self):
        return iter(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown region {name!r}") from None

    def __contains__(self, name: object) -> bool:
        return name in self.names


@dataclass(frozen=True, order=True)
class AlertEvent:
    """One normalized alert interval ``[start, end)`` in window minutes."""

    region: int
    start: int
    end: int

    @property
    def duration(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class RawEvent:
    region: str
    start: datetime
    end: datetime | None
    line: int = 0


def parse_timestamp(text: str) -> datetime:
    text = text.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    return ts.replace(tzinfo=None, second=0, microsecond=0)


def parse_events(source: IO[str] | IO[bytes] | str) -> list[RawEvent]:
    """Read ``region,start,end`` rows from a text stream, byte stream or string.

    An empty ``end`` means the alert was still ongoing when the data was
    exported; it becomes ``None``. Errors carry the 1-based file line number
    (the header is line 1).
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    raw = source.read()
    if isinstance(raw, bytes):
        try:
            raw = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            line = raw[: exc.start].count(b"\n") + 1
            raise IngestError("input is not valid UTF-8", line) from None
    raw = raw.removeprefix("\ufeff")

    reader = csv.reader(io.StringIO(raw))
    header = next(reader, None)
    if header is None:
        raise IngestError("missing header row", 1)
    header = [h.strip() for h in header]
    if sorted(header) != sorted(CSV_COLUMNS) or len(header) != len(CSV_COLUMNS):
        raise IngestError(f"expected columns {','.join(CSV_COLUMNS)}, got {','.join(header)}", 1)
    pos = {name: header.index(name) for name in CSV_COLUMNS}

    records = []
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(CSV_COLUMNS):
            raise IngestError(f"expected {len(CSV_COLUMNS)} fields, got {len(row)}", line)
        region = row[pos["region"]].strip()
        if not region:
            raise IngestError("empty region name", line)
        try:
            start = parse_timestamp(row[pos["start"]])
            end_text = row[pos["end"]].strip()
            end = parse_timestamp(end_text) if end_text else None
        except ValueError as exc:
            raise IngestError(f"malformed timestamp ({exc})", line) from None
        records.append(RawEvent(region, start, end, line))
    return records


def build_registry(names: Iterable[str], partial: Iterable[str] = ()) -> RegionRegistry:
    names = sorted(set(names))
    if not names:
        raise ValueError("cannot build a registry from no region names")
    return RegionRegistry(tuple(names), frozenset(partial) & frozenset(names))


def _merge(intervals: list[tuple[int, int]]) -> list[tuple[int, int]]:
    merged: list[list[int]] = []
    for s, e in sorted(intervals):
        # touching intervals merge too: [a,b) + [b,c) -> [a,c)
        if merged and s <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], e)
        else:
            merged.append([s, e])
    return [(s, e) for s, e in merged]


def normalize_events(
    records: Sequence[RawEvent], window: StudyWindow = StudyWindow()
) -> tuple[RegionRegistry, list[AlertEvent]]:
    """Clip, merge and index raw records.

    Ongoing alerts end at the window end, intervals are clipped to the window,
    zero-length ones are dropped and same-region overlaps or touches are
    merged. Events come back sorted by ``(region, start)``.
    """
    n = window.n_minutes
    by_region: dict[str, list[tuple[int, int]]] = defaultdict(list)
    for rec in records:
        start = window.minute_of(rec.start)
        end = max(n, start) if rec.end is None else window.minute_of(rec.end)
        if end < start:
            where = f"region {rec.region!r} start {rec.start.isoformat()} end {rec.end.isoformat()}"
            raise IngestError(f"alert ends before it starts ({where})", rec.line or None)
        start, end = max(start, 0), min(end, n)
        if start < end:
            by_region[rec.region].append((start, end))

    if not by_region:
        raise IngestError("no alert intervals fall inside the study window")

    merged = {name: _merge(spans) for name, spans in by_region.items()}
    partial = [
        name
        for name, spans in merged.items()
        if spans[-1][1] - spans[0][0] < PARTIAL_HISTORY_SHARE * n
    ]
    registry = build_registry(merged, partial)
    events = [
        AlertEvent(idx, s, e)
        for idx, name in enumerate(registry.names)
        for s, e in merged[name]
    ]
    return registry, events


def events_to_records(
    registry: RegionRegistry, events: Iterable[AlertEvent], window: StudyWindow
) -> list[RawEvent]:
    return [
        RawEvent(registry.names[ev.region], window.stamp(ev.start), window.stamp(ev.end))
        for ev in events
    ]


def write_events_csv(records: Iterable[RawEvent], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in records:
        end = "" if rec.end is None else rec.end.strftime("%Y-%m-%dT%H:%M")
        writer.writerow([rec.region, rec.start.strftime("%Y-%m-%dT%H:%M"), end])


def events_to_json(registry: RegionRegistry, events: Iterable[AlertEvent]) -> str:
    payload = {
        "regions": list(registry.names),
        "partial": sorted(registry.partial),
        "events": [[ev.region, ev.start, ev.end] for ev in events],
    }
    return json.dumps(payload, separators=(",", ":"))


def events_from_json(text: str) -> tuple[RegionRegistry, list[AlertEvent]]:
    payload = json.loads(text)
    registry = build_registry(payload["regions"], payload.get("partial", ()))
    if list(registry.names) != payload["regions"]:
        raise IngestError("region list in JSON is not sorted and unique")
    events = [AlertEvent(int(r), int(s), int(e)) for r, s, e in payload["events"]]
    return registry, events
