"""Minute-resolution alert status grid and the statistics computed on it.

The grid stores one bit per (minute, region), packed column-wise so that each
region's series is a contiguous byte run. Bits are little-endian within a
byte: minute ``m`` lives in byte ``m // 8`` at bit ``m % 8``.

Binary dump layout (all integers little-endian)::

    magic      8 bytes   b"ALRTGRID"
    version    uint16    1
    reserved   uint16    0
    n_minutes  uint64
    n_regions  uint32
    meta_len   uint32
    meta       meta_len bytes of UTF-8 JSON:
               {"start": iso, "end": iso, "regions": [...], "partial": [...]}
    bits       n_regions * ceil(n_minutes / 8) bytes, region-major
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

from alertcast.ingest import AlertEvent, RegionRegistry, StudyWindow, build_registry, parse_timestamp

GRID_MAGIC = b"ALRTGRID"
GRID_VERSION = 1
_HEADER = struct.Struct("<8sHHQII")


@dataclass(frozen=True, eq=False)
class StatusGrid:
    window: StudyWindow
    regions: RegionRegistry
    packed: np.ndarray  # uint8, shape (n_regions, ceil(n_minutes / 8))

    def __post_init__(self) -> None:
        expected = (len(self.regions), (self.n_minutes + 7) // 8)
        if self.packed.shape != expected or self.packed.dtype != np.uint8:
            raise ValueError(f"packed bits must be uint8 {expected}, got {self.packed.dtype} {self.packed.shape}")
        self.packed.setflags(write=False)

    @property
    def n_minutes(self) -> int:
        return self.window.n_minutes

    @property
    def n_regions(self) -> int:
        return len(self.regions)

    def column(self, region: int) -> np.ndarray:
        """Status series of one region as a ``uint8`` array of 0/1."""
        bits = np.unpackbits(self.packed[region], count=self.n_minutes, bitorder="little")
        return bits

    def dense(self) -> np.ndarray:
        """Full ``(n_minutes, n_regions)`` 0/1 matrix; 1.4M x 25 is ~35 MB."""
        bits = np.unpackbits(self.packed, axis=1, count=self.n_minutes, bitorder="little")
        return np.ascontiguousarray(bits.T)

    def cell(self, minute: int, region: int) -> int:
        return int(self.packed[region, minute >> 3] >> (minute & 7) & 1)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StatusGrid):
            return NotImplemented
        return (
            self.window == other.window
            and self.regions.names == other.regions.names
            and np.array_equal(self.packed, other.packed)
        )

    @classmethod
    def from_dense(cls, bits: np.ndarray, regions: RegionRegistry, window: StudyWindow) -> "StatusGrid":
        bits = np.asarray(bits)
        if bits.shape != (window.n_minutes, len(regions)):
            raise ValueError(f"dense grid shape {bits.shape} does not match window and registry")
        if bits.size and not np.isin(bits, (0, 1)).all():
            raise ValueError("grid cells must be 0 or 1")
        packed = np.packbits(bits.astype(bool).T, axis=1, bitorder="little")
        return cls(window, regions, packed.reshape(len(regions), -1))


def rasterize(events: Sequence[AlertEvent], registry: RegionRegistry, window: StudyWindow) -> StatusGrid:
    """Set cell (m, r) for every minute ``start <= m < end`` of each event of region r."""
    n = window.n_minutes
    n_regions = len(registry)
    if events:
        arr = np.array([(ev.region, ev.start, ev.end) for ev in events], dtype=np.int64)
    else:
        arr = np.empty((0, 3), dtype=np.int64)
    region, start, end = arr.T
    bad = (region < 0) | (region >= n_regions) | (start < 0) | (end > n) | (start >= end)
    if bad.any():
        ev = events[int(np.argmax(bad))]
        raise AssertionError(f"event {ev} is not normalized to the window/registry")

    packed = np.zeros((n_regions, (n + 7) // 8), dtype=np.uint8)
    for r in range(n_regions):
        mine = region == r
        # difference array; a positive running sum marks covered minutes
        diff = np.zeros(n + 1, dtype=np.int32)
        np.add.at(diff, start[mine], 1)
        np.add.at(diff, end[mine], -1)
        packed[r] = np.packbits(np.cumsum(diff[:n]) > 0, bitorder="little")
    return StatusGrid(window, registry, packed)


def total_alert_minutes(grid: StatusGrid) -> np.ndarray:
    return np.bitwise_count(grid.packed).sum(axis=1, dtype=np.int64)


def cooccurrence_minutes(grid: StatusGrid, ref: int) -> np.ndarray:
    """Minutes during which each region and region ``ref`` are both on alert."""
    if not 0 <= ref < grid.n_regions:
        raise IndexError(f"reference region {ref} out of range for {grid.n_regions} regions")
    return np.bitwise_count(grid.packed & grid.packed[ref]).sum(axis=1, dtype=np.int64)


def both_on_counts(grid: StatusGrid) -> np.ndarray:
    """Symmetric matrix of joint alert minutes for every region pair."""
    k = grid.n_regions
    out = np.zeros((k, k), dtype=np.int64)
    for i in range(k):
        out[i] = cooccurrence_minutes(grid, i)
    return out


def binary_correlation_matrix(grid: StatusGrid) -> np.ndarray:
    """Phi coefficient (Pearson on 0/1 series) between every pair of regions.

    Pairs involving a constant column are NaN.
    """
    n = grid.n_minutes
    n11 = both_on_counts(grid).astype(np.float64)
    ones = np.diag(n11).copy()
    # integer-valued terms stay exact in float64 up to 2**53
    cov = n * n11 - np.outer(ones, ones)
    spread = np.sqrt(ones * (n - ones))
    with np.errstate(divide="ignore", invalid="ignore"):
        corr = cov / np.outer(spread, spread)
    # sqrt rounding can leave the diagonal a few ulps off one
    np.fill_diagonal(corr, 1.0)
    constant = spread == 0
    corr[constant, :] = np.nan
    corr[:, constant] = np.nan
    corr = np.clip(corr, -1.0, 1.0)
    return corr


def write_grid_csv(grid: StatusGrid, stream: IO[str], chunk: int = 1 << 16) -> None:
    stream.write(",".join(_csv_cell(name) for name in grid.regions.names) + "\n")
    dense = grid.dense()
    for lo in range(0, grid.n_minutes, chunk):
        rows = dense[lo : lo + chunk].astype("U1")
        stream.write("".join(",".join(r) + "\n" for r in rows))


def _csv_cell(text: str) -> str:
    if any(c in text for c in ',"\n'):
        return '"' + text.replace('"', '""') + '"'
    return text


def dump_grid(grid: StatusGrid, stream: IO[bytes]) -> None:
    meta = json.dumps(
        {
            "start": grid.window.start.isoformat(),
            "end": grid.window.end.isoformat(),
            "regions": list(grid.regions.names),
            "partial": sorted(grid.regions.partial),
        },
        separators=(",", ":"),
    ).encode("utf-8")
    stream.write(_HEADER.pack(GRID_MAGIC, GRID_VERSION, 0, grid.n_minutes, grid.n_regions, len(meta)))
    stream.write(meta)
    stream.write(grid.packed.tobytes())


def load_grid(stream: IO[bytes]) -> StatusGrid:
    head = stream.read(_HEADER.size)
    if len(head) != _HEADER.size:
        raise ValueError("truncated grid header")
    magic, version, _, n_minutes, n_regions, meta_len = _HEADER.unpack(head)
    if magic != GRID_MAGIC:
        raise ValueError("not an alert grid dump (bad magic)")
    if version != GRID_VERSION:
        raise ValueError(f"unsupported grid dump version {version}")
    meta = json.loads(stream.read(meta_len).decode("utf-8"))
    window = StudyWindow(parse_timestamp(meta["start"]), parse_timestamp(meta["end"]))
    if window.n_minutes != n_minutes or len(meta["regions"]) != n_regions:
        raise ValueError("grid dump header disagrees with its metadata")
    registry = build_registry(meta["regions"], meta.get("partial", ()))
    row_bytes = (n_minutes + 7) // 8
    body = stream.read(n_regions * row_bytes)
    if len(body) != n_regions * row_bytes:
        raise ValueError("truncated grid bit payload")
    packed = np.frombuffer(body, dtype=np.uint8).reshape(n_regions, row_bytes).copy()
    return StatusGrid(window, registry, packed)


def grid_to_bytes(grid: StatusGrid) -> bytes:
    buf = io.BytesIO()
    dump_grid(grid, buf)
    return buf.getvalue()
