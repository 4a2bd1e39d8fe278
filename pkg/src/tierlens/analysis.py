"""Aggregated performance views over an IOFrame.

All aggregations are pure functions of the frame. I/O time is the sum of
event durations (not the wall-clock span), which stays well defined when
events overlap across ranks; a span-based bandwidth is available behind
an explicit flag. Only read/write events carry payload into bandwidth
figures; metadata and unknown calls never do.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable, Iterable

from .events import Category, IOFrame, TraceEvent

_UNITS = ("B/s", "KiB/s", "MiB/s", "GiB/s", "TiB/s")


def humanize_rate(rate: float) -> str:
    """Render a bytes/second rate with the largest binary unit that keeps
    the mantissa at or above 1 (rates under 1 stay in B/s)."""
    if rate < 0:
        raise ValueError(f"rate must be non-negative, got {rate}")
    unit = 0
    scaled = rate
    while unit < len(_UNITS) - 1 and scaled >= 1024.0:
        scaled /= 1024.0
        unit += 1
    return f"{scaled:.2f} {_UNITS[unit]}"


def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True, slots=True)
class BandwidthRow:
    file: str
    rank: int | None  # None when grouped by file only
    bytes: int
    io_time: float
    bandwidth: float | None  # None when io_time is zero
    display: str


@dataclass(frozen=True)
class BandwidthTable:
    group_by: str  # "file_rank" or "file"
    rows: tuple[BandwidthRow, ...]

    _COLUMNS = ("file", "rank", "bytes", "io_time", "bandwidth", "display")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self._COLUMNS)
        for r in self.rows:
            w.writerow(
                [r.file, _fmt(r.rank), r.bytes, _fmt(r.io_time),
                 _fmt(r.bandwidth), r.display]
            )
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [f"{'file':<32} {'rank':>5} {'bytes':>14} {'io_time':>12}  bandwidth"]
        for r in self.rows:
            rank = "-" if r.rank is None else str(r.rank)
            lines.append(
                f"{r.file:<32} {rank:>5} {r.bytes:>14} {r.io_time:>12.6f}  {r.display}"
            )
        return "\n".join(lines)


@dataclass(frozen=True, slots=True)
class TimeRow:
    file: str
    rank: int
    read_time: float
    write_time: float
    metadata_time: float
    total_io_time: float
    metadata_fraction: float


@dataclass(frozen=True)
class TimeTable:
    rows: tuple[TimeRow, ...]

    _COLUMNS = (
        "file", "rank", "read_time", "write_time", "metadata_time",
        "total_io_time", "metadata_fraction",
    )

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self._COLUMNS)
        for r in self.rows:
            w.writerow(
                [r.file, r.rank, _fmt(r.read_time), _fmt(r.write_time),
                 _fmt(r.metadata_time), _fmt(r.total_io_time),
                 _fmt(r.metadata_fraction)]
            )
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [
            f"{'file':<32} {'rank':>5} {'read':>10} {'write':>10} "
            f"{'meta':>10} {'total':>10}  meta%"
        ]
        for r in self.rows:
            lines.append(
                f"{r.file:<32} {r.rank:>5} {r.read_time:>10.6f} "
                f"{r.write_time:>10.6f} {r.metadata_time:>10.6f} "
                f"{r.total_io_time:>10.6f}  {100.0 * r.metadata_fraction:.1f}%"
            )
        return "\n".join(lines)


@dataclass(frozen=True, slots=True)
class SharingRow:
    file: str
    num_ranks: int
    ranks: tuple[int, ...]


@dataclass(frozen=True)
class SharingReport:
    rows: tuple[SharingRow, ...]

    _COLUMNS = ("file", "num_ranks", "ranks")

    def num_ranks(self, file: str) -> int:
        for r in self.rows:
            if r.file == file:
                return r.num_ranks
        return 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self._COLUMNS)
        for r in self.rows:
            w.writerow([r.file, r.num_ranks, ";".join(map(str, r.ranks))])
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [f"{'file':<40} {'num_ranks':>9}  ranks"]
        for r in self.rows:
            lines.append(
                f"{r.file:<40} {r.num_ranks:>9}  {','.join(map(str, r.ranks))}"
            )
        return "\n".join(lines)


@dataclass(frozen=True, slots=True)
class TimelineSegment:
    rank: int
    function: str
    category: Category
    start: float
    end: float
    lane: int


FilterArgs = dict  # ranks/files/categories/predicate keyword bundle


def _filtered(frame: IOFrame, filters: dict | None) -> IOFrame:
    return frame if not filters else frame.filter(**filters)


def io_bandwidth(
    frame: IOFrame,
    group_by: str = "file_rank",
    *,
    ranks: Iterable[int] | None = None,
    files: Iterable[str] | None = None,
    categories: Iterable[Category] | None = None,
    predicate: Callable[[TraceEvent], bool] | None = None,
    wall_clock: bool = False,
) -> BandwidthTable:
    """Per-group I/O bandwidth: summed payload bytes over summed I/O time.

    ``group_by`` is "file_rank" or "file". Only read/write events
    contribute. With ``wall_clock=True`` the divisor is the group's
    first-start-to-last-end span instead of the summed durations; that
    variant is informational and never feeds labels or features.
    Groups whose time divisor is zero report an absent bandwidth.
    """
    if group_by not in ("file_rank", "file"):
        raise ValueError(f"unknown group_by {group_by!r}")
    sub = frame.filter(
        ranks=ranks, files=files, categories=categories, predicate=predicate
    )
    totals: dict[tuple, dict] = {}
    for ev in sub.events:
        if ev.category not in (Category.READ, Category.WRITE):
            continue
        key = (ev.file,) if group_by == "file" else (ev.file, ev.rank)
        acc = totals.get(key)
        if acc is None:
            acc = totals[key] = {
                "bytes": 0, "time": 0.0, "lo": ev.start, "hi": ev.end
            }
        acc["bytes"] += ev.bytes or 0
        acc["time"] += ev.end - ev.start
        acc["lo"] = min(acc["lo"], ev.start)
        acc["hi"] = max(acc["hi"], ev.end)
    rows = []
    for key in sorted(totals):
        acc = totals[key]
        io_time = (acc["hi"] - acc["lo"]) if wall_clock else acc["time"]
        bw = acc["bytes"] / io_time if io_time > 0 else None
        rows.append(
            BandwidthRow(
                file=key[0],
                rank=None if group_by == "file" else key[1],
                bytes=acc["bytes"],
                io_time=io_time,
                bandwidth=bw,
                display="-" if bw is None else humanize_rate(bw),
            )
        )
    return BandwidthTable(group_by=group_by, rows=tuple(rows))


def io_time(
    frame: IOFrame,
    *,
    ranks: Iterable[int] | None = None,
    files: Iterable[str] | None = None,
    categories: Iterable[Category] | None = None,
    predicate: Callable[[TraceEvent], bool] | None = None,
) -> TimeTable:
    """Per (file, rank) time split by category, with the metadata share.

    ``metadata_fraction`` is metadata time over total I/O time (not over
    application runtime, which a trace cannot witness). Events with
    category "other" are excluded so the split always sums to the total.
    """
    sub = frame.filter(
        ranks=ranks, files=files, categories=categories, predicate=predicate
    )
    totals: dict[tuple[str, int], list[float]] = {}
    for ev in sub.events:
        if ev.file is None or ev.category is Category.OTHER:
            continue
        key = (ev.file, ev.rank)
        acc = totals.setdefault(key, [0.0, 0.0, 0.0])
        if ev.category is Category.READ:
            acc[0] += ev.end - ev.start
        elif ev.category is Category.WRITE:
            acc[1] += ev.end - ev.start
        else:
            acc[2] += ev.end - ev.start
    rows = []
    for file, rank in sorted(totals):
        rt, wt, mt = totals[(file, rank)]
        total = rt + wt + mt
        rows.append(
            TimeRow(
                file=file,
                rank=rank,
                read_time=rt,
                write_time=wt,
                metadata_time=mt,
                total_io_time=total,
                metadata_fraction=(mt / total) if total > 0 else 0.0,
            )
        )
    return TimeTable(rows=tuple(rows))


def shared_files(frame: IOFrame) -> SharingReport:
    """For every file, which ranks touch it (any event counts)."""
    by_file: dict[str, set[int]] = {}
    for ev in frame.events:
        if ev.file is not None:
            by_file.setdefault(ev.file, set()).add(ev.rank)
    rows = [
        SharingRow(file=f, num_ranks=len(rs), ranks=tuple(sorted(rs)))
        for f, rs in sorted(by_file.items())
    ]
    return SharingReport(rows=tuple(rows))


def timeline_segments(
    frame: IOFrame,
    *,
    ranks: Iterable[int] | None = None,
    files: Iterable[str] | None = None,
    categories: Iterable[Category] | None = None,
    predicate: Callable[[TraceEvent], bool] | None = None,
) -> list[TimelineSegment]:
    """One segment per passing event, stacked into per-rank lanes.

    Lane assignment is greedy first-fit in frame order: an event takes
    the lowest lane whose previous occupant has already ended. The
    result is deterministic because the frame order is total.
    """
    sub = frame.filter(
        ranks=ranks, files=files, categories=categories, predicate=predicate
    )
    lane_ends: dict[int, list[float]] = {}
    segments: list[TimelineSegment] = []
    for ev in sub.events:
        ends = lane_ends.setdefault(ev.rank, [])
        lane = None
        for i, busy_until in enumerate(ends):
            if ev.start >= busy_until:
                lane = i
                break
        if lane is None:
            lane = len(ends)
            ends.append(ev.end)
        else:
            ends[lane] = ev.end
        segments.append(
            TimelineSegment(
                rank=ev.rank,
                function=ev.function,
                category=ev.category,
                start=ev.start,
                end=ev.end,
                lane=lane,
            )
        )
    return segments
