"""Trace event model and the immutable IOFrame container.

An IOFrame is the substrate for every analysis in this package: a totally
ordered, indexed, read-only table of traced I/O function calls. Filters
return new frames; nothing mutates a frame after construction, so frames
are safe to share across threads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from types import MappingProxyType
from typing import Callable, Iterable, Sequence


class Category(str, enum.Enum):
    """Coarse kind of a traced call."""

    METADATA = "metadata"
    READ = "read"
    WRITE = "write"
    OTHER = "other"


class Interface(str, enum.Enum):
    """I/O library the traced call belongs to."""

    POSIX = "POSIX"
    MPIIO = "MPIIO"
    HDF5 = "HDF5"
    OTHER = "OTHER"


class FrameInvariantError(ValueError):
    """An event set violates the IOFrame construction invariants."""


@dataclass(frozen=True, slots=True)
class TraceEvent:
    """One recorded I/O function call.

    Times are decimal seconds relative to the trace epoch. ``file``,
    ``bytes`` and ``offset`` are None for calls where they do not apply
    (e.g. a barrier, or a metadata call that moves no payload).
    """

    event_id: int
    rank: int
    node: int
    function: str
    category: Category
    interface: Interface
    file: str | None
    start: float
    end: float
    bytes: int | None = None
    offset: int | None = None

    @property
    def duration(self) -> float:
        return self.end - self.start


def _check_event(ev: TraceEvent) -> None:
    if ev.end < ev.start:
        raise FrameInvariantError(
            f"event {ev.event_id}: end {ev.end} precedes start {ev.start}"
        )
    if ev.category in (Category.READ, Category.WRITE):
        if ev.bytes is None:
            raise FrameInvariantError(
                f"event {ev.event_id}: {ev.category.value} event lacks a byte count"
            )
        if ev.file is None:
            raise FrameInvariantError(
                f"event {ev.event_id}: {ev.category.value} event lacks a file"
            )
    if ev.bytes is not None and ev.bytes < 0:
        raise FrameInvariantError(f"event {ev.event_id}: negative byte count")
    if ev.offset is not None and ev.offset < 0:
        raise FrameInvariantError(f"event {ev.event_id}: negative offset")
    if ev.rank < 0 or ev.node < 0 or ev.event_id < 0:
        raise FrameInvariantError(f"event {ev.event_id}: negative identifier field")


class IOFrame:
    """Immutable, sorted, indexed table of TraceEvents.

    Events are held sorted by (rank, start, event_id); that order is total
    because event ids are unique. ``file_index`` and ``rank_index`` map a
    file path / rank to the positions of its events in :attr:`events`.
    """

    __slots__ = ("_events", "_file_index", "_rank_index", "_epoch_span")

    def __init__(self, events: Sequence[TraceEvent], *, _presorted: bool = False):
        evs = tuple(events) if _presorted else _validate_and_sort(events)
        file_index: dict[str, list[int]] = {}
        rank_index: dict[int, list[int]] = {}
        for pos, ev in enumerate(evs):
            if ev.file is not None:
                file_index.setdefault(ev.file, []).append(pos)
            rank_index.setdefault(ev.rank, []).append(pos)
        self._events = evs
        self._file_index = MappingProxyType(
            {k: tuple(v) for k, v in file_index.items()}
        )
        self._rank_index = MappingProxyType(
            {k: tuple(v) for k, v in rank_index.items()}
        )
        if evs:
            self._epoch_span = (min(e.start for e in evs), max(e.end for e in evs))
        else:
            self._epoch_span = (0.0, 0.0)

    @property
    def events(self) -> tuple[TraceEvent, ...]:
        return self._events

    @property
    def file_index(self):
        return self._file_index

    @property
    def rank_index(self):
        return self._rank_index

    @property
    def epoch_span(self) -> tuple[float, float]:
        return self._epoch_span

    def __len__(self) -> int:
        return len(self._events)

    def __iter__(self):
        return iter(self._events)

    def files(self) -> list[str]:
        """All file paths in the frame, sorted."""
        return sorted(self._file_index)

    def ranks(self) -> list[int]:
        """All ranks in the frame, sorted."""
        return sorted(self._rank_index)

    def events_for_file(self, file: str) -> list[TraceEvent]:
        return [self._events[p] for p in self._file_index.get(file, ())]

    def filter(
        self,
        ranks: Iterable[int] | None = None,
        files: Iterable[str] | None = None,
        categories: Iterable[Category] | None = None,
        predicate: Callable[[TraceEvent], bool] | None = None,
    ) -> "IOFrame":
        """New frame with exactly the events passing every given criterion.

        Criteria combine as a conjunction; None means "no constraint".
        The receiver is left untouched.
        """
        rank_set = None if ranks is None else set(ranks)
        file_set = None if files is None else set(files)
        cat_set = None if categories is None else {Category(c) for c in categories}
        kept = [
            ev
            for ev in self._events
            if (rank_set is None or ev.rank in rank_set)
            and (file_set is None or ev.file in file_set)
            and (cat_set is None or ev.category in cat_set)
            and (predicate is None or predicate(ev))
        ]
        # Already sorted: filtering preserves the total order.
        return IOFrame(kept, _presorted=True)


def _validate_and_sort(events: Sequence[TraceEvent]) -> tuple[TraceEvent, ...]:
    seen: set[int] = set()
    for ev in events:
        _check_event(ev)
        if ev.event_id in seen:
            raise FrameInvariantError(f"duplicate event_id {ev.event_id}")
        seen.add(ev.event_id)
    return tuple(sorted(events, key=lambda e: (e.rank, e.start, e.event_id)))


def build_ioframe(events: Sequence[TraceEvent]) -> IOFrame:
    """Validate events and build the sorted, indexed frame.

    Input order is irrelevant to the result. Raises FrameInvariantError
    naming the offending event on any invariant violation.
    """
    return IOFrame(events)


@dataclass(frozen=True, slots=True)
class OpenCloseSession:
    """One open-to-close span of a file by a rank.

    ``open_event`` is None for a synthetic session: reads, writes or a
    close observed before any open are attributed to a session that spans
    from the start of the trace (truncated traces produce these).
    ``close_event`` is None when the trace ends before the file is closed.
    """

    file: str
    rank: int
    open_event: int | None
    close_event: int | None
    reads: int
    writes: int
    bytes_read: int
    bytes_written: int


def sessions(
    frame: IOFrame,
    file: str,
    rank: int,
    warnings: list[str] | None = None,
) -> list[OpenCloseSession]:
    """Reconstruct open-close sessions of ``file`` on ``rank``.

    An open-family metadata event begins a session and the next
    close-family event on the same (file, rank) ends it. Read/write
    events in between are attributed to the session. Orphan activity
    (a close or payload I/O with no preceding open) lands in a synthetic
    session and appends a note to ``warnings`` when a list is given.
    """
    from .iofunctions import function_family

    out: list[OpenCloseSession] = []
    cur: dict | None = None

    def _flush(close_event: int | None) -> None:
        nonlocal cur
        if cur is not None:
            out.append(
                OpenCloseSession(
                    file=file,
                    rank=rank,
                    open_event=cur["open"],
                    close_event=close_event,
                    reads=cur["reads"],
                    writes=cur["writes"],
                    bytes_read=cur["br"],
                    bytes_written=cur["bw"],
                )
            )
            cur = None

    def _warn(msg: str) -> None:
        if warnings is not None:
            warnings.append(msg)

    for pos in frame.file_index.get(file, ()):
        ev = frame.events[pos]
        if ev.rank != rank:
            continue
        family = function_family(ev.function)
        if ev.category is Category.METADATA and family == "open":
            if cur is not None:
                # Re-open without a close: end the previous session
                # unterminated so sessions stay time-disjoint.
                _warn(f"event {ev.event_id}: open while a session is active")
                _flush(None)
            cur = {"open": ev.event_id, "reads": 0, "writes": 0, "br": 0, "bw": 0}
        elif ev.category is Category.METADATA and family == "close":
            if cur is None:
                _warn(
                    f"event {ev.event_id}: close without open; "
                    "attributed to a synthetic session from trace start"
                )
                cur = {"open": None, "reads": 0, "writes": 0, "br": 0, "bw": 0}
            _flush(ev.event_id)
        elif ev.category is Category.READ:
            if cur is None:
                _warn(
                    f"event {ev.event_id}: read outside any session; "
                    "attributed to a synthetic session from trace start"
                )
                cur = {"open": None, "reads": 0, "writes": 0, "br": 0, "bw": 0}
            cur["reads"] += 1
            cur["br"] += ev.bytes or 0
        elif ev.category is Category.WRITE:
            if cur is None:
                _warn(
                    f"event {ev.event_id}: write outside any session; "
                    "attributed to a synthetic session from trace start"
                )
                cur = {"open": None, "reads": 0, "writes": 0, "br": 0, "bw": 0}
            cur["writes"] += 1
            cur["bw"] += ev.bytes or 0
    _flush(None)
    return out
