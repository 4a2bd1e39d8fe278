"""Per-file I/O characteristics and their deterministic numeric encoding.

Access-pattern transitions follow the usual trace-analysis conventions:
an access that starts exactly where the previous one ended is
*consecutive*, a forward jump is *sequential*, and anything that moves
backward or overlaps is *random*. Reuse volumes are computed per byte,
so overlapping accesses are attributed exactly and the result can be
checked against a brute-force byte map.
"""

from __future__ import annotations

import bisect
import enum
import posixpath
from dataclasses import dataclass, replace

from .events import Category, IOFrame, Interface, TraceEvent, sessions
from .iofunctions import function_family, is_collective


class IOType(str, enum.Enum):
    """Dominant read/write reuse class of a file.

    RO/WO are single-pass files (no byte re-accessed); files that revisit
    bytes take the class with the largest reuse volume. MIXED covers
    files with both reads and writes but no byte reuse at all.
    """

    RO = "RO"
    WO = "WO"
    RAR = "RAR"
    RAW = "RAW"
    WAR = "WAR"
    WAW = "WAW"
    MIXED = "MIXED"


class SchemaError(ValueError):
    """A feature value cannot be encoded under the schema."""


@dataclass(frozen=True, slots=True)
class AccessPatternCounts:
    consecutive: int
    sequential: int
    random: int
    skipped: int = 0  # read/write events without an offset

    @property
    def classified(self) -> int:
        return self.consecutive + self.sequential + self.random


@dataclass(frozen=True, slots=True)
class ReuseVolumes:
    rar: int
    raw: int
    war: int
    waw: int
    first_read: int
    first_write: int
    io_type: IOType


def _rw_events_in_time_order(frame: IOFrame, file: str) -> list[TraceEvent]:
    evs = [
        e
        for e in frame.events_for_file(file)
        if e.category in (Category.READ, Category.WRITE)
    ]
    evs.sort(key=lambda e: (e.start, e.event_id))
    return evs


def access_pattern(frame: IOFrame, file: str) -> AccessPatternCounts:
    """Count consecutive/sequential/random transitions for a file.

    Transitions are classified within each rank's stream of read/write
    events ordered by start time; per-rank counts are summed. Events
    without an offset are skipped (and tallied as such).
    """
    consecutive = sequential = random_ = skipped = 0
    per_rank: dict[int, TraceEvent] = {}
    for ev in _rw_events_in_time_order(frame, file):
        if ev.offset is None:
            skipped += 1
            continue
        prev = per_rank.get(ev.rank)
        if prev is not None:
            boundary = prev.offset + (prev.bytes or 0)
            if ev.offset == boundary:
                consecutive += 1
            elif ev.offset > boundary:
                sequential += 1
            else:
                random_ += 1
        per_rank[ev.rank] = ev
    return AccessPatternCounts(consecutive, sequential, random_, skipped)


class _IntervalMap:
    """Disjoint (start, end, kind) intervals over file offsets, sorted."""

    __slots__ = ("starts", "items")

    def __init__(self):
        self.starts: list[int] = []
        self.items: list[tuple[int, int, str]] = []

    def overlay(self, lo: int, hi: int, kind: str) -> tuple[int, int, int]:
        """Classify [lo, hi) against the current state, then claim it.

        Returns (bytes last touched by a read, bytes last touched by a
        write, bytes never touched before).
        """
        if hi <= lo:
            return 0, 0, 0
        i = bisect.bisect_right(self.starts, lo)
        if i > 0 and self.items[i - 1][1] > lo:
            i -= 1
        over_r = over_w = 0
        left_keep: list[tuple[int, int, str]] = []
        right_keep: list[tuple[int, int, str]] = []
        j = i
        while j < len(self.items) and self.items[j][0] < hi:
            s, e, k = self.items[j]
            ov = min(e, hi) - max(s, lo)
            if ov > 0:
                if k == "R":
                    over_r += ov
                else:
                    over_w += ov
            if s < lo:
                left_keep.append((s, lo, k))
            if e > hi:
                right_keep.append((hi, e, k))
            j += 1
        self.items[i:j] = left_keep + [(lo, hi, kind)] + right_keep
        self.starts = [it[0] for it in self.items]
        return over_r, over_w, (hi - lo) - over_r - over_w


def _resolve_io_type(
    rar: int, raw: int, war: int, waw: int, has_reads: bool, has_writes: bool
) -> IOType:
    volumes = ((rar, IOType.RAR), (raw, IOType.RAW), (war, IOType.WAR),
               (waw, IOType.WAW))
    best = max(v for v, _ in volumes)
    if best > 0:
        for v, t in volumes:
            if v == best:
                return t
    if has_reads and not has_writes:
        return IOType.RO
    if has_writes and not has_reads:
        return IOType.WO
    return IOType.MIXED


def readwrite_pattern(frame: IOFrame, file: str) -> ReuseVolumes:
    """Byte-exact reuse volumes for a file, in global time order.

    Every accessed byte is classified by the most recent prior access to
    that same byte: a read over previously-read bytes contributes to
    ``rar``, over previously-written bytes to ``raw``, and over fresh
    bytes to ``first_read`` (``war``/``waw``/``first_write`` mirror this
    for writes). Requires offsets on all of the file's payload events.
    """
    state = _IntervalMap()
    rar = raw = war = waw = first_read = first_write = 0
    has_reads = has_writes = False
    for ev in _rw_events_in_time_order(frame, file):
        if ev.offset is None:
            raise ValueError(
                f"event {ev.event_id}: reuse analysis requires an offset"
            )
        lo = ev.offset
        hi = lo + (ev.bytes or 0)
        if ev.category is Category.READ:
            has_reads = True
            over_r, over_w, fresh = state.overlay(lo, hi, "R")
            rar += over_r
            raw += over_w
            first_read += fresh
        else:
            has_writes = True
            over_r, over_w, fresh = state.overlay(lo, hi, "W")
            war += over_r
            waw += over_w
            first_write += fresh
    return ReuseVolumes(
        rar=rar,
        raw=raw,
        war=war,
        waw=waw,
        first_read=first_read,
        first_write=first_write,
        io_type=_resolve_io_type(rar, raw, war, waw, has_reads, has_writes),
    )


@dataclass(frozen=True, slots=True)
class FileFeatures:
    """Trace-derived I/O characteristics of one file.

    Everything here is tier-independent: no field depends on event
    durations, so features extracted from a run on either storage tier
    are identical and a single trace suffices for prediction.
    """

    file: str
    interface: Interface
    collective: bool
    fsync_present: bool
    fsync_per_write: bool
    preallocate: bool
    use_file_view: bool
    unique_dir: bool
    random_access: bool
    io_type: IOType
    transfer_size_mean: float
    reads_per_open: float
    writes_per_open: float
    num_ranks_sharing: int
    num_reads: int
    num_writes: int


RANDOM_ACCESS_THRESHOLD = 0.5
FSYNC_FOLLOW_THRESHOLD = 0.9


def _majority_interface(rw_events: list[TraceEvent]) -> Interface:
    order = (Interface.POSIX, Interface.MPIIO, Interface.HDF5)
    counts = {iface: 0 for iface in order}
    for ev in rw_events:
        if ev.interface in counts:
            counts[ev.interface] += 1
    best = max(counts.values())
    if best == 0:
        return Interface.POSIX
    for iface in order:
        if counts[iface] == best:
            return iface
    raise AssertionError("unreachable")


def _fsync_follow_fraction(frame: IOFrame, file: str) -> float:
    """Fraction of writes followed by a sync before the rank's next write."""
    satisfied = 0
    total = 0
    pending_by_rank: dict[int, bool] = {}
    for pos in frame.file_index.get(file, ()):
        ev = frame.events[pos]
        if ev.category is Category.WRITE:
            total += 1
            pending_by_rank[ev.rank] = True
        elif function_family(ev.function) == "sync":
            if pending_by_rank.get(ev.rank):
                satisfied += 1
                pending_by_rank[ev.rank] = False
    return satisfied / total if total else 0.0


def extract_features(
    frame: IOFrame,
    file: str,
    *,
    random_threshold: float = RANDOM_ACCESS_THRESHOLD,
    fsync_follow_threshold: float = FSYNC_FOLLOW_THRESHOLD,
) -> FileFeatures:
    """Extract the full per-file feature record from a frame.

    Raises KeyError when the file never appears in the frame. A file
    whose payload events lack offsets falls back to presence-based
    io_type resolution (RO/WO/MIXED) since reuse volumes need offsets.
    """
    if file not in frame.file_index:
        raise KeyError(f"file not present in frame: {file}")
    file_events = frame.events_for_file(file)
    rw_events = [
        e for e in file_events if e.category in (Category.READ, Category.WRITE)
    ]
    num_reads = sum(1 for e in rw_events if e.category is Category.READ)
    num_writes = len(rw_events) - num_reads
    total_bytes = sum(e.bytes or 0 for e in rw_events)
    n_ops = len(rw_events)

    global_order = sorted(file_events, key=lambda e: (e.start, e.event_id))
    first_write_idx = next(
        (i for i, e in enumerate(global_order) if e.category is Category.WRITE),
        None,
    )
    preallocate = any(
        function_family(e.function) == "truncate"
        for e in (
            global_order if first_write_idx is None
            else global_order[:first_write_idx]
        )
    )

    pattern = access_pattern(frame, file)
    random_access = (
        pattern.classified > 0
        and pattern.random / pattern.classified > random_threshold
    )

    if rw_events and all(e.offset is not None for e in rw_events):
        io_type = readwrite_pattern(frame, file).io_type
    elif num_reads and not num_writes:
        io_type = IOType.RO
    elif num_writes and not num_reads:
        io_type = IOType.WO
    else:
        io_type = IOType.MIXED

    all_sessions = []
    file_ranks = sorted({e.rank for e in file_events})
    for rank in file_ranks:
        all_sessions.extend(sessions(frame, file, rank))
    if all_sessions:
        reads_per_open = sum(s.reads for s in all_sessions) / len(all_sessions)
        writes_per_open = sum(s.writes for s in all_sessions) / len(all_sessions)
    else:
        reads_per_open = writes_per_open = 0.0

    parent = posixpath.dirname(file)
    dir_ranks = {
        e.rank
        for e in frame.events
        if e.file is not None and posixpath.dirname(e.file) == parent
    }

    return FileFeatures(
        file=file,
        interface=_majority_interface(rw_events),
        collective=any(is_collective(e.function) for e in file_events),
        fsync_present=any(
            function_family(e.function) == "sync" for e in file_events
        ),
        fsync_per_write=(
            num_writes > 0
            and _fsync_follow_fraction(frame, file) >= fsync_follow_threshold
        ),
        preallocate=preallocate,
        use_file_view=any(
            function_family(e.function) == "view" for e in file_events
        ),
        unique_dir=len(dir_ranks) == 1,
        random_access=random_access,
        io_type=io_type,
        transfer_size_mean=(total_bytes / n_ops) if n_ops else 0.0,
        reads_per_open=reads_per_open,
        writes_per_open=writes_per_open,
        num_ranks_sharing=len(file_ranks),
        num_reads=num_reads,
        num_writes=num_writes,
    )


# ---------------------------------------------------------------------------
# Encoding schema
# ---------------------------------------------------------------------------

CATEGORICAL_FIELDS: dict[str, tuple[str, ...]] = {
    "interface": ("POSIX", "MPIIO", "HDF5"),
    "io_type": ("RO", "WO", "RAR", "RAW", "WAR", "WAW", "MIXED"),
}
BOOLEAN_FIELDS = (
    "collective",
    "fsync_present",
    "fsync_per_write",
    "preallocate",
    "use_file_view",
    "unique_dir",
    "random_access",
)
NUMERIC_FIELDS = (
    "transfer_size_mean",
    "reads_per_open",
    "writes_per_open",
    "num_ranks_sharing",
    "num_reads",
    "num_writes",
)
_FIELD_ORDER = (
    "interface",
    "collective",
    "fsync_present",
    "fsync_per_write",
    "preallocate",
    "use_file_view",
    "unique_dir",
    "random_access",
    "io_type",
    "transfer_size_mean",
    "reads_per_open",
    "writes_per_open",
    "num_ranks_sharing",
    "num_reads",
    "num_writes",
)

SCHEMA_HEADER = "#tierlens-schema v1"


@dataclass(frozen=True, slots=True)
class SchemaColumn:
    field: str
    kind: str  # "numeric", "boolean", or "=<category value>"
    index: int


@dataclass(frozen=True)
class FeatureSchema:
    """Fixed one-hot encoding layout shared by training and prediction.

    Categorical fields expand to one 0/1 indicator column per category;
    booleans take a single 0/1 column; numeric fields are copied.
    """

    columns: tuple[SchemaColumn, ...]

    @property
    def width(self) -> int:
        return len(self.columns)

    @classmethod
    def default(cls) -> "FeatureSchema":
        cols: list[SchemaColumn] = []
        for field in _FIELD_ORDER:
            if field in CATEGORICAL_FIELDS:
                for value in CATEGORICAL_FIELDS[field]:
                    cols.append(SchemaColumn(field, f"={value}", len(cols)))
            elif field in BOOLEAN_FIELDS:
                cols.append(SchemaColumn(field, "boolean", len(cols)))
            else:
                cols.append(SchemaColumn(field, "numeric", len(cols)))
        return cls(columns=tuple(cols))

    @classmethod
    def numeric(cls, width: int, prefix: str = "x") -> "FeatureSchema":
        """Anonymous all-numeric schema, handy for synthetic datasets."""
        return cls(
            columns=tuple(
                SchemaColumn(f"{prefix}{i}", "numeric", i) for i in range(width)
            )
        )

    def column_names(self) -> list[str]:
        return [
            c.field + c.kind if c.kind.startswith("=") else c.field
            for c in self.columns
        ]

    def categories_for(self, field: str) -> list[str]:
        return [c.kind[1:] for c in self.columns
                if c.field == field and c.kind.startswith("=")]

    def encode(self, features: FileFeatures) -> list[float]:
        """FileFeatures -> numeric vector under this schema.

        Raises SchemaError when a categorical value has no indicator
        column, naming the field and the value.
        """
        vec: list[float] = []
        checked: set[str] = set()
        for col in self.columns:
            value = getattr(features, col.field)
            if col.kind == "numeric":
                vec.append(float(value))
            elif col.kind == "boolean":
                vec.append(1.0 if value else 0.0)
            else:
                raw = value.value if isinstance(value, enum.Enum) else str(value)
                if col.field not in checked:
                    checked.add(col.field)
                    if raw not in self.categories_for(col.field):
                        raise SchemaError(
                            f"field {col.field!r}: value {raw!r} is outside "
                            "the schema's category set"
                        )
                vec.append(1.0 if raw == col.kind[1:] else 0.0)
        return vec

    def to_text(self) -> str:
        lines = [SCHEMA_HEADER]
        for c in self.columns:
            lines.append(f"{c.index}\t{c.field}\t{c.kind}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "FeatureSchema":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != SCHEMA_HEADER:
            raise SchemaError(f"missing schema header {SCHEMA_HEADER!r}")
        cols: list[SchemaColumn] = []
        for ln in lines[1:]:
            parts = ln.split("\t")
            if len(parts) != 3:
                raise SchemaError(f"malformed schema line: {ln!r}")
            idx, field, kind = parts
            cols.append(SchemaColumn(field, kind, int(idx)))
        for expect, col in enumerate(cols):
            if col.index != expect:
                raise SchemaError(
                    f"schema column indices must be 0..n-1; "
                    f"found {col.index} at position {expect}"
                )
        return cls(columns=tuple(cols))


def _round_sig(value: float, digits: int = 6) -> float:
    return float(f"{value:.{digits}g}")


def canonical_features(features: FileFeatures) -> FileFeatures:
    """Canonical form for grouping: path dropped, numerics rounded to six
    significant digits so float noise cannot split a group."""
    return replace(
        features,
        file="",
        transfer_size_mean=_round_sig(features.transfer_size_mean),
        reads_per_open=_round_sig(features.reads_per_open),
        writes_per_open=_round_sig(features.writes_per_open),
    )


def group_files_by_features(
    frame: IOFrame,
    *,
    random_threshold: float = RANDOM_ACCESS_THRESHOLD,
    fsync_follow_threshold: float = FSYNC_FOLLOW_THRESHOLD,
) -> dict[FileFeatures, list[str]]:
    """Group the frame's files by identical canonical features.

    Only files with at least one read/write event participate: a file
    that moves no payload has nothing to place. Groups appear in order
    of their first file (files in sorted path order).
    """
    groups: dict[FileFeatures, list[str]] = {}
    for file in frame.files():
        positions = frame.file_index[file]
        if not any(
            frame.events[p].category in (Category.READ, Category.WRITE)
            for p in positions
        ):
            continue
        feats = extract_features(
            frame,
            file,
            random_threshold=random_threshold,
            fsync_follow_threshold=fsync_follow_threshold,
        )
        groups.setdefault(canonical_features(feats), []).append(file)
    return groups
