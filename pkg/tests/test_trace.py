"""Trace parsing, the function table, frame construction, filters, sessions."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tierlens.events import (
    Category,
    FrameInvariantError,
    Interface,
    TraceEvent,
    build_ioframe,
    sessions,
)
from tierlens.iofunctions import classify_function, function_family, is_collective
from tierlens.tracefile import (
    TRACE_HEADER,
    TraceFormatError,
    parse_trace,
    write_trace,
)

from conftest import ev, random_events

CANONICAL = (
    "#tierlens-trace v1\n"
    "0\t0\t0\topen\tmetadata\tPOSIX\tjob/a.dat\t0.000000000\t0.000200000\t-\t-\n"
    "1\t0\t0\tpwrite\twrite\tPOSIX\tjob/a.dat\t0.000200000\t0.250200000\t1048576\t0\n"
    "2\t0\t0\tpwrite\twrite\tPOSIX\tjob/a.dat\t0.250200000\t0.500200000\t1048576\t1048576\n"
    "3\t0\t0\tclose\tmetadata\tPOSIX\tjob/a.dat\t0.500200000\t0.500400000\t-\t-\n"
)


class TestParse:
    def test_empty_stream(self):
        assert parse_trace("") == []

    def test_single_write_record(self):
        text = (
            f"{TRACE_HEADER}\n"
            "7\t2\t1\tpwrite\t-\t-\tx.dat\t1.000000000\t1.500000000\t4096\t0\n"
        )
        events = parse_trace(text)
        assert len(events) == 1
        e = events[0]
        assert e.event_id == 7
        assert e.category is Category.WRITE
        assert e.interface is Interface.POSIX
        assert e.bytes == 4096
        assert e.offset == 0

    def test_negative_duration_names_line(self):
        text = (
            f"{TRACE_HEADER}\n"
            "0\t0\t0\tpwrite\t-\t-\tx\t2.000000000\t1.000000000\t1\t0\n"
        )
        with pytest.raises(TraceFormatError, match="negative duration at line 2"):
            parse_trace(text)

    def test_duplicate_event_id(self):
        text = (
            f"{TRACE_HEADER}\n"
            "0\t0\t0\topen\t-\t-\tx\t0.000000000\t0.000000000\t-\t-\n"
            "0\t0\t0\tclose\t-\t-\tx\t1.000000000\t1.000000000\t-\t-\n"
        )
        with pytest.raises(TraceFormatError, match="duplicate event_id 0"):
            parse_trace(text)

    def test_malformed_line_reports_position(self):
        text = f"{TRACE_HEADER}\nnot a record\n"
        with pytest.raises(TraceFormatError, match="line 2"):
            parse_trace(text)

    def test_missing_header(self):
        with pytest.raises(TraceFormatError, match="missing header"):
            parse_trace("0\t0\t0\topen\t-\t-\tx\t0.0\t0.0\t-\t-\n")

    def test_comments_ignored(self):
        text = f"{TRACE_HEADER}\n# a comment\n"
        assert parse_trace(text) == []

    def test_explicit_category_kept(self):
        text = (
            f"{TRACE_HEADER}\n"
            "0\t0\t0\tcustom_fn\tread\tHDF5\tx\t0.000000000\t1.000000000\t10\t-\n"
        )
        e = parse_trace(text)[0]
        assert e.category is Category.READ
        assert e.interface is Interface.HDF5

    def test_round_trip_byte_exact(self):
        assert write_trace(parse_trace(CANONICAL)) == CANONICAL

    def test_round_trip_random_events(self):
        events = random_events(200, seed=11, with_offsets=True)
        text = write_trace(events)
        assert write_trace(parse_trace(text)) == text


class TestClassify:
    @pytest.mark.parametrize(
        "name,category,interface",
        [
            ("fwrite", Category.WRITE, Interface.POSIX),
            ("fread", Category.READ, Interface.POSIX),
            ("MPI_File_read_at", Category.READ, Interface.MPIIO),
            ("MPI_File_write_at_all", Category.WRITE, Interface.MPIIO),
            ("H5Dwrite", Category.WRITE, Interface.HDF5),
            ("H5Fopen", Category.METADATA, Interface.HDF5),
            ("fsync", Category.METADATA, Interface.POSIX),
            ("ftruncate", Category.METADATA, Interface.POSIX),
            ("made_up_fn", Category.OTHER, Interface.OTHER),
            ("MPI_File_future_op", Category.OTHER, Interface.MPIIO),
            ("H5made_up_read", Category.READ, Interface.HDF5),
        ],
    )
    def test_mapping(self, name, category, interface):
        assert classify_function(name) == (category, interface)

    def test_families(self):
        assert function_family("open") == "open"
        assert function_family("MPI_File_close") == "close"
        assert function_family("fsync") == "sync"
        assert function_family("MPI_File_set_view") == "view"
        assert function_family("posix_fallocate") == "truncate"
        assert function_family("pwrite") == ""

    def test_collective(self):
        assert is_collective("MPI_File_write_at_all")
        assert not is_collective("MPI_File_write_at")
        assert not is_collective("pwrite")


class TestBuildFrame:
    def test_empty(self):
        frame = build_ioframe([])
        assert len(frame) == 0
        assert dict(frame.file_index) == {}
        assert frame.epoch_span == (0.0, 0.0)

    def test_sorting_contract(self):
        events = [
            ev(0, rank=1, start=5.0),
            ev(1, rank=0, start=9.0),
            ev(2, rank=0, start=1.0),
        ]
        frame = build_ioframe(events)
        keys = [(e.rank, e.start, e.event_id) for e in frame.events]
        assert keys == sorted(keys)
        assert [e.event_id for e in frame.events] == [2, 1, 0]

    def test_file_index_partitions_events(self):
        # oracle: plain linear scan over the unsorted input
        events = random_events(1000, seed=3)
        frame = build_ioframe(events)
        seen_positions = set()
        for file, positions in frame.file_index.items():
            for p in positions:
                assert frame.events[p].file == file
                seen_positions.add(p)
        expected = {i for i, e in enumerate(frame.events) if e.file is not None}
        assert seen_positions == expected
        by_scan = {}
        for e in events:
            if e.file is not None:
                by_scan[e.file] = by_scan.get(e.file, 0) + 1
        assert {f: len(ps) for f, ps in frame.file_index.items()} == by_scan

    def test_rank_counts_sum_to_total(self):
        frame = build_ioframe(random_events(500, seed=4))
        assert sum(len(ps) for ps in frame.rank_index.values()) == len(frame)

    def test_invariant_errors_name_event(self):
        bad = ev(42, start=2.0, end=1.0)
        with pytest.raises(FrameInvariantError, match="42"):
            build_ioframe([bad])
        no_bytes = TraceEvent(
            event_id=7, rank=0, node=0, function="pwrite",
            category=Category.WRITE, interface=Interface.POSIX,
            file="x", start=0.0, end=1.0, bytes=None, offset=None,
        )
        with pytest.raises(FrameInvariantError, match="7"):
            build_ioframe([no_bytes])

    def test_duplicate_ids_rejected(self):
        with pytest.raises(FrameInvariantError, match="duplicate"):
            build_ioframe([ev(1), ev(1, rank=2)])


class TestFilter:
    def test_rank_subset(self):
        frame = build_ioframe(random_events(300, seed=5, n_ranks=8))
        sub = frame.filter(ranks=range(4))
        assert all(e.rank <= 3 for e in sub.events)
        assert len(sub) == sum(1 for e in frame.events if e.rank <= 3)

    def test_always_false_predicate(self):
        frame = build_ioframe(random_events(50, seed=6))
        assert len(frame.filter(predicate=lambda e: False)) == 0

    def test_conjunction_commutes(self):
        frame = build_ioframe(random_events(300, seed=7))
        a = frame.filter(categories=[Category.READ]).filter(ranks=[0])
        b = frame.filter(ranks=[0], categories=[Category.READ])
        assert a.events == b.events

    def test_original_unchanged(self):
        frame = build_ioframe(random_events(50, seed=8))
        before = frame.events
        frame.filter(ranks=[0])
        assert frame.events == before

    @given(st.integers(0, 7))
    @settings(max_examples=8, deadline=None)
    def test_idempotent_and_monotone(self, rank):
        frame = build_ioframe(random_events(200, seed=9, n_ranks=8))
        once = frame.filter(ranks=[rank])
        twice = once.filter(ranks=[rank])
        assert once.events == twice.events
        assert len(once) <= len(frame)


class TestSessions:
    def _frame(self, spec):
        # spec: list of (function, rank) tuples in time order
        events = []
        for i, (fn, rank) in enumerate(spec):
            nbytes = 100 if fn in ("pwrite", "pread") else None
            events.append(
                ev(i, rank=rank, function=fn, start=float(i), end=float(i) + 0.5,
                   nbytes=nbytes, offset=0 if nbytes else None)
            )
        return build_ioframe(events)

    def test_single_session(self):
        frame = self._frame([("open", 0), ("pwrite", 0), ("pwrite", 0),
                             ("close", 0)])
        out = sessions(frame, "f.dat", 0)
        assert len(out) == 1
        assert out[0].writes == 2
        assert out[0].reads == 0
        assert out[0].open_event == 0
        assert out[0].close_event == 3
        assert out[0].bytes_written == 200

    def test_two_disjoint_sessions(self):
        frame = self._frame(
            [("open", 0), ("pwrite", 0), ("close", 0),
             ("open", 0), ("pread", 0), ("close", 0)]
        )
        out = sessions(frame, "f.dat", 0)
        assert len(out) == 2
        assert (out[0].writes, out[0].reads) == (1, 0)
        assert (out[1].writes, out[1].reads) == (0, 1)

    def test_unterminated_session(self):
        frame = self._frame([("open", 0), ("pwrite", 0)])
        out = sessions(frame, "f.dat", 0)
        assert len(out) == 1
        assert out[0].close_event is None
        assert out[0].writes == 1

    def test_close_without_open_is_warned_synthetic(self):
        frame = self._frame([("pwrite", 0), ("close", 0)])
        warnings: list[str] = []
        out = sessions(frame, "f.dat", 0, warnings=warnings)
        assert len(out) == 1
        assert out[0].open_event is None
        assert out[0].close_event == 1
        assert out[0].writes == 1
        assert warnings

    def test_partition_property(self):
        # every read/write of (file, rank) lands in exactly one session
        import random as _random

        rng = _random.Random(13)
        spec = []
        for _ in range(200):
            spec.append(
                (rng.choice(["open", "pwrite", "pread", "close", "fsync"]), 0)
            )
        frame = self._frame(spec)
        out = sessions(frame, "f.dat", 0)
        total_rw = sum(
            1 for e in frame.events
            if e.category in (Category.READ, Category.WRITE)
        )
        assert sum(s.reads + s.writes for s in out) == total_rw
