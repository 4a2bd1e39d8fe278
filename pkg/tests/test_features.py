"""Feature extraction against brute-force oracles, encoding, grouping."""

import random

import numpy as np
import pytest

from tierlens.events import build_ioframe
from tierlens.features import (
    FeatureSchema,
    IOType,
    SchemaError,
    access_pattern,
    canonical_features,
    extract_features,
    group_files_by_features,
    readwrite_pattern,
)

from conftest import ev


def reuse_oracle(ops, extent):
    """Per-byte brute force: an int8 cell per byte holding the last access.

    ``ops`` is the global time order of (kind, offset, nbytes).
    """
    state = np.zeros(extent, dtype=np.int8)  # 0 untouched, 1 read, 2 write
    rar = raw = war = waw = first_read = first_write = 0
    for kind, off, n in ops:
        seg = state[off:off + n]
        n_r = int(np.count_nonzero(seg == 1))
        n_w = int(np.count_nonzero(seg == 2))
        n_fresh = n - n_r - n_w
        if kind == "R":
            rar += n_r
            raw += n_w
            first_read += n_fresh
            seg[:] = 1
        else:
            war += n_r
            waw += n_w
            first_write += n_fresh
            seg[:] = 2
    return rar, raw, war, waw, first_read, first_write


def frame_from_ops(ops):
    events = []
    for i, (kind, off, n) in enumerate(ops):
        fn = "pread" if kind == "R" else "pwrite"
        events.append(
            ev(i, function=fn, start=float(i), end=i + 0.5, nbytes=n, offset=off)
        )
    return build_ioframe(events)


def random_ops(rng, max_extent=64 * 1024, max_ops=200):
    extent = rng.randrange(256, max_extent + 1)
    n_ops = rng.randrange(1, max_ops + 1)
    ops = []
    for _ in range(n_ops):
        off = rng.randrange(0, extent)
        n = rng.randrange(0, min(extent - off, 2048) + 1)
        ops.append((rng.choice("RW"), off, n))
    return ops, extent


class TestAccessPattern:
    def test_consecutive_run(self):
        frame = frame_from_ops([("W", 0, 100), ("W", 100, 100), ("W", 200, 100)])
        counts = access_pattern(frame, "f.dat")
        assert (counts.consecutive, counts.sequential, counts.random) == (2, 0, 0)

    def test_forward_gap_then_backward(self):
        frame = frame_from_ops([("W", 0, 100), ("W", 300, 50), ("W", 150, 50)])
        counts = access_pattern(frame, "f.dat")
        assert counts.sequential == 1
        assert counts.random == 1

    def test_single_access_no_transitions(self):
        frame = frame_from_ops([("R", 0, 100)])
        counts = access_pattern(frame, "f.dat")
        assert counts.classified == 0

    def test_overlap_counts_as_random(self):
        frame = frame_from_ops([("W", 0, 100), ("W", 50, 100)])
        assert access_pattern(frame, "f.dat").random == 1

    def test_missing_offsets_are_skipped(self):
        events = [
            ev(0, function="pwrite", start=0.0, nbytes=10, offset=0),
            ev(1, function="pwrite", start=1.0, nbytes=10, offset=None),
            ev(2, function="pwrite", start=2.0, nbytes=10, offset=10),
        ]
        counts = access_pattern(build_ioframe(events), "f.dat")
        assert counts.skipped == 1
        assert counts.consecutive == 1  # 0 -> 10 with event 1 skipped

    def test_rank_interleaving_insensitive(self):
        # same per-rank streams, different temporal interleavings
        def make(shift):
            events = []
            i = 0
            for rank, offs in ((0, [0, 100, 200]), (1, [500, 400, 300])):
                t = 0.0 if rank == 0 else shift
                for off in offs:
                    events.append(
                        ev(i, rank=rank, function="pwrite", start=t, end=t + 0.1,
                           nbytes=100, offset=off)
                    )
                    t += 1.0
                    i += 1
            return access_pattern(build_ioframe(events), "f.dat")

        assert make(0.5) == make(10.0)


class TestReusePattern:
    def test_write_then_read_same_region(self):
        frame = frame_from_ops([("W", 0, 100), ("R", 0, 100)])
        v = readwrite_pattern(frame, "f.dat")
        assert v.raw == 100
        assert v.first_write == 100
        assert v.io_type is IOType.RAW

    def test_overlapping_writes(self):
        frame = frame_from_ops([("W", 0, 100), ("W", 50, 100)])
        v = readwrite_pattern(frame, "f.dat")
        assert v.waw == 50
        assert v.first_write == 150
        assert v.io_type is IOType.WAW

    def test_reads_only_no_reuse_is_ro(self):
        frame = frame_from_ops([("R", 0, 100), ("R", 100, 100)])
        v = readwrite_pattern(frame, "f.dat")
        assert v.io_type is IOType.RO
        assert v.first_read == 200
        assert v.rar == 0

    def test_reads_only_with_reuse_is_rar(self):
        frame = frame_from_ops([("R", 0, 100), ("R", 0, 100)])
        v = readwrite_pattern(frame, "f.dat")
        assert v.io_type is IOType.RAR
        assert v.rar == 100

    def test_disjoint_read_write_is_mixed(self):
        frame = frame_from_ops([("W", 0, 100), ("R", 200, 100)])
        assert readwrite_pattern(frame, "f.dat").io_type is IOType.MIXED

    def test_missing_offset_is_an_error(self):
        events = [ev(0, function="pwrite", nbytes=10, offset=None)]
        with pytest.raises(ValueError, match="offset"):
            readwrite_pattern(build_ioframe(events), "f.dat")

    def test_matches_byte_map_oracle(self):
        rng = random.Random(101)
        for _ in range(60):
            ops, extent = random_ops(rng)
            frame = frame_from_ops(ops)
            v = readwrite_pattern(frame, "f.dat")
            assert (
                v.rar, v.raw, v.war, v.waw, v.first_read, v.first_write
            ) == reuse_oracle(ops, extent)


class TestExtractFeatures:
    def test_four_write_dump_file(self):
        sizes = [2105, 2105, 2105, 2106]  # mean 2105.25
        events = [ev(0, function="open", nbytes=None, start=0.0)]
        off = 0
        for i, size in enumerate(sizes, start=1):
            events.append(
                ev(i, function="pwrite", start=float(i), nbytes=size, offset=off)
            )
            off += size
        events.append(ev(9, function="close", nbytes=None, start=9.0))
        feats = extract_features(build_ioframe(events), "f.dat")
        assert feats.num_writes == 4
        assert feats.num_reads == 0
        assert feats.transfer_size_mean == pytest.approx(2105.25)
        assert feats.io_type is IOType.WO
        assert feats.writes_per_open == 4.0
        assert feats.transfer_size_mean * (feats.num_reads + feats.num_writes) \
            == pytest.approx(8421, rel=1e-9)

    def test_rank_private_directories(self):
        events = [
            ev(0, rank=0, function="pwrite", file="out/rank0/d.bin", offset=0),
            ev(1, rank=1, function="pwrite", file="out/rank1/d.bin", start=1.0,
               offset=0),
        ]
        frame = build_ioframe(events)
        for file in ("out/rank0/d.bin", "out/rank1/d.bin"):
            feats = extract_features(frame, file)
            assert feats.unique_dir is True
            assert feats.num_ranks_sharing == 1

    def test_shared_directory_not_unique(self):
        events = [
            ev(0, rank=0, function="pwrite", file="out/d0.bin", offset=0),
            ev(1, rank=1, function="pwrite", file="out/d1.bin", start=1.0,
               offset=0),
        ]
        frame = build_ioframe(events)
        assert extract_features(frame, "out/d0.bin").unique_dir is False

    def test_reads_per_open_two_sessions(self):
        spec = (
            [("open", None)] + [("pread", 100)] * 3 + [("close", None)]
            + [("open", None)] + [("pread", 100)] * 5 + [("close", None)]
        )
        events = []
        off = 0
        for i, (fn, size) in enumerate(spec):
            events.append(
                ev(i, function=fn, start=float(i), nbytes=size,
                   offset=off if size else None)
            )
            if size:
                off += size
        feats = extract_features(build_ioframe(events), "f.dat")
        assert feats.reads_per_open == 4.0
        assert feats.io_type is IOType.RO

    def test_fsync_per_write_and_presence(self):
        events = []
        i = 0
        off = 0
        for _ in range(3):
            events.append(ev(i, function="pwrite", start=float(i), nbytes=10,
                             offset=off))
            i += 1
            off += 10
            events.append(ev(i, function="fsync", start=float(i), nbytes=None))
            i += 1
        feats = extract_features(build_ioframe(events), "f.dat")
        assert feats.fsync_present is True
        assert feats.fsync_per_write is True

    def test_single_final_fsync_is_not_per_write(self):
        events = [
            ev(0, function="pwrite", start=0.0, nbytes=10, offset=0),
            ev(1, function="pwrite", start=1.0, nbytes=10, offset=10),
            ev(2, function="pwrite", start=2.0, nbytes=10, offset=20),
            ev(3, function="fsync", start=3.0, nbytes=None),
        ]
        feats = extract_features(build_ioframe(events), "f.dat")
        assert feats.fsync_present is True
        assert feats.fsync_per_write is False  # 1/3 below the 90% bar

    def test_preallocate_before_first_write(self):
        events = [
            ev(0, function="ftruncate", start=0.0, nbytes=None),
            ev(1, function="pwrite", start=1.0, nbytes=10, offset=0),
        ]
        assert extract_features(build_ioframe(events), "f.dat").preallocate

    def test_truncate_after_write_is_not_preallocate(self):
        events = [
            ev(0, function="pwrite", start=0.0, nbytes=10, offset=0),
            ev(1, function="ftruncate", start=1.0, nbytes=None),
        ]
        assert not extract_features(build_ioframe(events), "f.dat").preallocate

    def test_random_access_threshold(self):
        frame = frame_from_ops([("W", 300, 50), ("W", 200, 50), ("W", 100, 50),
                                ("W", 0, 50)])
        assert extract_features(frame, "f.dat").random_access is True
        frame = frame_from_ops([("W", 0, 50), ("W", 50, 50), ("W", 100, 50),
                                ("W", 0, 50)])
        assert extract_features(frame, "f.dat").random_access is False

    def test_absent_file_is_an_error(self):
        with pytest.raises(KeyError):
            extract_features(build_ioframe([ev(0)]), "nope.dat")


class TestSchema:
    def test_default_width_and_order(self):
        schema = FeatureSchema.default()
        assert schema.width == 23
        names = schema.column_names()
        assert names[:3] == ["interface=POSIX", "interface=MPIIO",
                             "interface=HDF5"]
        assert names[10:17] == [
            "io_type=RO", "io_type=WO", "io_type=RAR", "io_type=RAW",
            "io_type=WAR", "io_type=WAW", "io_type=MIXED",
        ]
        assert names[-1] == "num_writes"
        assert [c.index for c in schema.columns] == list(range(23))

    def test_one_hot_encoding(self):
        schema = FeatureSchema.default()
        frame = frame_from_ops([("W", 0, 100)])
        feats = extract_features(frame, "f.dat")
        vec = schema.encode(feats)
        assert len(vec) == 23
        assert vec[:3] == [1.0, 0.0, 0.0]  # POSIX
        # one-hot columns sum to 1 per categorical field
        assert sum(vec[:3]) == 1.0
        assert sum(vec[10:17]) == 1.0

    def test_boolean_column(self):
        schema = FeatureSchema.default()
        events = [
            ev(0, function="MPI_File_write_at_all", interface="MPIIO",
               nbytes=10, offset=0),
        ]
        feats = extract_features(build_ioframe(events), "f.dat")
        vec = schema.encode(feats)
        names = schema.column_names()
        assert vec[names.index("collective")] == 1.0
        assert vec[names.index("interface=MPIIO")] == 1.0

    def test_unknown_category_value_names_field(self):
        schema = FeatureSchema.from_text(
            "#tierlens-schema v1\n"
            "0\tinterface\t=POSIX\n"
            "1\ttransfer_size_mean\tnumeric\n"
        )
        frame = frame_from_ops([("W", 0, 100)])
        feats = extract_features(frame, "f.dat")
        schema.encode(feats)  # POSIX is in the category set
        from dataclasses import replace
        from tierlens.events import Interface

        bad = replace(feats, interface=Interface.MPIIO)
        with pytest.raises(SchemaError, match="interface.*MPIIO"):
            schema.encode(bad)

    def test_text_round_trip(self):
        schema = FeatureSchema.default()
        assert FeatureSchema.from_text(schema.to_text()) == schema

    def test_stable_across_runs(self):
        assert FeatureSchema.default().to_text() == FeatureSchema.default().to_text()


class TestGrouping:
    def _dump_frame(self):
        # 386 files: 380 identical dump-style writes plus 6 distinct ones
        events = []
        i = 0
        for f in range(380):
            events.append(
                ev(i, function="pwrite", file=f"out/dump{f:04d}.bin",
                   start=float(i), nbytes=1000, offset=0)
            )
            i += 1
        for k in range(6):
            for j in range(k + 2):
                events.append(
                    ev(i, function="pwrite", file=f"out/special{k}.bin",
                       start=float(i), nbytes=777, offset=777 * j)
                )
                i += 1
        return build_ioframe(events)

    def test_386_files_collapse_to_7_groups(self):
        groups = group_files_by_features(self._dump_frame())
        assert sum(len(files) for files in groups.values()) == 386
        assert len(groups) == 7
        sizes = sorted((len(files) for files in groups.values()), reverse=True)
        assert sizes[0] == 380

    def test_all_distinct(self):
        events = [
            ev(i, function="pwrite", file=f"f{i}.dat", start=float(i),
               nbytes=100 * (i + 1), offset=0)
            for i in range(5)
        ]
        groups = group_files_by_features(build_ioframe(events))
        assert len(groups) == 5

    def test_empty_frame(self):
        assert group_files_by_features(build_ioframe([])) == {}

    def test_identical_vectors_within_group(self):
        schema = FeatureSchema.default()
        groups = group_files_by_features(self._dump_frame())
        frame = self._dump_frame()
        for canonical, files in groups.items():
            vectors = {
                tuple(schema.encode(canonical_features(
                    extract_features(frame, f)
                )))
                for f in files
            }
            assert len(vectors) == 1
            assert vectors == {tuple(schema.encode(canonical))}

    def test_rounding_merges_float_noise(self):
        feats = extract_features(frame_from_ops([("W", 0, 100)]), "f.dat")
        from dataclasses import replace

        a = replace(feats, transfer_size_mean=1000.0000001)
        b = replace(feats, transfer_size_mean=1000.0000002)
        assert canonical_features(a) == canonical_features(b)
