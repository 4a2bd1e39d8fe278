"""Synthetic benchmark-style workloads and a parametric two-tier storage model.

The storage model is phenomenological, not a queueing simulation. Four
effects drive every qualitative behavior it needs to reproduce:

* transfer-size saturation — effective bandwidth is
  ``peak_bw * ts / (ts + latency_knee)``, so small transfers pay a
  latency toll and the two tiers cross over as the transfer size grows;
* read advantage — reads run ``read_multiplier`` times faster;
* metadata-leader imbalance — on the parallel file system one node acts
  as the metadata leader for a directory, so with per-process files the
  ranks on other nodes pay the slow open cost;
* cache cliff — the burst buffer serves each node's bytes beyond
  ``cache_capacity`` at the much lower ``post_cache_bw``.

Default parameter values are repository constants picked so the model
shows all four effects at desk scale; they are configuration, not
measurements of any real machine.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from .datasets import Dataset, Sample, Tier, label_pair
from .events import Category, Interface, TraceEvent, build_ioframe
from .features import FeatureSchema, IOType, extract_features
from .iofunctions import classify_function

GRID_HEADER = "#tierlens-grid v1"

KIB = 1024
MIB = 1024 * 1024
GIB = 1024 * 1024 * 1024


class FileLayout(str, enum.Enum):
    FILE_PER_PROCESS = "file_per_process"
    SHARED_FILE = "shared_file"


@dataclass(frozen=True)
class WorkloadConfig:
    """One benchmark configuration: the knobs of a synthetic run."""

    interface: Interface = Interface.POSIX
    collective: bool = False
    fsync: bool = False
    fsync_per_write: bool = False
    preallocate: bool = False
    use_file_view: bool = False
    unique_dir: bool = False
    transfer_size: int = 64 * KIB
    ops_per_open: int = 4
    io_type: IOType = IOType.WO
    random_access: bool = False
    ranks: int = 4
    ranks_per_node: int = 4
    files: FileLayout = FileLayout.FILE_PER_PROCESS

    def __post_init__(self):
        if self.transfer_size <= 0:
            raise ValueError("transfer_size must be positive")
        if self.ranks < 1:
            raise ValueError("ranks must be >= 1")
        if self.ranks_per_node < 1:
            raise ValueError("ranks_per_node must be >= 1")
        if self.ops_per_open < 1:
            raise ValueError("ops_per_open must be >= 1")
        if self.io_type is IOType.MIXED:
            raise ValueError("MIXED is a derived class, not a workload knob")


@dataclass(frozen=True)
class TierParams:
    """Storage behavior of one tier."""

    peak_bw: float
    latency_knee: float
    read_multiplier: float = 1.0
    open_cost_fast: float = 1e-4
    open_cost_slow: float = 1e-4
    cache_capacity: float = math.inf  # bytes per node before the cliff
    post_cache_bw: float | None = None  # None: no cliff
    metadata_leader_nodes: int = 1

    def __post_init__(self):
        if min(self.peak_bw, self.latency_knee, self.read_multiplier) <= 0:
            raise ValueError("peak_bw, latency_knee, read_multiplier must be > 0")
        if self.read_multiplier < 1.0:
            raise ValueError("read_multiplier must be >= 1")
        if self.open_cost_fast <= 0 or self.open_cost_slow <= 0:
            raise ValueError("open costs must be > 0")
        if self.cache_capacity <= 0:
            raise ValueError("cache_capacity must be > 0")
        if self.post_cache_bw is not None and self.post_cache_bw <= 0:
            raise ValueError("post_cache_bw must be > 0")
        if self.metadata_leader_nodes < 1:
            raise ValueError("metadata_leader_nodes must be >= 1")


@dataclass(frozen=True)
class StorageParams:
    pfs: TierParams
    bb: TierParams

    def for_tier(self, tier: Tier) -> TierParams:
        return self.pfs if tier is Tier.PFS else self.bb

    def scaled(self, alpha: float) -> "StorageParams":
        """Uniformly speed both tiers up by ``alpha``.

        Rates scale with alpha and fixed costs inversely, so every
        simulated time shrinks by exactly 1/alpha and all tier
        comparisons (hence labels) are preserved.
        """
        if alpha <= 0:
            raise ValueError("alpha must be > 0")

        def scale_tier(tp: TierParams) -> TierParams:
            return replace(
                tp,
                peak_bw=tp.peak_bw * alpha,
                post_cache_bw=(
                    None if tp.post_cache_bw is None else tp.post_cache_bw * alpha
                ),
                open_cost_fast=tp.open_cost_fast / alpha,
                open_cost_slow=tp.open_cost_slow / alpha,
            )

        return StorageParams(pfs=scale_tier(self.pfs), bb=scale_tier(self.bb))


DEFAULT_STORAGE_PARAMS = StorageParams(
    pfs=TierParams(
        peak_bw=6.0 * GIB,
        latency_knee=4 * MIB,
        read_multiplier=1.0,
        open_cost_fast=2e-4,
        open_cost_slow=2.5e-2,
        metadata_leader_nodes=1,
    ),
    bb=TierParams(
        peak_bw=2.2 * GIB,
        latency_knee=48 * KIB,
        read_multiplier=1.4,
        open_cost_fast=5e-5,
        open_cost_slow=5e-5,
        cache_capacity=64.0 * MIB,
        post_cache_bw=0.45 * GIB,
    ),
)


def op_kinds(io_type: IOType, ops_per_open: int) -> list[Category]:
    """Read/write kind of each operation in a session realizing io_type.

    Reuse classes run two phases over the same region: the first phase
    touches fresh bytes, the second revisits them (RAW writes then
    reads, WAR reads then writes, RAR re-reads, WAW re-writes).
    """
    n = ops_per_open
    second = n // 2
    first = n - second
    if io_type is IOType.RO:
        return [Category.READ] * n
    if io_type is IOType.WO:
        return [Category.WRITE] * n
    if io_type is IOType.RAR:
        return [Category.READ] * n
    if io_type is IOType.WAW:
        return [Category.WRITE] * n
    if io_type is IOType.RAW:
        return [Category.WRITE] * first + [Category.READ] * second
    if io_type is IOType.WAR:
        return [Category.READ] * first + [Category.WRITE] * second
    raise ValueError(f"unsupported workload io_type {io_type}")


def _slot_phases(io_type: IOType, ops_per_open: int) -> list[list[int]]:
    """Transfer-size slots each operation touches, grouped by phase.

    Single-pass classes walk distinct slots in one phase; reuse classes
    walk the first-phase slots and then revisit a prefix of them in a
    second phase. Phases are kept separate so that offset shuffling for
    random access never leaks a revisit into the first pass.
    """
    n = ops_per_open
    second = n // 2
    first = n - second
    if io_type in (IOType.RO, IOType.WO):
        return [list(range(n))]
    return [list(range(first)), list(range(second))]


def _bias_backward(slots: list[int], rng: random.Random) -> list[int]:
    # Descending slot order makes every transition move backward, which
    # classifies as random; a few seeded adjacent swaps add variety while
    # keeping the random fraction safely above one half.
    out = sorted(slots, reverse=True)
    n = len(out)
    for _ in range(max(0, (n - 1) // 8)):
        i = rng.randrange(n - 1)
        out[i], out[i + 1] = out[i + 1], out[i]
    return out


def _node_of(rank: int, config: WorkloadConfig) -> int:
    return rank // config.ranks_per_node


def _num_nodes(config: WorkloadConfig) -> int:
    return (config.ranks + config.ranks_per_node - 1) // config.ranks_per_node


def _file_of(rank: int, config: WorkloadConfig) -> str:
    if config.files is FileLayout.SHARED_FILE:
        return "job/shared.dat"
    if config.unique_dir:
        return f"job/rank{rank:04d}/data.bin"
    return f"job/data.{rank:04d}"


def _effective_bw(tp: TierParams, ts: int, is_read: bool, base_bw: float) -> float:
    bw = base_bw * (ts / (ts + tp.latency_knee))
    if is_read:
        bw *= tp.read_multiplier
    return bw


def _open_cost(config: WorkloadConfig, tier_params: TierParams, node: int) -> float:
    many_files = config.files is FileLayout.FILE_PER_PROCESS
    if many_files and node >= tier_params.metadata_leader_nodes:
        return tier_params.open_cost_slow
    return tier_params.open_cost_fast


def _node_bytes(config: WorkloadConfig, node: int) -> int:
    ranks_on_node = sum(
        1 for r in range(config.ranks) if _node_of(r, config) == node
    )
    return ranks_on_node * config.ops_per_open * config.transfer_size


def _cached_fraction(tp: TierParams, node_bytes: int) -> float:
    if tp.post_cache_bw is None or node_bytes <= tp.cache_capacity:
        return 1.0
    return tp.cache_capacity / node_bytes


def _op_time(
    config: WorkloadConfig,
    tp: TierParams,
    is_read: bool,
    cached_fraction: float,
) -> float:
    ts = config.transfer_size
    fast = _effective_bw(tp, ts, is_read, tp.peak_bw)
    t = (cached_fraction * ts) / fast
    if cached_fraction < 1.0:
        slow = _effective_bw(tp, ts, is_read, tp.post_cache_bw)
        t += ((1.0 - cached_fraction) * ts) / slow
    return t


def simulate_bandwidth(
    config: WorkloadConfig,
    tier: Tier,
    params: StorageParams = DEFAULT_STORAGE_PARAMS,
) -> float:
    """Aggregate bytes/second the workload achieves on a tier.

    Each rank opens once and performs its operations back to back; the
    job's I/O wall time is the slowest rank, and the result is total
    payload bytes over that wall time. Fully deterministic.
    """
    tp = params.for_tier(tier)
    kinds = op_kinds(config.io_type, config.ops_per_open)
    wall = 0.0
    for rank in range(config.ranks):
        node = _node_of(rank, config)
        frac = _cached_fraction(tp, _node_bytes(config, node))
        t = _open_cost(config, tp, node)
        for kind in kinds:
            t += _op_time(config, tp, kind is Category.READ, frac)
        wall = max(wall, t)
    total_bytes = config.ranks * config.ops_per_open * config.transfer_size
    return total_bytes / wall


_OPEN_FN = {Interface.POSIX: "open", Interface.MPIIO: "MPI_File_open",
            Interface.HDF5: "H5Fopen"}
_CLOSE_FN = {Interface.POSIX: "close", Interface.MPIIO: "MPI_File_close",
             Interface.HDF5: "H5Fclose"}
_SYNC_FN = {Interface.POSIX: "fsync", Interface.MPIIO: "MPI_File_sync",
            Interface.HDF5: "H5Fflush"}
_TRUNC_FN = {Interface.POSIX: "ftruncate", Interface.MPIIO: "MPI_File_preallocate",
             Interface.HDF5: "H5Dset_extent"}
_READ_FN = {Interface.POSIX: "pread", Interface.MPIIO: "MPI_File_read_at",
            Interface.HDF5: "H5Dread"}
_WRITE_FN = {Interface.POSIX: "pwrite", Interface.MPIIO: "MPI_File_write_at",
             Interface.HDF5: "H5Dwrite"}
_READ_COLL_FN = "MPI_File_read_at_all"
_WRITE_COLL_FN = "MPI_File_write_at_all"


def generate_trace(
    config: WorkloadConfig,
    seed: int = 0,
    *,
    tier: Tier = Tier.PFS,
    params: StorageParams = DEFAULT_STORAGE_PARAMS,
) -> list[TraceEvent]:
    """Emit the event sequence a run with this configuration produces.

    Event durations come from the same storage model as
    :func:`simulate_bandwidth` (for ``tier``, the parallel file system
    by default), so measured bandwidths and extracted features agree
    with the configuration. Deterministic for a given seed.
    """
    rng = random.Random(seed)
    tp = params.for_tier(tier)
    kinds = op_kinds(config.io_type, config.ops_per_open)
    phases = _slot_phases(config.io_type, config.ops_per_open)
    if config.random_access:
        phases = [_bias_backward(phase, rng) for phase in phases]
    slots = [slot for phase in phases for slot in phase]
    mpiio = config.interface is Interface.MPIIO
    collective = config.collective and mpiio
    ts = config.transfer_size
    meta_cost = tp.open_cost_fast

    events: list[TraceEvent] = []
    next_id = 0

    def emit(rank, node, function, file, t, duration, nbytes=None, offset=None):
        nonlocal next_id
        category, interface = classify_function(function)
        events.append(
            TraceEvent(
                event_id=next_id,
                rank=rank,
                node=node,
                function=function,
                category=category,
                interface=interface,
                file=file,
                start=t,
                end=t + duration,
                bytes=nbytes,
                offset=offset,
            )
        )
        next_id += 1
        return t + duration

    for rank in range(config.ranks):
        node = _node_of(rank, config)
        file = _file_of(rank, config)
        frac = _cached_fraction(tp, _node_bytes(config, node))
        if config.files is FileLayout.SHARED_FILE:
            # each rank owns a disjoint block of the shared file
            base = rank * (max(slots) + 1) * ts
        else:
            base = 0
        t = 0.0
        t = emit(rank, node, _OPEN_FN[config.interface], file, t,
                 _open_cost(config, tp, node))
        if config.preallocate:
            t = emit(rank, node, _TRUNC_FN[config.interface], file, t, meta_cost)
        if config.use_file_view and mpiio:
            t = emit(rank, node, "MPI_File_set_view", file, t, meta_cost)
        for kind, slot in zip(kinds, slots):
            is_read = kind is Category.READ
            if is_read:
                fn = _READ_COLL_FN if collective else _READ_FN[config.interface]
            else:
                fn = _WRITE_COLL_FN if collective else _WRITE_FN[config.interface]
            t = emit(rank, node, fn, file, t,
                     _op_time(config, tp, is_read, frac),
                     nbytes=ts, offset=base + slot * ts)
            if config.fsync_per_write and not is_read:
                t = emit(rank, node, _SYNC_FN[config.interface], file, t, meta_cost)
        if config.fsync:
            t = emit(rank, node, _SYNC_FN[config.interface], file, t, meta_cost)
        emit(rank, node, _CLOSE_FN[config.interface], file, t, meta_cost)
    return events


def representative_features(frame):
    """Features of the frame's first payload-carrying file (sorted order)."""
    for file in frame.files():
        feats = extract_features(frame, file)
        if feats.num_reads or feats.num_writes:
            return feats
    raise ValueError("trace contains no payload I/O")


def sweep(
    grid: Sequence[WorkloadConfig],
    params: StorageParams = DEFAULT_STORAGE_PARAMS,
    schema: FeatureSchema | None = None,
    *,
    seed: int = 0,
) -> Dataset:
    """Run every configuration on both tiers and build the labeled dataset.

    For each grid point the trace is generated once (features are
    tier-independent), features come from the trace, and the label
    compares the two simulated bandwidths. One sample per grid point,
    in grid order.
    """
    if not grid:
        raise ValueError("empty workload grid")
    if schema is None:
        schema = FeatureSchema.default()
    samples: list[Sample] = []
    for i, config in enumerate(grid):
        frame = build_ioframe(generate_trace(config, seed + i))
        feats = representative_features(frame)
        vector = tuple(schema.encode(feats))
        bw_pfs = simulate_bandwidth(config, Tier.PFS, params)
        bw_bb = simulate_bandwidth(config, Tier.BB, params)
        samples.append(
            Sample(
                vector=vector,
                label=label_pair(bw_pfs, bw_bb),
                source=f"cfg-{i:05d}",
                bw_pfs=bw_pfs,
                bw_bb=bw_bb,
            )
        )
    return Dataset(schema=schema, samples=tuple(samples))


# ---------------------------------------------------------------------------
# Workload grids
# ---------------------------------------------------------------------------

_GRID_FIELDS = {
    "interface": lambda v: Interface(v),
    "collective": lambda v: v == "true",
    "fsync": lambda v: v == "true",
    "fsync_per_write": lambda v: v == "true",
    "preallocate": lambda v: v == "true",
    "use_file_view": lambda v: v == "true",
    "unique_dir": lambda v: v == "true",
    "transfer_size": int,
    "ops_per_open": int,
    "io_type": lambda v: IOType(v),
    "random_access": lambda v: v == "true",
    "ranks": int,
    "ranks_per_node": int,
    "files": lambda v: FileLayout(v),
}

_BOOL_GRID_FIELDS = {
    "collective", "fsync", "fsync_per_write", "preallocate",
    "use_file_view", "unique_dir", "random_access",
}


def feasible(config: WorkloadConfig) -> bool:
    """Reject knob combinations a real benchmark could not realize."""
    if config.collective and config.interface is not Interface.MPIIO:
        return False
    if config.use_file_view and config.interface is not Interface.MPIIO:
        return False
    if config.unique_dir and config.files is FileLayout.SHARED_FILE:
        return False
    if config.io_type not in (IOType.RO, IOType.WO) and config.ops_per_open < 2:
        return False
    return True


def expand_grid(dimensions: dict[str, list]) -> list[WorkloadConfig]:
    """Cartesian product of per-dimension value lists, feasible points only."""
    names = list(dimensions)
    for name in names:
        if name not in _GRID_FIELDS:
            raise ValueError(f"unknown grid dimension {name!r}")
        if not dimensions[name]:
            raise ValueError(f"grid dimension {name!r} has no values")
    configs: list[WorkloadConfig] = []

    def rec(pos: int, chosen: dict):
        if pos == len(names):
            config = WorkloadConfig(**chosen)
            if feasible(config):
                configs.append(config)
            return
        name = names[pos]
        for value in dimensions[name]:
            chosen[name] = value
            rec(pos + 1, chosen)
        del chosen[name]

    rec(0, {})
    return configs


def load_grid(path: str | Path) -> list[WorkloadConfig]:
    """Parse a grid file: one dimension per line, ``name value value...``."""
    dimensions: dict[str, list] = {}
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
        if first != GRID_HEADER:
            raise ValueError(f"missing grid header {GRID_HEADER!r}")
        for lineno, raw in enumerate(fh, start=2):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            name, values = parts[0], parts[1:]
            if name not in _GRID_FIELDS:
                raise ValueError(f"line {lineno}: unknown dimension {name!r}")
            if not values:
                raise ValueError(f"line {lineno}: dimension {name!r} has no values")
            conv = _GRID_FIELDS[name]
            if name in _BOOL_GRID_FIELDS:
                for v in values:
                    if v not in ("true", "false"):
                        raise ValueError(
                            f"line {lineno}: boolean dimension {name!r} "
                            f"takes true/false, got {v!r}"
                        )
            dimensions[name] = [conv(v) for v in values]
    return expand_grid(dimensions)


def default_grid() -> list[WorkloadConfig]:
    """The stock sweep grid: 1440 feasible configurations.

    Five transfer sizes spanning the tier crossover, all six read/write
    classes, the three interfaces (collective variants for MPI-IO),
    shared-file and per-process layouts, and two session lengths.
    """
    return expand_grid(
        {
            "interface": [Interface.POSIX, Interface.MPIIO, Interface.HDF5],
            "collective": [False, True],
            "transfer_size": [4 * KIB, 64 * KIB, MIB, 4 * MIB, 16 * MIB],
            "ops_per_open": [4, 16],
            "io_type": [IOType.RO, IOType.WO, IOType.RAR, IOType.RAW,
                        IOType.WAR, IOType.WAW],
            "random_access": [False, True],
            "files": [FileLayout.FILE_PER_PROCESS, FileLayout.SHARED_FILE],
            "unique_dir": [False, True],
            "ranks": [8],
            "ranks_per_node": [4],
        }
    )


def grid_to_text(dimensions: dict[str, list]) -> str:
    lines = [GRID_HEADER]
    for name, values in dimensions.items():
        rendered = []
        for v in values:
            if isinstance(v, bool):
                rendered.append("true" if v else "false")
            elif isinstance(v, enum.Enum):
                rendered.append(v.value)
            else:
                rendered.append(str(v))
        lines.append(f"{name} {' '.join(rendered)}")
    return "\n".join(lines) + "\n"
