"""Labeled datasets: tier labels from paired bandwidths, splits, CSV I/O.

The label compares the same workload measured (or simulated) on both
storage tiers; ties go to the parallel file system because the burst
buffer is the scarce opt-in resource.
"""

from __future__ import annotations

import csv
import enum
import io
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Sequence

from .features import FeatureSchema, FileFeatures


class Tier(str, enum.Enum):
    PFS = "PFS"
    BB = "BB"


class DatasetFormatError(ValueError):
    """A dataset CSV violates the format contract."""


@dataclass(frozen=True, slots=True)
class Sample:
    vector: tuple[float, ...]
    label: Tier
    source: str = ""
    bw_pfs: float | None = None
    bw_bb: float | None = None


@dataclass(frozen=True)
class Dataset:
    schema: FeatureSchema
    samples: tuple[Sample, ...]

    @property
    def width(self) -> int:
        return self.schema.width

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def __post_init__(self):
        for i, s in enumerate(self.samples):
            if len(s.vector) != self.schema.width:
                raise DatasetFormatError(
                    f"sample {i}: vector width {len(s.vector)} != "
                    f"schema width {self.schema.width}"
                )


def label_pair(bw_pfs: float, bw_bb: float) -> Tier:
    """Tier with the better bandwidth; ties resolve to PFS."""
    if bw_pfs < 0 or bw_bb < 0:
        raise ValueError(
            f"bandwidths must be non-negative, got ({bw_pfs}, {bw_bb})"
        )
    return Tier.BB if bw_bb > bw_pfs else Tier.PFS


def mean_bandwidth(values: Sequence[float]) -> float:
    """Optional pre-labeling reducer for repeated measurements."""
    if not values:
        raise ValueError("no bandwidth values to average")
    return sum(values) / len(values)


def build_dataset(
    schema: FeatureSchema,
    paired_runs: Iterable[tuple[FileFeatures, float, float]],
) -> Dataset:
    """One labeled sample per (features, bw_pfs, bw_bb) pair, in order."""
    samples: list[Sample] = []
    for i, (features, bw_pfs, bw_bb) in enumerate(paired_runs):
        try:
            vector = tuple(schema.encode(features))
        except ValueError as exc:
            raise type(exc)(f"pair {i}: {exc}") from exc
        samples.append(
            Sample(
                vector=vector,
                label=label_pair(bw_pfs, bw_bb),
                source=features.file or f"pair-{i}",
                bw_pfs=bw_pfs,
                bw_bb=bw_bb,
            )
        )
    return Dataset(schema=schema, samples=tuple(samples))


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split(
    dataset: Dataset, test_fraction: float, seed: int
) -> tuple[Dataset, Dataset]:
    """Deterministic shuffled train/test partition.

    Test size is round-half-up(n * test_fraction). The shuffled order is
    fixed by the seed; the test block is cut from the front for
    fractions up to one half and from the back above it, so
    complementary fractions induce the same partition with the roles of
    the two outputs swapped (exact whenever n * test_fraction is not an
    exact half).
    """
    n = len(dataset.samples)
    if n < 2:
        raise ValueError(f"need at least 2 samples to split, got {n}")
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    k = _round_half_up(n * test_fraction)
    perm = list(range(n))
    random.Random(seed).shuffle(perm)
    if test_fraction <= 0.5:
        test_idx, train_idx = perm[:k], perm[k:]
    else:
        test_idx, train_idx = perm[n - k:], perm[: n - k]
    train = Dataset(
        schema=dataset.schema,
        samples=tuple(dataset.samples[i] for i in sorted(train_idx)),
    )
    test = Dataset(
        schema=dataset.schema,
        samples=tuple(dataset.samples[i] for i in sorted(test_idx)),
    )
    return train, test


def _fmt_float(value: float) -> str:
    # Shortest representation that round-trips, so CSV I/O is lossless.
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def dataset_to_csv(dataset: Dataset) -> str:
    """Render the dataset with the documented header
    ``col_0,...,col_{n-1},label,bw_pfs,bw_bb,source``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    width = dataset.schema.width
    w.writerow(
        [f"col_{i}" for i in range(width)] + ["label", "bw_pfs", "bw_bb", "source"]
    )
    for s in dataset.samples:
        row = [_fmt_float(v) for v in s.vector]
        row.append(s.label.value)
        row.append("-" if s.bw_pfs is None else _fmt_float(s.bw_pfs))
        row.append("-" if s.bw_bb is None else _fmt_float(s.bw_bb))
        row.append(s.source)
        w.writerow(row)
    return buf.getvalue()


def dataset_from_csv(source: str | IO[str], schema: FeatureSchema) -> Dataset:
    """Parse a dataset CSV against a schema.

    Accepts both the full header (with provenance columns) and the
    minimal ``col_*,label`` form. Field-count and width mismatches
    raise DatasetFormatError with the row number.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise DatasetFormatError("empty document: missing header row")
    width = sum(1 for name in header if name.startswith("col_"))
    if width != schema.width:
        raise DatasetFormatError(
            f"header has {width} feature columns, schema expects {schema.width}"
        )
    if "label" not in header:
        raise DatasetFormatError("header lacks a 'label' column")
    expected = len(header)
    has_provenance = "bw_pfs" in header
    samples: list[Sample] = []
    for rowno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != expected:
            raise DatasetFormatError(
                f"row {rowno}: expected {expected} fields, got {len(row)}"
            )
        try:
            vector = tuple(float(v) for v in row[:width])
        except ValueError as exc:
            raise DatasetFormatError(f"row {rowno}: {exc}")
        try:
            label = Tier(row[width])
        except ValueError:
            raise DatasetFormatError(
                f"row {rowno}: unknown label {row[width]!r}"
            )
        if has_provenance:
            bw_pfs = None if row[width + 1] == "-" else float(row[width + 1])
            bw_bb = None if row[width + 2] == "-" else float(row[width + 2])
            source_id = row[width + 3]
        else:
            bw_pfs = bw_bb = None
            source_id = ""
        samples.append(
            Sample(
                vector=vector,
                label=label,
                source=source_id,
                bw_pfs=bw_pfs,
                bw_bb=bw_bb,
            )
        )
    return Dataset(schema=schema, samples=tuple(samples))


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dataset_to_csv(dataset))


def load_dataset(path: str | Path, schema: FeatureSchema) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        return dataset_from_csv(fh, schema)
