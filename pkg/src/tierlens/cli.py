"""Command-line orchestration for the full placement workflow.

Subcommands mirror the pipeline stages: ``ingest`` validates a trace,
``analyze``/``features``/``timeline`` report on it, ``synth`` builds a
labeled dataset from the synthetic sweep, ``train`` fits and saves the
classifier, and ``predict`` runs trace -> features -> model -> placement
plan end to end. Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import enum
import fnmatch
import io
import sys
from dataclasses import dataclass, fields as dc_fields, replace
from pathlib import Path

from .analysis import io_bandwidth, io_time, shared_files, timeline_segments
from .datasets import (
    DatasetFormatError,
    Tier,
    load_dataset,
    save_dataset,
)
from .events import Category, FrameInvariantError, IOFrame, build_ioframe
from .features import (
    FeatureSchema,
    FileFeatures,
    SchemaError,
    extract_features,
    group_files_by_features,
)
from .svgtimeline import render_timeline_svg
from .synth import (
    DEFAULT_STORAGE_PARAMS,
    StorageParams,
    default_grid,
    load_grid,
    sweep,
)
from .tracefile import TraceFormatError, load_trace, save_trace
from .tree import (
    DecisionTree,
    ModelFormatError,
    TrainConfig,
    fit,
    load_model,
    repeated_eval,
    save_model,
)


@dataclass(frozen=True)
class CommandResult:
    exit_code: int
    artifacts: tuple[str, ...] = ()


@dataclass(frozen=True)
class PlacementRow:
    group: str
    files: tuple[str, ...]
    features: FileFeatures
    predicted_tier: Tier


@dataclass(frozen=True)
class PlacementPlan:
    rows: tuple[PlacementRow, ...]

    def to_csv(self) -> str:
        feature_names = [
            f.name for f in dc_fields(FileFeatures) if f.name != "file"
        ]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["group", "n_files", "files"] + feature_names
                   + ["predicted_tier"])
        for row in self.rows:
            rendered = [_render_value(getattr(row.features, n))
                        for n in feature_names]
            w.writerow(
                [row.group, len(row.files), ";".join(row.files)]
                + rendered
                + [row.predicted_tier.value]
            )
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [
            f"{'group':<12} {'files':>5} {'io_type':>7} {'mean_xfer':>12} "
            f"{'reads':>6} {'writes':>6}  tier"
        ]
        for row in self.rows:
            f = row.features
            lines.append(
                f"{row.group:<12} {len(row.files):>5} {f.io_type.value:>7} "
                f"{f.transfer_size_mean:>12.2f} {f.num_reads:>6} "
                f"{f.num_writes:>6}  {row.predicted_tier.value}"
            )
        return "\n".join(lines)


def _render_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, float):
        return str(int(value)) if value == int(value) else repr(value)
    return str(value)


def build_placement_plan(
    frame: IOFrame, model: DecisionTree, schema: FeatureSchema
) -> PlacementPlan:
    """Group files by identical features, predict a tier per group."""
    if schema.width != model.schema_width:
        raise SchemaError(
            f"model expects width {model.schema_width}, "
            f"feature schema has width {schema.width}"
        )
    rows = []
    for i, (feats, files) in enumerate(group_files_by_features(frame).items()):
        vector = schema.encode(feats)
        rows.append(
            PlacementRow(
                group=f"group-{i:04d}",
                files=tuple(files),
                features=feats,
                predicted_tier=model.predict(vector),
            )
        )
    return PlacementPlan(rows=tuple(rows))


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1; code 2 is reserved for data errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_filter_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ranks", help="comma-separated rank list, e.g. 0,1,2")
    p.add_argument("--files", help="glob over file paths, e.g. 'job/*.dat'")
    p.add_argument(
        "--category", help="comma-separated categories: read,write,metadata,other"
    )


def _filters_from_args(args, frame: IOFrame) -> dict:
    out: dict = {}
    if args.ranks:
        try:
            out["ranks"] = [int(r) for r in args.ranks.split(",") if r]
        except ValueError:
            raise ValueError(f"bad --ranks list: {args.ranks!r}")
    if args.files:
        out["files"] = [
            f for f in frame.files() if fnmatch.fnmatch(f, args.files)
        ]
    if args.category:
        out["categories"] = [
            Category(c.strip()) for c in args.category.split(",") if c.strip()
        ]
    return out


def _emit(args, text: str) -> None:
    if not getattr(args, "quiet", False):
        print(text)


def _parse_param_overrides(pairs: list[str]) -> StorageParams:
    """Apply ``tier.field=value`` overrides to the default storage params."""
    params = DEFAULT_STORAGE_PARAMS
    for pair in pairs or []:
        if "=" not in pair or "." not in pair.split("=", 1)[0]:
            raise ValueError(
                f"bad --param {pair!r}; expected tier.field=value, "
                "e.g. bb.cache_capacity=67108864"
            )
        key, value = pair.split("=", 1)
        tier_name, field_name = key.split(".", 1)
        if tier_name not in ("pfs", "bb"):
            raise ValueError(f"--param tier must be pfs or bb, got {tier_name!r}")
        tier_params = getattr(params, tier_name)
        if not hasattr(tier_params, field_name):
            raise ValueError(f"unknown storage parameter {field_name!r}")
        if field_name == "metadata_leader_nodes":
            converted: float = int(value)
        else:
            converted = float(value)
        params = replace(params, **{tier_name: replace(tier_params, **{field_name: converted})})
    return params


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_ingest(args) -> CommandResult:
    events = load_trace(args.trace)
    frame = build_ioframe(events)
    artifacts = []
    if args.out:
        save_trace(frame.events, args.out)
        artifacts.append(args.out)
    lo, hi = frame.epoch_span
    _emit(
        args,
        f"{len(frame)} events, {len(frame.ranks())} ranks, "
        f"{len(frame.files())} files, span [{lo:.9f}, {hi:.9f}]",
    )
    return CommandResult(0, tuple(artifacts))


def cmd_analyze(args) -> CommandResult:
    frame = build_ioframe(load_trace(args.trace))
    filters = _filters_from_args(args, frame)
    if args.report == "bandwidth":
        table = io_bandwidth(frame, group_by=args.group_by, **filters)
    elif args.report == "time":
        table = io_time(frame, **filters)
    else:
        table = shared_files(frame)
    artifacts = []
    if args.out:
        Path(args.out).write_text(table.to_csv(), encoding="utf-8")
        artifacts.append(args.out)
    _emit(args, table.to_text())
    return CommandResult(0, tuple(artifacts))


def cmd_features(args) -> CommandResult:
    frame = build_ioframe(load_trace(args.trace))
    feature_names = [f.name for f in dc_fields(FileFeatures)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(feature_names)
    lines = []
    for file in frame.files():
        feats = extract_features(frame, file)
        w.writerow([_render_value(getattr(feats, n)) for n in feature_names])
        lines.append(
            f"{file:<40} {feats.io_type.value:>6} "
            f"{feats.transfer_size_mean:>12.2f} r={feats.num_reads} "
            f"w={feats.num_writes}"
        )
    artifacts = []
    if args.out:
        Path(args.out).write_text(buf.getvalue(), encoding="utf-8")
        artifacts.append(args.out)
    _emit(args, "\n".join(lines) if lines else "no files in trace")
    return CommandResult(0, tuple(artifacts))


def cmd_timeline(args) -> CommandResult:
    frame = build_ioframe(load_trace(args.trace))
    filters = _filters_from_args(args, frame)
    segments = timeline_segments(frame, **filters)
    svg = render_timeline_svg(segments)
    Path(args.out).write_text(svg, encoding="utf-8", newline="\n")
    _emit(args, f"wrote {args.out}: {len(segments)} segments")
    return CommandResult(0, (args.out,))


def cmd_dataset(args) -> CommandResult:
    schema = _schema_for_csv(args.data)
    dataset = load_dataset(args.data, schema)
    n_bb = sum(1 for s in dataset.samples if s.label is Tier.BB)
    artifacts = []
    if args.out:
        save_dataset(dataset, args.out)
        artifacts.append(args.out)
    _emit(
        args,
        f"{len(dataset)} samples x {dataset.width} features "
        f"(BB {n_bb}, PFS {len(dataset) - n_bb})",
    )
    return CommandResult(0, tuple(artifacts))


def _schema_for_csv(path: str) -> FeatureSchema:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
    width = sum(1 for name in header.split(",") if name.startswith("col_"))
    default = FeatureSchema.default()
    return default if width == default.width else FeatureSchema.numeric(width)


def cmd_train(args) -> CommandResult:
    schema = _schema_for_csv(args.data)
    dataset = load_dataset(args.data, schema)
    if not dataset.samples:
        raise DatasetFormatError(f"{args.data}: dataset is empty")
    config = TrainConfig(max_depth=args.max_depth, seed=args.seed)
    report = repeated_eval(
        dataset, config, args.repeats, args.test_fraction, args.seed
    )
    model = fit(dataset, config)
    save_model(model, args.out)
    _emit(
        args,
        f"held-out accuracy over {report.n_repeats} repeats: "
        f"mean {report.mean:.4f}, stddev {report.stddev:.4f}",
    )
    names = schema.column_names()
    ranked = sorted(
        zip(names, model.importances), key=lambda kv: kv[1], reverse=True
    )
    for name, imp in ranked:
        if imp > 0:
            _emit(args, f"  {imp:.4f}  {name}")
    _emit(args, f"model saved to {args.out}")
    return CommandResult(0, (args.out,))


def cmd_predict(args) -> CommandResult:
    frame = build_ioframe(load_trace(args.trace))
    model = load_model(args.model)
    plan = build_placement_plan(frame, model, FeatureSchema.default())
    artifacts = []
    if args.out:
        Path(args.out).write_text(plan.to_csv(), encoding="utf-8")
        artifacts.append(args.out)
    _emit(args, plan.to_text())
    return CommandResult(0, tuple(artifacts))


def cmd_synth(args) -> CommandResult:
    grid = load_grid(args.grid) if args.grid else default_grid()
    if not grid:
        print("tierlens: error: workload grid is empty", file=sys.stderr)
        return CommandResult(1)
    params = _parse_param_overrides(args.param)
    dataset = sweep(grid, params, seed=args.seed)
    save_dataset(dataset, args.out)
    n_bb = sum(1 for s in dataset.samples if s.label is Tier.BB)
    _emit(
        args,
        f"swept {len(grid)} configurations -> {args.out} "
        f"(BB {n_bb}, PFS {len(dataset) - n_bb})",
    )
    return CommandResult(0, (args.out,))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tierlens", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--quiet", action="store_true",
                       help="suppress non-error output")
        return p

    p = add("ingest", cmd_ingest, "parse and validate a trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--out", help="write the canonicalized trace here")

    p = add("analyze", cmd_analyze, "aggregated bandwidth/time/sharing report")
    p.add_argument("--trace", required=True)
    p.add_argument("--report", required=True,
                   choices=["bandwidth", "time", "shared"])
    p.add_argument("--group-by", default="file_rank",
                   choices=["file_rank", "file"])
    p.add_argument("--out", help="write the report CSV here")
    _add_filter_flags(p)

    p = add("features", cmd_features, "per-file feature extraction report")
    p.add_argument("--trace", required=True)
    p.add_argument("--out", help="write the feature CSV here")

    p = add("timeline", cmd_timeline, "render the rank timeline to SVG")
    p.add_argument("--trace", required=True)
    p.add_argument("--out", required=True)
    _add_filter_flags(p)

    p = add("dataset", cmd_dataset, "inspect or canonicalize a dataset CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--out", help="rewrite the dataset canonically here")

    p = add("train", cmd_train, "train and save the placement classifier")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-depth", type=int, default=12)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--test-fraction", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)

    p = add("predict", cmd_predict, "predict per-file tier placement")
    p.add_argument("--trace", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", help="write the placement plan CSV here")

    p = add("synth", cmd_synth, "sweep synthetic workloads into a dataset")
    p.add_argument("--grid", help="grid file (defaults to the stock grid)")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--param", action="append",
                   help="storage override tier.field=value (repeatable)")

    return parser


def run(argv=None) -> CommandResult:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 1
        return CommandResult(exit_code=code)
    try:
        return args.func(args)
    except (
        TraceFormatError,
        FrameInvariantError,
        DatasetFormatError,
        ModelFormatError,
        SchemaError,
        ValueError,
        KeyError,
        OSError,
    ) as exc:
        print(f"tierlens: error: {exc}", file=sys.stderr)
        return CommandResult(exit_code=2)


def main(argv=None) -> int:
    return run(argv).exit_code


if __name__ == "__main__":
    sys.exit(main())
