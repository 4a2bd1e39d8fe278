"""Deterministic CART binary classifier for tier placement.

Training is greedy recursive partitioning on Gini gain. Candidate
thresholds are the midpoints of consecutive distinct sorted values of
each feature; the best split maximizes the gain and ties break toward
the lower feature index, then the lower threshold. The left branch takes
``vector[feature] <= threshold``. Identical inputs always produce
byte-identical serialized models: there is no randomness anywhere in
training, and one-hot columns are just numeric features split at 0.5.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

from .datasets import Dataset, Tier, split

MODEL_HEADER = "tierlens-model v1"


class ModelFormatError(ValueError):
    """A model document cannot be parsed."""


@dataclass(frozen=True, slots=True)
class Leaf:
    label: Tier
    n: int
    class_counts: tuple[int, int]  # (PFS, BB)


@dataclass(frozen=True, slots=True)
class Internal:
    feature_index: int
    threshold: float
    left: "TreeNode"
    right: "TreeNode"
    gain: float
    n: int


TreeNode = Union[Leaf, Internal]


@dataclass(frozen=True)
class TrainConfig:
    max_depth: int = 12
    min_samples_split: int = 2
    min_gain: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")


@dataclass(frozen=True)
class DecisionTree:
    root: TreeNode
    schema_width: int
    config: TrainConfig
    importances: tuple[float, ...]

    def predict(self, vector: Sequence[float]) -> Tier:
        return predict(self, vector)


@dataclass(frozen=True)
class MajorityClassifier:
    """Constant classifier predicting the training majority class."""

    label: Tier

    def predict(self, vector: Sequence[float]) -> Tier:
        return self.label


def gini_from_counts(c0: int, c1: int) -> float:
    """Gini impurity 1 - sum(p^2) from the two class counts."""
    n = c0 + c1
    if n == 0:
        return 0.0
    return 1.0 - (c0 * c0 + c1 * c1) / (n * n)


def split_gain(pc0: int, pc1: int, lc0: int, lc1: int) -> float:
    """Gini gain of splitting (pc0, pc1) into a left part (lc0, lc1)."""
    n = pc0 + pc1
    nl = lc0 + lc1
    nr = n - nl
    rc0 = pc0 - lc0
    rc1 = pc1 - lc1
    return (
        gini_from_counts(pc0, pc1)
        - (nl / n) * gini_from_counts(lc0, lc1)
        - (nr / n) * gini_from_counts(rc0, rc1)
    )


def _best_split(
    vectors: list[tuple[float, ...]],
    labels: list[int],
    indices: list[int],
    width: int,
) -> tuple[int, float, float, list[int], list[int]] | None:
    """Best (feature, threshold, gain, left, right) for a node, or None.

    Features are scanned in ascending index and thresholds in ascending
    order with a strict improvement test, so equal gains resolve to the
    lowest feature index and then the lowest threshold.
    """
    pc1 = sum(labels[i] for i in indices)
    pc0 = len(indices) - pc1
    best: tuple[int, float, float] | None = None
    best_gain = 0.0
    for f in range(width):
        order = sorted(indices, key=lambda i: vectors[i][f])
        lc0 = lc1 = 0
        prev_value = vectors[order[0]][f]
        for pos, i in enumerate(order):
            value = vectors[i][f]
            if value != prev_value:
                threshold = (prev_value + value) / 2.0
                gain = split_gain(pc0, pc1, lc0, lc1)
                if best is None or gain > best_gain:
                    best = (f, threshold, pos)
                    best_gain = gain
                prev_value = value
            if labels[i]:
                lc1 += 1
            else:
                lc0 += 1
    if best is None or best_gain <= 0.0:
        return None
    f, threshold, cut = best
    order = sorted(indices, key=lambda i: vectors[i][f])
    return f, threshold, best_gain, order[:cut], order[cut:]


def fit(train: Dataset, config: TrainConfig | None = None) -> DecisionTree:
    """Train a CART tree on a labeled dataset.

    Recursion stops at node purity, ``max_depth``, ``min_samples_split``
    or when the best gain falls below ``min_gain``. Leaf labels are the
    majority class with ties going to PFS. Importances accumulate
    (node_samples / total_samples) * gain per feature over all internal
    nodes and are normalized to sum to 1 when any split exists.
    """
    if config is None:
        config = TrainConfig()
    if not train.samples:
        raise ValueError("cannot fit on an empty dataset")
    width = train.schema.width
    vectors = [s.vector for s in train.samples]
    labels = [1 if s.label is Tier.BB else 0 for s in train.samples]
    total = len(labels)
    raw_importance = [0.0] * width

    def grow(indices: list[int], depth: int) -> TreeNode:
        c1 = sum(labels[i] for i in indices)
        c0 = len(indices) - c1
        leaf = Leaf(
            label=Tier.BB if c1 > c0 else Tier.PFS,
            n=len(indices),
            class_counts=(c0, c1),
        )
        if c0 == 0 or c1 == 0:
            return leaf
        if depth >= config.max_depth or len(indices) < config.min_samples_split:
            return leaf
        found = _best_split(vectors, labels, indices, width)
        if found is None:
            return leaf
        f, threshold, gain, left_idx, right_idx = found
        if gain < config.min_gain:
            return leaf
        raw_importance[f] += (len(indices) / total) * gain
        return Internal(
            feature_index=f,
            threshold=threshold,
            left=grow(left_idx, depth + 1),
            right=grow(right_idx, depth + 1),
            gain=gain,
            n=len(indices),
        )

    root = grow(list(range(total)), 0)
    total_importance = sum(raw_importance)
    if total_importance > 0.0:
        importances = tuple(v / total_importance for v in raw_importance)
    else:
        importances = tuple(0.0 for _ in range(width))
    return DecisionTree(
        root=root, schema_width=width, config=config, importances=importances
    )


def predict(tree: DecisionTree, vector: Sequence[float]) -> Tier:
    """Root-to-leaf descent; values exactly at a threshold go left."""
    if len(vector) != tree.schema_width:
        raise ValueError(
            f"vector width {len(vector)} != model width {tree.schema_width}"
        )
    node = tree.root
    while isinstance(node, Internal):
        node = node.left if vector[node.feature_index] <= node.threshold else node.right
    return node.label


def accuracy(model, test: Dataset) -> float:
    """Fraction of test samples whose prediction matches the label."""
    if not test.samples:
        raise ValueError("cannot score an empty dataset")
    hits = sum(1 for s in test.samples if model.predict(s.vector) is s.label)
    return hits / len(test.samples)


def majority_baseline(train: Dataset) -> MajorityClassifier:
    """Constant majority-class classifier; ties resolve to PFS."""
    if not train.samples:
        raise ValueError("cannot build a baseline from an empty dataset")
    n_bb = sum(1 for s in train.samples if s.label is Tier.BB)
    n_pfs = len(train.samples) - n_bb
    return MajorityClassifier(label=Tier.BB if n_bb > n_pfs else Tier.PFS)


@dataclass(frozen=True)
class EvalReport:
    accuracies: tuple[float, ...]
    mean: float
    stddev: float
    n_repeats: int


def repeated_eval(
    dataset: Dataset,
    config: TrainConfig | None = None,
    n_repeats: int = 10,
    test_fraction: float = 0.1,
    seed: int = 0,
) -> EvalReport:
    """Train/test ``n_repeats`` times; repeat i splits with seed + i.

    Defaults follow the evaluation protocol used throughout this
    package: ten repeats of a 90-10 split.
    """
    if n_repeats < 1:
        raise ValueError("n_repeats must be >= 1")
    accs: list[float] = []
    for i in range(n_repeats):
        train, test = split(dataset, test_fraction, seed + i)
        model = fit(train, config)
        accs.append(accuracy(model, test))
    mean = sum(accs) / len(accs)
    variance = sum((a - mean) ** 2 for a in accs) / len(accs)
    return EvalReport(
        accuracies=tuple(accs),
        mean=mean,
        stddev=math.sqrt(variance),
        n_repeats=n_repeats,
    )


def _project(dataset: Dataset, indices: Sequence[int]) -> Dataset:
    from .features import FeatureSchema

    return Dataset(
        schema=FeatureSchema.numeric(len(indices)),
        samples=tuple(
            type(s)(
                vector=tuple(s.vector[i] for i in indices),
                label=s.label,
                source=s.source,
                bw_pfs=s.bw_pfs,
                bw_bb=s.bw_bb,
            )
            for s in dataset.samples
        ),
    )


def feature_elimination(
    dataset: Dataset,
    config: TrainConfig | None = None,
    drop_tolerance: float = 0.02,
    *,
    n_repeats: int = 10,
    test_fraction: float = 0.1,
    seed: int = 0,
) -> tuple[list[int], EvalReport]:
    """Recursively drop the least-important feature until accuracy drops.

    Each round fits on the surviving features, removes the one with the
    lowest importance (ties to the lowest index) and re-evaluates with
    :func:`repeated_eval`; the loop stops when the candidate's mean
    accuracy falls more than ``drop_tolerance`` below the best mean seen,
    returning the last feature set before the drop.
    """
    if not dataset.samples:
        raise ValueError("cannot select features on an empty dataset")
    current = list(range(dataset.schema.width))
    report = repeated_eval(
        _project(dataset, current), config, n_repeats, test_fraction, seed
    )
    best = report.mean
    while len(current) > 1:
        tree = fit(_project(dataset, current), config)
        weakest = min(range(len(current)), key=lambda p: (tree.importances[p], p))
        candidate = current[:weakest] + current[weakest + 1:]
        cand_report = repeated_eval(
            _project(dataset, candidate), config, n_repeats, test_fraction, seed
        )
        if cand_report.mean < best - drop_tolerance:
            break
        current = candidate
        report = cand_report
        best = max(best, cand_report.mean)
    return current, report


# ---------------------------------------------------------------------------
# Model persistence: versioned structured text, loadable at runtime.
# ---------------------------------------------------------------------------


def _write_node(node: TreeNode, out: list[str]) -> None:
    if isinstance(node, Leaf):
        out.append(
            f"leaf {node.label.value} {node.n} "
            f"{node.class_counts[0]} {node.class_counts[1]}"
        )
    else:
        out.append(
            f"internal {node.feature_index} {node.threshold!r} "
            f"{node.gain!r} {node.n}"
        )
        _write_node(node.left, out)
        _write_node(node.right, out)


def model_to_text(tree: DecisionTree) -> str:
    lines = [
        MODEL_HEADER,
        f"schema_width {tree.schema_width}",
        f"max_depth {tree.config.max_depth}",
        f"min_samples_split {tree.config.min_samples_split}",
        f"min_gain {tree.config.min_gain!r}",
        f"seed {tree.config.seed}",
        "importances " + " ".join(repr(v) for v in tree.importances),
        "nodes",
    ]
    _write_node(tree.root, lines)
    return "\n".join(lines) + "\n"


def _parse_node(lines: list[str], pos: int, path: str) -> tuple[TreeNode, int]:
    if pos >= len(lines):
        raise ModelFormatError(f"truncated model document at node {path}")
    parts = lines[pos].split()
    if not parts:
        raise ModelFormatError(f"empty node record at node {path}")
    try:
        if parts[0] == "leaf":
            if len(parts) != 5:
                raise ValueError("leaf record needs 4 fields")
            label = Tier(parts[1])
            n = int(parts[2])
            counts = (int(parts[3]), int(parts[4]))
            return Leaf(label=label, n=n, class_counts=counts), pos + 1
        if parts[0] == "internal":
            if len(parts) != 5:
                raise ValueError("internal record needs 4 fields")
            feature = int(parts[1])
            threshold = float(parts[2])
            gain = float(parts[3])
            n = int(parts[4])
            left, nxt = _parse_node(lines, pos + 1, path + ".left")
            right, nxt = _parse_node(lines, nxt, path + ".right")
            return (
                Internal(
                    feature_index=feature,
                    threshold=threshold,
                    left=left,
                    right=right,
                    gain=gain,
                    n=n,
                ),
                nxt,
            )
        raise ValueError(f"unknown node kind {parts[0]!r}")
    except (ValueError, IndexError) as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise ModelFormatError(f"malformed record at node {path}: {exc}")


def model_from_text(text: str) -> DecisionTree:
    lines = text.splitlines()
    if not lines or lines[0] != MODEL_HEADER:
        raise ModelFormatError(f"missing model header {MODEL_HEADER!r}")

    def _field(idx: int, key: str) -> str:
        if idx >= len(lines) or not lines[idx].startswith(key + " "):
            raise ModelFormatError(f"expected '{key}' on line {idx + 1}")
        return lines[idx][len(key) + 1:]

    try:
        schema_width = int(_field(1, "schema_width"))
        config = TrainConfig(
            max_depth=int(_field(2, "max_depth")),
            min_samples_split=int(_field(3, "min_samples_split")),
            min_gain=float(_field(4, "min_gain")),
            seed=int(_field(5, "seed")),
        )
        importance_text = _field(6, "importances").split()
        importances = tuple(float(v) for v in importance_text)
    except ValueError as exc:
        raise ModelFormatError(f"malformed model header fields: {exc}")
    if len(importances) != schema_width:
        raise ModelFormatError(
            f"importances length {len(importances)} != schema_width {schema_width}"
        )
    if len(lines) <= 7 or lines[7] != "nodes":
        raise ModelFormatError("expected 'nodes' marker on line 8")
    node_lines = [ln for ln in lines[8:] if ln.strip()]
    root, consumed = _parse_node(node_lines, 0, "root")
    if consumed != len(node_lines):
        raise ModelFormatError(
            f"{len(node_lines) - consumed} trailing node records after the tree"
        )
    return DecisionTree(
        root=root, schema_width=schema_width, config=config, importances=importances
    )


def save_model(tree: DecisionTree, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(model_to_text(tree))


def load_model(path: str | Path) -> DecisionTree:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_text(fh.read())
