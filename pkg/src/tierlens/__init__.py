"""tierlens: trace-driven I/O analysis and storage-tier placement prediction.

Parse portable I/O traces into an immutable IOFrame, compute per-file
bandwidth/time/sharing reports, extract the per-file feature set, and
train or apply a decision-tree classifier that predicts whether each
file performs better on a burst buffer or on the parallel file system.
"""

from .analysis import (
    BandwidthTable,
    SharingReport,
    TimelineSegment,
    TimeTable,
    humanize_rate,
    io_bandwidth,
    io_time,
    shared_files,
    timeline_segments,
)
from .datasets import (
    Dataset,
    Sample,
    Tier,
    build_dataset,
    dataset_from_csv,
    dataset_to_csv,
    label_pair,
    load_dataset,
    save_dataset,
    split,
)
from .events import (
    Category,
    FrameInvariantError,
    Interface,
    IOFrame,
    OpenCloseSession,
    TraceEvent,
    build_ioframe,
    sessions,
)
from .features import (
    AccessPatternCounts,
    FeatureSchema,
    FileFeatures,
    IOType,
    ReuseVolumes,
    SchemaError,
    access_pattern,
    extract_features,
    group_files_by_features,
    readwrite_pattern,
)
from .iofunctions import classify_function
from .synth import (
    DEFAULT_STORAGE_PARAMS,
    FileLayout,
    StorageParams,
    TierParams,
    WorkloadConfig,
    default_grid,
    expand_grid,
    generate_trace,
    load_grid,
    simulate_bandwidth,
    sweep,
)
from .tracefile import (
    TraceFormatError,
    load_trace,
    parse_trace,
    save_trace,
    write_trace,
)
from .tree import (
    DecisionTree,
    EvalReport,
    TrainConfig,
    accuracy,
    feature_elimination,
    fit,
    load_model,
    majority_baseline,
    predict,
    repeated_eval,
    save_model,
)

__version__ = "0.1.0"
