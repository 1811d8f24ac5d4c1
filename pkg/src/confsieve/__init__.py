"""confsieve: find the files that hold configuration state.

Given file-access traces and per-file version histories, the package
filters out files that cannot hold persistent application state, scores
the rest by how similar their versions are to each other (configuration
changes slowly; task and timer state churns), and uses the scores to rank
rollback candidates and to decide which version logs to evict first under
a space quota.
"""

from .chunks import (
    ChunkerConfig,
    ChunkHistogram,
    ScoreMode,
    SimilarityScore,
    accumulate,
    anchor_positions,
    chunk_boundaries,
    chunk_version,
    score_file,
    similarity,
)
from .entries import (
    DataEntry,
    EntryHistoryReport,
    classify_config_entries,
    entry_history,
    entry_history_from_versions,
    longest_common_substring,
    match_changes,
    split_fragments,
)
from .errors import (
    BinaryContentError,
    ConfsieveError,
    EmptyLogError,
    LabelMismatchError,
    StoreFormatError,
    TimestampOrderingError,
    TraceParseError,
    VersionNotFoundError,
)
from .filters import (
    FailedFilter,
    FilterConfig,
    FilterVerdict,
    apply_filters,
    passes_persistence,
    passes_read_before_write,
    passes_user_data,
)
from .harness import (
    Metrics,
    RocPoint,
    RocResult,
    WorkloadSpec,
    confusion,
    generate_workload,
    roc_curve,
)
from .store import EvictionReport, FileVersion, VersionLog, VersionStore
from .trace import (
    AccessEvent,
    AccessStats,
    Op,
    build_stats,
    capture_snapshot,
    iter_trace,
    parse_event,
)
from .trigger import TriggerConfig, sample_indices, trigger_point

__version__ = "0.1.0"
