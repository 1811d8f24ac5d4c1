"""Synthetic workload generation with ground truth, and the evaluation
accounting: confusion counts, versions/bytes eliminated, ROC points.

The generator plants five file archetypes that mirror how desktop
applications actually touch state:

* CONFIG     a large stable core of key=value lines, a timestamp line
             rewritten on every save, and rare value edits; saves spread
             over many hours (true configuration state).
* TASK       heavy line churn per version (session/history state); a few
             files instead burst many small edits inside one period, the
             classic way short-lived activity masquerades as stable state.
* TIME       counters and timestamps only, fully rewritten every version.
* TEMP       written a few times and then unlinked.
* USERDATA   documents under the user home with no hidden directory in
             the path.

Every generated path carries a ground-truth label (CONFIG archetype files
are configuration, nothing else is), so filter and score quality can be
measured exactly.  Generation is deterministic in (spec, seed) down to the
store bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, TextIO

import numpy as np

from .errors import LabelMismatchError, TraceParseError
from .store import VersionStore
from .trace import Op

__all__ = [
    "WorkloadSpec",
    "GeneratedCorpus",
    "Metrics",
    "RocPoint",
    "RocResult",
    "generate_workload",
    "confusion",
    "roc_curve",
    "read_workload_spec",
    "read_labels",
    "write_labels",
    "DEFAULT_THRESHOLDS",
]

NS_PER_HOUR = 3_600_000_000_000
NS_PER_MINUTE = 60_000_000_000

CORPUS_EPOCH_NS = 1_700_000_000_000_000_000

HOME_PREFIX = "/home/user"


@dataclass(frozen=True)
class WorkloadSpec:
    """Counts per archetype plus the knobs that shape version histories."""

    config_files: int = 10
    task_files: int = 25
    time_files: int = 15
    temp_files: int = 10
    userdata_files: int = 10
    versions_min: int = 12
    versions_max: int = 40
    # fraction of TASK files whose versions burst inside a single sampling
    # period with small per-version deltas
    task_burst_fraction: float = 0.2
    mean_gap_hours: float = 5.0

    def __post_init__(self) -> None:
        for name in ("config_files", "task_files", "time_files", "temp_files", "userdata_files"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not 1 <= self.versions_min <= self.versions_max:
            raise ValueError("need 1 <= versions_min <= versions_max")
        if not 0.0 <= self.task_burst_fraction <= 1.0:
            raise ValueError("task_burst_fraction must be within [0, 1]")
        if self.mean_gap_hours <= 0:
            raise ValueError("mean_gap_hours must be positive")


@dataclass
class GeneratedCorpus:
    store: VersionStore
    trace_path: Path
    labels_path: Path
    labels: dict[str, bool]
    archetype_by_path: dict[str, str]


_WORD_CHARS = np.frombuffer(b"abcdefghijklmnopqrstuvwxyz0123456789", dtype=np.uint8)


def _token(rng: np.random.Generator, low: int = 6, high: int = 28) -> str:
    length = int(rng.integers(low, high + 1))
    return bytes(_WORD_CHARS[rng.integers(0, len(_WORD_CHARS), length)]).decode("ascii")


def _setting_line(rng: np.random.Generator) -> str:
    return f"{_token(rng, 4, 16)}.{_token(rng, 4, 12)}={_token(rng, 8, 40)}"


class _EventSink:
    def __init__(self) -> None:
        self.rows: list[tuple[int, str, str, str]] = []

    def emit(self, ts: int, app: str, op: Op, path: str) -> None:
        self.rows.append((ts, path, app, op.value))

    def write(self, fh: TextIO) -> None:
        fh.write("# timestamp_ns\tapp\top\tpath\n")
        for ts, path, app, op in sorted(self.rows):
            fh.write(f"{ts}\t{app}\t{op}\t{path}\n")


def _write_session(sink: _EventSink, ts: int, app: str, path: str, write_first: bool) -> None:
    sink.emit(ts, app, Op.OPEN_RW, path)
    if write_first:
        sink.emit(ts + 1, app, Op.WRITE, path)
        sink.emit(ts + 2, app, Op.READ, path)
    else:
        sink.emit(ts + 1, app, Op.READ, path)
        sink.emit(ts + 2, app, Op.WRITE, path)
    sink.emit(ts + 3, app, Op.CLOSE, path)


def _read_session(sink: _EventSink, ts: int, app: str, path: str) -> None:
    sink.emit(ts, app, Op.OPEN_READ, path)
    sink.emit(ts + 1, app, Op.READ, path)
    sink.emit(ts + 2, app, Op.CLOSE, path)


def _gap_ns(rng: np.random.Generator, mean_hours: float) -> int:
    # lognormal around the mean keeps occasional sub-period gaps in play
    return max(NS_PER_MINUTE, int(rng.lognormal(math.log(mean_hours), 0.6) * NS_PER_HOUR))


def _gen_config(rng, spec, path, app, store, sink, start_ns) -> None:
    lines = [_setting_line(rng) for _ in range(int(rng.integers(60, 141)))]
    low = min(spec.versions_min + 4, spec.versions_max)
    versions = int(rng.integers(low, spec.versions_max + 1))
    ts = start_ns
    for v in range(versions):
        if v and rng.random() < 0.10:
            lines[int(rng.integers(0, len(lines)))] = _setting_line(rng)
        content = "\n".join(lines + [f"last_update={ts}"]) + "\n"
        _write_session(sink, ts, app, path, write_first=False)
        store.append_version(path, ts + 2, content.encode("ascii"))
        if rng.random() < 0.3:
            _read_session(sink, ts + 1000, app, path)
        ts += _gap_ns(rng, spec.mean_gap_hours)


def _gen_task(rng, spec, path, app, store, sink, start_ns, burst: bool, near_threshold: bool) -> None:
    # burst files are big and barely change per save, so rapid-fire saves
    # leave them looking almost as stable as real configuration
    line_count = int(rng.integers(150, 251)) if burst else int(rng.integers(40, 101))
    lines = [_setting_line(rng) for _ in range(line_count)]
    versions = int(rng.integers(spec.versions_min, spec.versions_max + 1))
    churn = 0.01 if burst else float(rng.uniform(0.60, 0.85))
    ts = start_ns
    for v in range(versions):
        if v:
            edits = max(1, int(round(churn * line_count)))
            for slot in rng.choice(line_count, size=min(edits, line_count), replace=False):
                lines[int(slot)] = _setting_line(rng)
        content = "\n".join(lines) + "\n"
        write_first = near_threshold and rng.random() < 0.15
        _write_session(sink, ts, app, path, write_first=write_first)
        store.append_version(path, ts + 2, content.encode("ascii"))
        if burst:
            ts += int(rng.integers(30, 301)) * 1_000_000_000  # seconds apart
        else:
            ts += _gap_ns(rng, spec.mean_gap_hours * 0.7)


def _gen_time(rng, spec, path, app, store, sink, start_ns) -> None:
    versions = int(rng.integers(spec.versions_min, spec.versions_max + 1))
    counters = int(rng.integers(2, 6))
    names = [_token(rng, 5, 12) for _ in range(counters)]
    ts = start_ns
    for v in range(versions):
        body = "".join(f"{name}={int(rng.integers(0, 1 << 30))}\n" for name in names)
        content = body + f"last_run={ts}\n"
        _write_session(sink, ts, app, path, write_first=False)
        store.append_version(path, ts + 2, content.encode("ascii"))
        ts += _gap_ns(rng, spec.mean_gap_hours)


def _gen_temp(rng, spec, path, app, store, sink, start_ns) -> None:
    versions = int(rng.integers(1, 6))
    ts = start_ns
    for v in range(versions):
        content = f"pid={int(rng.integers(1, 65536))}\nnonce={_token(rng)}\n"
        sink.emit(ts, app, Op.OPEN_WRITE, path)
        sink.emit(ts + 1, app, Op.WRITE, path)
        sink.emit(ts + 2, app, Op.CLOSE, path)
        store.append_version(path, ts + 1, content.encode("ascii"))
        ts += _gap_ns(rng, 1.0)
    sink.emit(ts, app, Op.UNLINK, path)


def _gen_userdata(rng, spec, path, app, store, sink, start_ns) -> None:
    paragraphs = [
        " ".join(_token(rng, 3, 10) for _ in range(int(rng.integers(30, 80))))
        for _ in range(int(rng.integers(4, 10)))
    ]
    versions = int(rng.integers(2, 9))
    ts = start_ns
    for v in range(versions):
        if v:
            paragraphs[int(rng.integers(0, len(paragraphs)))] = " ".join(
                _token(rng, 3, 10) for _ in range(int(rng.integers(30, 80)))
            )
        content = "\n\n".join(paragraphs) + "\n"
        _write_session(sink, ts, app, path, write_first=False)
        store.append_version(path, ts + 2, content.encode("ascii"))
        ts += _gap_ns(rng, spec.mean_gap_hours * 2)


def generate_workload(spec: WorkloadSpec, seed: int, out_dir) -> GeneratedCorpus:
    """Build a store, a trace file and a labels file under `out_dir`.

    The same (spec, seed) always produces byte-identical artifacts.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    store = VersionStore(out_dir / "store")
    sink = _EventSink()
    master = np.random.default_rng(seed)
    labels: dict[str, bool] = {}
    archetypes: dict[str, str] = {}

    def plan(kind: str, count: int) -> Iterable[tuple[str, str, str, np.random.Generator, int]]:
        for i in range(count):
            child = np.random.default_rng(int(master.integers(0, 2**63)))
            offset = int(master.integers(0, 12 * NS_PER_HOUR))
            app = f"app{kind.lower()}{i:02d}"
            yield kind, f"{i:02d}", app, child, CORPUS_EPOCH_NS + offset

    burst_count = int(round(spec.task_files * spec.task_burst_fraction))
    for kind, tag, app, rng, start in plan("CONFIG", spec.config_files):
        path = f"{HOME_PREFIX}/.config/{app}/settings{tag}.conf"
        _gen_config(rng, spec, path, app, store, sink, start)
        labels[path], archetypes[path] = True, "CONFIG"
    for index, (kind, tag, app, rng, start) in enumerate(plan("TASK", spec.task_files)):
        path = f"{HOME_PREFIX}/.local/share/{app}/session{tag}.dat"
        burst = index < burst_count
        near_threshold = index >= spec.task_files - 2
        _gen_task(rng, spec, path, app, store, sink, start, burst, near_threshold)
        labels[path], archetypes[path] = False, "TASK"
    for kind, tag, app, rng, start in plan("TIME", spec.time_files):
        path = f"{HOME_PREFIX}/.{app}/counters{tag}"
        _gen_time(rng, spec, path, app, store, sink, start)
        labels[path], archetypes[path] = False, "TIME"
    for kind, tag, app, rng, start in plan("TEMP", spec.temp_files):
        path = f"{HOME_PREFIX}/.{app}/lock{tag}.tmp"
        _gen_temp(rng, spec, path, app, store, sink, start)
        labels[path], archetypes[path] = False, "TEMP"
    for kind, tag, app, rng, start in plan("USERDATA", spec.userdata_files):
        path = f"{HOME_PREFIX}/documents/report{tag}.txt"
        _gen_userdata(rng, spec, path, app, store, sink, start)
        labels[path], archetypes[path] = False, "USERDATA"

    trace_path = out_dir / "trace.tsv"
    with trace_path.open("w", encoding="utf-8", newline="\n") as fh:
        sink.write(fh)
    labels_path = out_dir / "labels.tsv"
    with labels_path.open("w", encoding="utf-8", newline="\n") as fh:
        write_labels(labels, fh)
    return GeneratedCorpus(
        store=store,
        trace_path=trace_path,
        labels_path=labels_path,
        labels=labels,
        archetype_by_path=archetypes,
    )


# --- workload spec / labels files -------------------------------------------

_SPEC_KEYS = {
    "config": "config_files",
    "task": "task_files",
    "time": "time_files",
    "temp": "temp_files",
    "userdata": "userdata_files",
    "versions_min": "versions_min",
    "versions_max": "versions_max",
}


def read_workload_spec(fh: TextIO) -> WorkloadSpec:
    """key=value lines; keys: config task time temp userdata versions_min
    versions_max; `#` comments."""
    values: dict[str, int] = {}
    for lineno, line in enumerate(fh, 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        key = key.strip()
        if not sep or key not in _SPEC_KEYS:
            raise TraceParseError(f"workload spec line {lineno}: unknown entry {stripped!r}")
        try:
            values[_SPEC_KEYS[key]] = int(value.strip())
        except ValueError:
            raise TraceParseError(f"workload spec line {lineno}: bad count {value!r}") from None
    try:
        return WorkloadSpec(**values)
    except ValueError as exc:
        raise TraceParseError(f"workload spec: {exc}") from None


def write_labels(labels: Mapping[str, bool], fh: TextIO) -> None:
    for path in sorted(labels):
        fh.write(f"{path}\t{'config' if labels[path] else 'nonconfig'}\n")


def read_labels(fh: TextIO) -> dict[str, bool]:
    labels: dict[str, bool] = {}
    for lineno, line in enumerate(fh, 1):
        stripped = line.rstrip("\n")
        if not stripped or stripped.startswith("#"):
            continue
        fields = stripped.split("\t")
        if len(fields) != 2 or fields[1] not in ("config", "nonconfig"):
            raise TraceParseError(f"labels line {lineno}: expected path<TAB>config|nonconfig")
        labels[fields[0]] = fields[1] == "config"
    return labels


# --- metrics -----------------------------------------------------------------

DEFAULT_THRESHOLDS = (0.95, 0.90, 0.80, 0.70, 0.60)


@dataclass(frozen=True)
class Metrics:
    """Confusion counts at one threshold plus elimination accounting.

    versions_eliminated and bytes_saved are (eliminated, total) pairs over
    non-configuration files; the totals count every non-configuration
    file, filtered or not.
    """

    tp: int
    fn: int
    fp: int
    versions_eliminated: tuple[int, int]
    bytes_saved: tuple[int, int]

    @property
    def tpr(self) -> float:
        total = self.tp + self.fn
        return self.tp / total if total else 0.0

    def fpr(self, nonconfig_survivors: int) -> float:
        return self.fp / nonconfig_survivors if nonconfig_survivors else 0.0


def _check_keys(scores: Mapping[str, float], labels: Mapping[str, bool]) -> None:
    unscored = sorted(set(labels) - set(scores))
    unlabeled = sorted(set(scores) - set(labels))
    if unscored or unlabeled:
        parts = []
        if unscored:
            parts.append(f"labeled but unscored: {', '.join(unscored)}")
        if unlabeled:
            parts.append(f"scored but unlabeled: {', '.join(unlabeled)}")
        raise LabelMismatchError("; ".join(parts))


def confusion(
    scores: Mapping[str, float],
    labels: Mapping[str, bool],
    threshold: float,
    survivors: Optional[set] = None,
    usage: Optional[Mapping[str, tuple[int, int]]] = None,
) -> Metrics:
    """Confusion counts at one threshold (kept means score strictly above).

    `survivors` is the set of paths that passed the filters; it defaults
    to every scored path.  False positives are counted among surviving
    non-configuration files only.  `usage` maps path -> (version count,
    bytes) and feeds the elimination totals; when absent they are zero.
    """
    _check_keys(scores, labels)
    if survivors is None:
        survivors = set(scores)
    tp = fn = fp = 0
    eliminated_versions = total_versions = 0
    eliminated_bytes = total_bytes = 0
    for path, is_config in labels.items():
        kept = scores[path] > threshold
        if is_config:
            if kept:
                tp += 1
            else:
                fn += 1
        else:
            if kept and path in survivors:
                fp += 1
            versions, size = usage.get(path, (0, 0)) if usage else (0, 0)
            total_versions += versions
            total_bytes += size
            if not kept:
                eliminated_versions += versions
                eliminated_bytes += size
    return Metrics(
        tp=tp,
        fn=fn,
        fp=fp,
        versions_eliminated=(eliminated_versions, total_versions),
        bytes_saved=(eliminated_bytes, total_bytes),
    )


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    metrics: Metrics
    tpr: float
    fpr: float

    def distance_to_ideal(self) -> float:
        return math.hypot(self.fpr, 1.0 - self.tpr)


@dataclass(frozen=True)
class RocResult:
    points: tuple[RocPoint, ...]
    optimal_threshold: float


def roc_curve(
    scores: Mapping[str, float],
    labels: Mapping[str, bool],
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
    survivors: Optional[set] = None,
    usage: Optional[Mapping[str, tuple[int, int]]] = None,
) -> RocResult:
    """One operating point per threshold, plus the threshold whose point
    lies nearest (0, 1) by Euclidean distance (ties keep the higher
    threshold)."""
    if not thresholds:
        raise ValueError("thresholds must not be empty")
    if survivors is None:
        survivors = set(scores)
    nonconfig_survivors = sum(
        1 for path, is_config in labels.items() if not is_config and path in survivors
    )
    points = []
    for threshold in thresholds:
        metrics = confusion(scores, labels, threshold, survivors=survivors, usage=usage)
        points.append(
            RocPoint(
                threshold=threshold,
                metrics=metrics,
                tpr=metrics.tpr,
                fpr=metrics.fpr(nonconfig_survivors),
            )
        )
    best = min(points, key=lambda p: (p.distance_to_ideal(), -p.threshold))
    return RocResult(points=tuple(points), optimal_threshold=best.threshold)
