"""File-access trace parsing, per-path statistics, directory capture.

Trace format: UTF-8 text, one event per line, exactly four tab-separated
fields ``timestamp_ns<TAB>app<TAB>op<TAB>path``.  Lines starting with ``#``
are comments.  Ops form a closed set; anything else is a parse error.

Statistics fold the event stream into per-path counters the filters need:
how often the path was opened, how many of those open-sessions wrote
before reading anything, and whether the path was ever unlinked.  A
session runs from an OPEN_* to its CLOSE, or to the next OPEN_* by the
same app on the same path (traces carry no file descriptors, so that is
the best session boundary available).  A memory map counts as a write,
matching how versions are minted.

Snapshot capture walks a directory tree and appends one version per file
whose content differs from the latest recorded version, which also gives
the natural coalescing of rapid consecutive writes into one version per
capture.
"""

from __future__ import annotations

import enum
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional, TextIO

from .errors import TimestampOrderingError, TraceParseError

__all__ = [
    "Op",
    "AccessEvent",
    "AccessStats",
    "TraceDiagnostics",
    "CaptureReport",
    "parse_event",
    "iter_trace",
    "build_stats",
    "capture_snapshot",
    "read_stats",
    "write_stats",
]


class Op(enum.Enum):
    OPEN_READ = "OPEN_READ"
    OPEN_WRITE = "OPEN_WRITE"
    OPEN_RW = "OPEN_RW"
    READ = "READ"
    WRITE = "WRITE"
    MMAP = "MMAP"
    UNLINK = "UNLINK"
    CLOSE = "CLOSE"


_OPENS = {Op.OPEN_READ, Op.OPEN_WRITE, Op.OPEN_RW}
_DATA_OPS = {Op.READ, Op.WRITE, Op.MMAP}
_WRITE_LIKE = {Op.WRITE, Op.MMAP}


@dataclass(frozen=True)
class AccessEvent:
    timestamp_ns: int
    app: str
    op: Op
    path: str


@dataclass
class AccessStats:
    """Per-path counters derived from the event stream."""

    path: str
    opens: int = 0
    write_before_read_opens: int = 0
    deleted: bool = False
    first_seen: Optional[int] = None
    last_seen: Optional[int] = None

    def write_first_fraction(self) -> float:
        return self.write_before_read_opens / self.opens if self.opens else 0.0


@dataclass
class TraceDiagnostics:
    """Non-fatal oddities: traces are usually lossy at their start."""

    orphan_closes: int = 0
    orphan_data_ops: int = 0


def parse_event(line: str, lineno: int | None = None) -> AccessEvent:
    where = f"line {lineno}" if lineno is not None else "line"
    fields = line.rstrip("\n").split("\t")
    if len(fields) != 4:
        raise TraceParseError(f"{where}: expected 4 tab-separated fields, got {len(fields)}")
    raw_ts, app, raw_op, path = fields
    try:
        timestamp = int(raw_ts)
    except ValueError:
        raise TraceParseError(f"{where}: non-numeric timestamp {raw_ts!r}") from None
    try:
        op = Op(raw_op)
    except ValueError:
        raise TraceParseError(f"{where}: unknown op {raw_op!r}") from None
    if not path:
        raise TraceParseError(f"{where}: empty path")
    return AccessEvent(timestamp_ns=timestamp, app=app, op=op, path=path)


def iter_trace(fh: TextIO) -> Iterator[AccessEvent]:
    """Parse a trace stream, skipping comments and blank lines."""
    for lineno, line in enumerate(fh, 1):
        stripped = line.rstrip("\n")
        if not stripped or stripped.startswith("#"):
            continue
        yield parse_event(stripped, lineno)


class _Session:
    __slots__ = ("open_op", "first_data_is_write", "any_write")

    def __init__(self, open_op: Op) -> None:
        self.open_op = open_op
        self.first_data_is_write: Optional[bool] = None
        self.any_write = False

    def wrote_before_reading(self) -> bool:
        if self.first_data_is_write:
            return True
        return self.open_op is Op.OPEN_WRITE and self.any_write


def build_stats(
    events: Iterable[AccessEvent],
    diagnostics: TraceDiagnostics | None = None,
) -> dict[str, AccessStats]:
    """Fold an ordered event stream into per-path statistics.

    Events must be ordered by timestamp (ties allowed).  A CLOSE or data
    op without a matching open only bumps the diagnostics counters.
    """
    if diagnostics is None:
        diagnostics = TraceDiagnostics()
    stats: dict[str, AccessStats] = {}
    sessions: dict[tuple[str, str], _Session] = {}
    last_ts: Optional[int] = None

    def path_stats(path: str) -> AccessStats:
        if path not in stats:
            stats[path] = AccessStats(path=path)
        return stats[path]

    def finish(key: tuple[str, str]) -> None:
        session = sessions.pop(key, None)
        if session is not None and session.wrote_before_reading():
            stats[key[0]].write_before_read_opens += 1

    for event in events:
        if last_ts is not None and event.timestamp_ns < last_ts:
            raise TimestampOrderingError(
                f"trace regresses to {event.timestamp_ns} after {last_ts}"
            )
        last_ts = event.timestamp_ns
        entry = path_stats(event.path)
        if entry.first_seen is None:
            entry.first_seen = event.timestamp_ns
        entry.last_seen = event.timestamp_ns

        key = (event.path, event.app)
        if event.op in _OPENS:
            finish(key)
            sessions[key] = _Session(event.op)
            entry.opens += 1
        elif event.op in _DATA_OPS:
            session = sessions.get(key)
            if session is None:
                diagnostics.orphan_data_ops += 1
                continue
            if session.first_data_is_write is None:
                session.first_data_is_write = event.op in _WRITE_LIKE
            if event.op in _WRITE_LIKE:
                session.any_write = True
        elif event.op is Op.CLOSE:
            if key in sessions:
                finish(key)
            else:
                diagnostics.orphan_closes += 1
        elif event.op is Op.UNLINK:
            entry.deleted = True

    for key in list(sessions):
        finish(key)
    return stats


# --- stats file round trip -------------------------------------------------

_STATS_HEADER = "# path\topens\twrite_before_read_opens\tdeleted\tfirst_seen\tlast_seen\n"


def write_stats(stats: dict[str, AccessStats], fh: TextIO) -> None:
    fh.write(_STATS_HEADER)
    for path in sorted(stats):
        s = stats[path]
        first = "-" if s.first_seen is None else str(s.first_seen)
        last = "-" if s.last_seen is None else str(s.last_seen)
        deleted = "1" if s.deleted else "0"
        fh.write(
            f"{s.path}\t{s.opens}\t{s.write_before_read_opens}\t{deleted}\t{first}\t{last}\n"
        )


def read_stats(fh: TextIO) -> dict[str, AccessStats]:
    stats: dict[str, AccessStats] = {}
    for lineno, line in enumerate(fh, 1):
        stripped = line.rstrip("\n")
        if not stripped or stripped.startswith("#"):
            continue
        fields = stripped.split("\t")
        if len(fields) != 6:
            raise TraceParseError(f"stats line {lineno}: expected 6 fields, got {len(fields)}")
        path, opens, wbr, deleted, first, last = fields
        if deleted not in ("0", "1"):
            raise TraceParseError(f"stats line {lineno}: deleted must be 0 or 1")
        try:
            stats[path] = AccessStats(
                path=path,
                opens=int(opens),
                write_before_read_opens=int(wbr),
                deleted=deleted == "1",
                first_seen=None if first == "-" else int(first),
                last_seen=None if last == "-" else int(last),
            )
        except ValueError:
            raise TraceParseError(f"stats line {lineno}: malformed counters") from None
    return stats


# --- directory capture -----------------------------------------------------


@dataclass
class CaptureReport:
    appended: int = 0
    skipped: list[str] = field(default_factory=list)


def _content_digest(content: bytes) -> bytes:
    import hashlib

    return hashlib.blake2b(content, digest_size=16).digest()


def capture_snapshot(directory, store, timestamp_ns: int | None = None) -> CaptureReport:
    """Append a version for every regular file whose content changed.

    Unchanged files append nothing, so capturing an unchanged tree twice
    is a no-op.  Unreadable or non-regular entries are skipped and listed
    in the report.  Store keys are resolved absolute paths.
    """
    if timestamp_ns is None:
        timestamp_ns = time.time_ns()
    root = Path(directory)
    report = CaptureReport()
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        for name in sorted(filenames):
            candidate = Path(dirpath) / name
            try:
                if not candidate.is_file():
                    report.skipped.append(str(candidate))
                    continue
                content = candidate.read_bytes()
            except OSError:
                report.skipped.append(str(candidate))
                continue
            key = str(candidate.resolve())
            if key in store and len(store.log(key)) > 0:
                log = store.log(key)
                latest = log.read_version(len(log) - 1)
                if _content_digest(latest) == _content_digest(content):
                    continue
            store.append_version(key, timestamp_ns, content)
            report.appended += 1
    return report
