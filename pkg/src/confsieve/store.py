"""Append-only per-file version logs with quota-driven eviction.

A store is a directory holding one log file per shadowed path plus an
`index` file mapping each path to its log filename (UTF-8 text, one
``path<TAB>logfile`` pair per line).

Log file layout (all integers little-endian):

    file header   magic "SAICLOG1" (8 bytes), format version u32
    record        index u64, timestamp_ns u64, content_length u64,
                  content bytes, crc u32 (CRC-32 of the 24 header bytes
                  plus the content)

Versions are full-content snapshots: indices are dense from 0, timestamps
never decrease, and reads return the appended bytes exactly.  Rollback
restores a version into the working tree via a temp file and rename; it
never rewrites history.  When the store must shrink below a quota, whole
logs are dropped in ascending score order (unscored logs first, ties
broken by larger size, then path).

Concurrency: one writer per log; readers of already-appended versions are
safe, and distinct logs are independent.  Eviction assumes it has the
store to itself.  No cross-process locking is attempted.
"""

from __future__ import annotations

import hashlib
import os
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Mapping

from .errors import (
    StoreFormatError,
    TimestampOrderingError,
    VersionNotFoundError,
)

__all__ = ["FileVersion", "VersionLog", "VersionStore", "EvictionReport", "EvictedLog"]

MAGIC = b"SAICLOG1"
FORMAT_VERSION = 1

_FILE_HEADER = struct.Struct("<8sI")
_RECORD_HEADER = struct.Struct("<QQQ")
_CRC = struct.Struct("<I")

INDEX_FILENAME = "index"

# Score assigned during eviction to logs the caller did not score; it sorts
# below every real score so unscored logs are reclaimed first.
UNSCORED_SENTINEL = -1.0


@dataclass(frozen=True)
class FileVersion:
    """One immutable snapshot of a file."""

    index: int
    timestamp_ns: int
    content: bytes

    @property
    def content_length(self) -> int:
        return len(self.content)


@dataclass(frozen=True)
class EvictedLog:
    path: str
    versions_removed: int
    bytes_freed: int


@dataclass(frozen=True)
class EvictionReport:
    evicted: tuple[EvictedLog, ...]
    remaining_bytes: int

    @property
    def bytes_freed(self) -> int:
        return sum(e.bytes_freed for e in self.evicted)


class VersionLog:
    """Handle on one path's log file.

    Record offsets and timestamps are indexed in memory at open; contents
    stay on disk until read.
    """

    def __init__(self, path: str, log_file: Path, owner_app: str = "") -> None:
        self.path = path
        self.log_file = log_file
        self.owner_app = owner_app
        self._records: list[tuple[int, int, int]] = []  # (timestamp, offset, length)
        if log_file.exists():
            self._scan()
        else:
            log_file.write_bytes(_FILE_HEADER.pack(MAGIC, FORMAT_VERSION))

    def _scan(self) -> None:
        size = self.log_file.stat().st_size
        with self.log_file.open("rb") as fh:
            header = fh.read(_FILE_HEADER.size)
            if len(header) != _FILE_HEADER.size:
                raise StoreFormatError(f"{self.log_file}: truncated file header")
            magic, version = _FILE_HEADER.unpack(header)
            if magic != MAGIC:
                raise StoreFormatError(f"{self.log_file}: bad magic {magic!r}")
            if version != FORMAT_VERSION:
                raise StoreFormatError(f"{self.log_file}: unsupported format version {version}")
            offset = _FILE_HEADER.size
            expected = 0
            previous_ts = None
            while offset < size:
                fh.seek(offset)
                raw = fh.read(_RECORD_HEADER.size)
                if len(raw) != _RECORD_HEADER.size:
                    raise StoreFormatError(f"{self.log_file}: truncated record header at {offset}")
                index, timestamp, length = _RECORD_HEADER.unpack(raw)
                if index != expected:
                    raise StoreFormatError(
                        f"{self.log_file}: record index {index} where {expected} expected"
                    )
                if previous_ts is not None and timestamp < previous_ts:
                    raise StoreFormatError(
                        f"{self.log_file}: timestamp regression at record {index}"
                    )
                end = offset + _RECORD_HEADER.size + length + _CRC.size
                if end > size:
                    raise StoreFormatError(f"{self.log_file}: truncated record {index}")
                self._records.append((timestamp, offset, length))
                previous_ts = timestamp
                expected += 1
                offset = end

    def __len__(self) -> int:
        return len(self._records)

    def timestamps(self) -> list[int]:
        return [ts for ts, _, _ in self._records]

    def append_version(self, timestamp_ns: int, content: bytes) -> int:
        """Append one snapshot; returns its index.

        A timestamp below the last recorded one is rejected and the log is
        left untouched.  If the write itself fails, the file is truncated
        back to its previous length.
        """
        if self._records and timestamp_ns < self._records[-1][0]:
            raise TimestampOrderingError(
                f"{self.path}: timestamp {timestamp_ns} precedes last "
                f"version at {self._records[-1][0]}"
            )
        index = len(self._records)
        header = _RECORD_HEADER.pack(index, timestamp_ns, len(content))
        crc = zlib.crc32(content, zlib.crc32(header))
        offset = self.log_file.stat().st_size
        with self.log_file.open("r+b") as fh:
            fh.seek(offset)
            try:
                fh.write(header)
                fh.write(content)
                fh.write(_CRC.pack(crc))
                fh.flush()
            except OSError:
                fh.truncate(offset)
                raise
        self._records.append((timestamp_ns, offset, len(content)))
        return index

    def read_version(self, index: int) -> bytes:
        if not 0 <= index < len(self._records):
            raise VersionNotFoundError(
                f"{self.path}: version {index} not in [0, {len(self._records)})"
            )
        timestamp, offset, length = self._records[index]
        with self.log_file.open("rb") as fh:
            fh.seek(offset)
            header = fh.read(_RECORD_HEADER.size)
            content = fh.read(length)
            (stored_crc,) = _CRC.unpack(fh.read(_CRC.size))
        if len(content) != length:
            raise StoreFormatError(f"{self.log_file}: record {index} truncated")
        if zlib.crc32(content, zlib.crc32(header)) != stored_crc:
            raise StoreFormatError(f"{self.log_file}: record {index} fails its checksum")
        return content

    def version(self, index: int) -> FileVersion:
        content = self.read_version(index)
        return FileVersion(index=index, timestamp_ns=self._records[index][0], content=content)

    def iter_versions(self) -> Iterator[FileVersion]:
        for index in range(len(self._records)):
            yield self.version(index)

    def rollback(self, index: int, destination) -> int:
        """Write version `index` to `destination` and return bytes written.

        The content lands via a temp file in the destination directory and
        an atomic rename, so a failed write never leaves a short file.
        """
        content = self.read_version(index)
        destination = Path(destination)
        tmp = destination.with_name(destination.name + f".confsieve-tmp{os.getpid()}")
        try:
            tmp.write_bytes(content)
            os.replace(tmp, destination)
        finally:
            if tmp.exists():
                tmp.unlink()
        return len(content)

    def size_bytes(self) -> int:
        return self.log_file.stat().st_size


class VersionStore:
    """Directory of version logs plus the path -> log filename index."""

    def __init__(self, root) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._index: dict[str, str] = {}
        self._logs: dict[str, VersionLog] = {}
        index_file = self.root / INDEX_FILENAME
        if index_file.exists():
            for lineno, line in enumerate(index_file.read_text("utf-8").splitlines(), 1):
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise StoreFormatError(f"{index_file}: malformed line {lineno}")
                self._index[parts[0]] = parts[1]

    def _save_index(self) -> None:
        index_file = self.root / INDEX_FILENAME
        tmp = index_file.with_suffix(".tmp")
        body = "".join(f"{p}\t{f}\n" for p, f in sorted(self._index.items()))
        tmp.write_text(body, "utf-8")
        os.replace(tmp, index_file)

    def paths(self) -> list[str]:
        return sorted(self._index)

    def __contains__(self, path: str) -> bool:
        return path in self._index

    def __len__(self) -> int:
        return len(self._index)

    def _new_log_name(self, path: str) -> str:
        stem = hashlib.blake2b(path.encode("utf-8"), digest_size=8).hexdigest()
        name = f"{stem}.log"
        taken = set(self._index.values())
        serial = 1
        while name in taken:
            name = f"{stem}-{serial}.log"
            serial += 1
        return name

    def log(self, path: str, create: bool = False) -> VersionLog:
        if path not in self._index:
            if not create:
                raise VersionNotFoundError(f"no log for path {path!r}")
            self._index[path] = self._new_log_name(path)
            self._save_index()
        if path not in self._logs:
            self._logs[path] = VersionLog(path, self.root / self._index[path])
        return self._logs[path]

    def append_version(self, path: str, timestamp_ns: int, content: bytes) -> int:
        return self.log(path, create=True).append_version(timestamp_ns, content)

    def read_version(self, path: str, index: int) -> bytes:
        return self.log(path).read_version(index)

    def rollback(self, path: str, index: int, destination) -> int:
        return self.log(path).rollback(index, destination)

    def total_bytes(self) -> int:
        return sum(self.log(p).size_bytes() for p in self._index)

    def evict_for_quota(
        self, scores: Mapping[str, float], quota_bytes: int
    ) -> EvictionReport:
        """Drop whole logs, lowest score first, until the store fits.

        Paths missing from `scores` get the sentinel score and go first.
        Ties prefer the larger log, then the lexicographically smaller
        path.  Evicted log files are deleted and dropped from the index.
        """
        if quota_bytes < 0:
            raise ValueError("quota_bytes must be >= 0")
        sized = [
            (scores.get(path, UNSCORED_SENTINEL), -self.log(path).size_bytes(), path)
            for path in self.paths()
        ]
        sized.sort()
        total = self.total_bytes()
        evicted: list[EvictedLog] = []
        for score, neg_size, path in sized:
            if total <= quota_bytes:
                break
            log = self.log(path)
            freed = log.size_bytes()
            versions = len(log)
            log.log_file.unlink()
            del self._logs[path]
            del self._index[path]
            evicted.append(EvictedLog(path, versions, freed))
            total -= freed
        if evicted:
            self._save_index()
        return EvictionReport(evicted=tuple(evicted), remaining_bytes=total)
