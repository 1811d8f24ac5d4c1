"""Tracking logical data entries across the versions of a text file.

Each version is split on line feeds into unique data fragments.  Between
consecutive versions, removed and added fragments are paired up by
longest-common-substring length: a good pairing means one datum changed
value, so the two fragments belong to the same entry.  Pairs are rejected
when the overlap is too small relative to the fragment lengths, or when
the two fragments ever co-existed in a single version (two values of one
datum never appear together).  Unmatched additions open new entries,
unmatched removals record deletions, and a deleted entry whose exact bytes
later reappear is the same datum returning.

The per-entry add/delete/change counts and presence spans describe how the
file's data changes over time; entries whose every change falls after a
given phase boundary are the candidate configuration entries.

Only text content is analyzed: a version is considered binary when more
than 10% of its bytes fall outside horizontal tab, LF, CR and the
printable ASCII range.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Collection, Optional, Sequence, Union

from .errors import BinaryContentError, EmptyLogError

__all__ = [
    "DataEntry",
    "EntryHistoryReport",
    "split_fragments",
    "longest_common_substring",
    "match_changes",
    "entry_history",
    "entry_history_from_versions",
    "classify_config_entries",
    "is_binary",
]

MIN_MATCH_RATIO = 0.5

_TEXT_BYTES = frozenset({0x09, 0x0A, 0x0D} | set(range(0x20, 0x7F)))
_BINARY_FRACTION = 0.10


def is_binary(content: bytes) -> bool:
    if not content:
        return False
    outside = sum(1 for b in content if b not in _TEXT_BYTES)
    return outside > _BINARY_FRACTION * len(content)


def split_fragments(content: bytes) -> list[bytes]:
    """Line-feed-delimited fragments, empties dropped, duplicates collapsed
    in first-occurrence order."""
    return list(dict.fromkeys(piece for piece in content.split(b"\n") if piece))


def longest_common_substring(a: bytes, b: bytes) -> int:
    """Length of the longest contiguous byte run occurring in both."""
    if not a or not b:
        return 0
    if a == b:
        return len(a)
    if len(a) < len(b):
        a, b = b, a
    previous = [0] * (len(b) + 1)
    best = 0
    for i in range(1, len(a) + 1):
        current = [0] * (len(b) + 1)
        ca = a[i - 1]
        for j in range(1, len(b) + 1):
            if ca == b[j - 1]:
                length = previous[j - 1] + 1
                current[j] = length
                if length > best:
                    best = length
        previous = current
    return best


Coexistence = Union[Collection[tuple[bytes, bytes]], Callable[[bytes, bytes], bool]]


def _coexistence_predicate(coexistence: Coexistence) -> Callable[[bytes, bytes], bool]:
    if callable(coexistence):
        return coexistence
    pairs = set(coexistence)
    return lambda x, y: (x, y) in pairs or (y, x) in pairs


def match_changes(
    removed: Sequence[bytes],
    added: Sequence[bytes],
    coexistence: Coexistence = (),
    min_match_ratio: float = MIN_MATCH_RATIO,
) -> list[tuple[bytes, bytes]]:
    """Pair removed fragments with added fragments from one transition.

    Candidates are scored by LCS length; a pair is inadmissible when the
    fragments ever co-existed in one version or when the LCS is shorter
    than min_match_ratio of the longer fragment.  Assignment is greedy by
    descending LCS, ties broken by position in the added list, then the
    removed list, and each fragment is used at most once.

    `coexistence` is either a collection of fragment pairs (orientation
    ignored) or a predicate.
    """
    coexists = _coexistence_predicate(coexistence)
    candidates: list[tuple[int, int, int]] = []  # (lcs, added_pos, removed_pos)
    for ri, r in enumerate(removed):
        for ai, a in enumerate(added):
            lcs = longest_common_substring(r, a)
            if lcs < min_match_ratio * max(len(r), len(a)):
                continue
            if coexists(r, a):
                continue
            candidates.append((lcs, ai, ri))
    candidates.sort(key=lambda c: (-c[0], c[1], c[2]))
    matched_r: set[int] = set()
    matched_a: set[int] = set()
    matches: list[tuple[bytes, bytes]] = []
    for lcs, ai, ri in candidates:
        if ri in matched_r or ai in matched_a:
            continue
        matched_r.add(ri)
        matched_a.add(ai)
        matches.append((removed[ri], added[ai]))
    return matches


@dataclass
class DataEntry:
    """One logical datum followed across versions."""

    id: str
    fragments: list[bytes]
    adds: int = 0
    deletes: int = 0
    changes: int = 0
    versions_present: int = 0
    first_add: Optional[int] = None
    first_delete: Optional[int] = None
    first_change: Optional[int] = None
    change_timestamps: list[int] = field(default_factory=list)

    @property
    def current(self) -> Optional[bytes]:
        return self.fragments[-1] if self.fragments else None


@dataclass
class EntryHistoryReport:
    entries: list[DataEntry]
    total_versions: int
    first_timestamp: int
    last_timestamp: int

    def lifetime(self, entry: DataEntry) -> float:
        return entry.versions_present / self.total_versions

    def lifetimes(self) -> dict[str, float]:
        return {e.id: self.lifetime(e) for e in self.entries}


class _Tracker:
    def __init__(self) -> None:
        self.entries: list[DataEntry] = []
        self.live: dict[bytes, DataEntry] = {}
        self.dead: dict[bytes, DataEntry] = {}

    def new_entry(self, value: bytes, ts: int) -> None:
        entry = DataEntry(id=f"e{len(self.entries):04d}", fragments=[value])
        entry.adds = 1
        entry.first_add = ts
        self.entries.append(entry)
        self.live[value] = entry

    def add(self, value: bytes, ts: int) -> None:
        returned = self.dead.pop(value, None)
        if returned is not None:
            returned.adds += 1
            self.live[value] = returned
        else:
            self.new_entry(value, ts)

    def change(self, old: bytes, new: bytes, ts: int) -> None:
        entry = self.live.pop(old)
        entry.fragments.append(new)
        entry.changes += 1
        entry.change_timestamps.append(ts)
        if entry.first_change is None:
            entry.first_change = ts
        self.live[new] = entry

    def delete(self, value: bytes, ts: int) -> None:
        entry = self.live.pop(value)
        entry.deletes += 1
        if entry.first_delete is None:
            entry.first_delete = ts
        self.dead[value] = entry


def entry_history_from_versions(
    versions: Sequence[tuple[int, bytes]],
    min_match_ratio: float = MIN_MATCH_RATIO,
) -> EntryHistoryReport:
    """Build the entry database from (timestamp, content) pairs."""
    if not versions:
        raise EmptyLogError("entry history needs at least one version")
    for index, (_, content) in enumerate(versions):
        if is_binary(content):
            raise BinaryContentError(f"version {index} is not text; entry tracking skipped")

    fragment_lists = [split_fragments(content) for _, content in versions]
    fragment_sets = [set(fragments) for fragments in fragment_lists]

    presence_mask: dict[bytes, int] = {}
    for index, fragments in enumerate(fragment_lists):
        bit = 1 << index
        for fragment in fragments:
            presence_mask[fragment] = presence_mask.get(fragment, 0) | bit

    def coexisted(x: bytes, y: bytes) -> bool:
        return bool(presence_mask[x] & presence_mask[y])

    tracker = _Tracker()
    first_ts = versions[0][0]

    for fragment in fragment_lists[0]:
        tracker.new_entry(fragment, first_ts)
    for entry in tracker.live.values():
        entry.versions_present += 1

    for k in range(1, len(versions)):
        ts = versions[k][0]
        previous_set, current_set = fragment_sets[k - 1], fragment_sets[k]
        removed = [f for f in fragment_lists[k - 1] if f not in current_set]
        added = [f for f in fragment_lists[k] if f not in previous_set]
        matches = match_changes(removed, added, coexisted, min_match_ratio)
        matched_removed = {r for r, _ in matches}
        matched_added = {a for _, a in matches}
        for old, new in matches:
            tracker.change(old, new, ts)
        for fragment in removed:
            if fragment not in matched_removed:
                tracker.delete(fragment, ts)
        for fragment in added:
            if fragment not in matched_added:
                tracker.add(fragment, ts)
        for entry in tracker.live.values():
            entry.versions_present += 1

    return EntryHistoryReport(
        entries=tracker.entries,
        total_versions=len(versions),
        first_timestamp=versions[0][0],
        last_timestamp=versions[-1][0],
    )


def entry_history(log, min_match_ratio: float = MIN_MATCH_RATIO) -> EntryHistoryReport:
    """Build the entry database from a version log."""
    timestamps = log.timestamps()
    versions = [(timestamps[i], log.read_version(i)) for i in range(len(timestamps))]
    return entry_history_from_versions(versions, min_match_ratio)


def classify_config_entries(report: EntryHistoryReport, phase_start_ns: int) -> list[str]:
    """Ids of entries changed at least once and only at or after the phase
    boundary.  Entries also changed before the boundary are excluded, as
    are entries never changed at all."""
    if not report.first_timestamp <= phase_start_ns <= report.last_timestamp:
        raise ValueError(
            f"phase_start {phase_start_ns} outside the log span "
            f"[{report.first_timestamp}, {report.last_timestamp}]"
        )
    return [
        entry.id
        for entry in report.entries
        if entry.changes >= 1
        and all(ts >= phase_start_ns for ts in entry.change_timestamps)
    ]
