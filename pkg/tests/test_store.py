import hashlib

import pytest
from hypothesis import given, settings, strategies as st

from confsieve.errors import (
    StoreFormatError,
    TimestampOrderingError,
    VersionNotFoundError,
)
from confsieve.store import VersionStore


def fill(store, path, versions):
    for ts, content in versions:
        store.append_version(path, ts, content)


def store_digest(store):
    h = hashlib.blake2b(digest_size=16)
    for path in store.paths():
        log = store.log(path)
        h.update(path.encode())
        for version in log.iter_versions():
            h.update(str(version.timestamp_ns).encode())
            h.update(version.content)
    return h.hexdigest()


class TestAppend:
    def test_first_append_gets_index_zero(self, store):
        assert store.append_version("/a", 100, b"abc") == 0

    def test_indexing_is_consecutive(self, store):
        fill(store, "/a", [(1, b"x"), (2, b"y")])
        assert store.append_version("/a", 3, b"z") == 2

    def test_timestamp_regression_rejected_and_log_unchanged(self, store):
        fill(store, "/a", [(10, b"one"), (20, b"two")])
        with pytest.raises(TimestampOrderingError):
            store.append_version("/a", 15, b"three")
        log = store.log("/a")
        assert len(log) == 2
        assert log.read_version(1) == b"two"

    def test_equal_timestamp_allowed(self, store):
        fill(store, "/a", [(10, b"one")])
        assert store.append_version("/a", 10, b"two") == 1

    def test_identical_contiguous_contents_are_kept(self, store):
        fill(store, "/a", [(1, b"same"), (2, b"same")])
        assert len(store.log("/a")) == 2


class TestRead:
    def test_round_trip(self, store):
        store.append_version("/a", 1, b"abc")
        assert store.read_version("/a", 0) == b"abc"

    def test_out_of_range(self, store):
        fill(store, "/a", [(1, b"x"), (2, b"y"), (3, b"z")])
        with pytest.raises(VersionNotFoundError):
            store.read_version("/a", 5)

    def test_unknown_path(self, store):
        with pytest.raises(VersionNotFoundError):
            store.read_version("/nope", 0)

    def test_megabyte_round_trip_bit_exact(self, store):
        import numpy as np

        content = np.random.default_rng(7).integers(0, 256, 1 << 20, dtype=np.uint8).tobytes()
        before = hashlib.sha256(content).hexdigest()
        store.append_version("/big", 1, content)
        after = hashlib.sha256(store.read_version("/big", 0)).hexdigest()
        assert before == after


class TestRollback:
    def test_round_trip(self, store, tmp_path):
        store.append_version("/a", 1, b"v0 bytes")
        dest = tmp_path / "restored"
        written = store.rollback("/a", 0, dest)
        assert written == 8
        assert dest.read_bytes() == b"v0 bytes"

    def test_latest_matches_current(self, store, tmp_path):
        fill(store, "/a", [(1, b"old"), (2, b"current")])
        dest = tmp_path / "restored"
        store.rollback("/a", 1, dest)
        assert dest.read_bytes() == store.read_version("/a", 1)

    def test_each_version_matches_checksum_recorded_at_append(self, store, tmp_path):
        contents = [b"alpha", b"beta beta", b"gamma gamma gamma"]
        checksums = []
        for i, content in enumerate(contents):
            store.append_version("/a", i + 1, content)
            checksums.append(hashlib.sha256(content).hexdigest())
        for i, expected in enumerate(checksums):
            dest = tmp_path / f"v{i}"
            store.rollback("/a", i, dest)
            assert hashlib.sha256(dest.read_bytes()).hexdigest() == expected

    def test_rollback_does_not_truncate_history(self, store, tmp_path):
        fill(store, "/a", [(1, b"v0"), (2, b"v1"), (3, b"v2")])
        store.rollback("/a", 0, tmp_path / "out")
        assert len(store.log("/a")) == 3

    def test_invalid_index(self, store, tmp_path):
        store.append_version("/a", 1, b"x")
        with pytest.raises(VersionNotFoundError):
            store.rollback("/a", 4, tmp_path / "out")


class TestEviction:
    def make_sized_log(self, store, path, content_bytes, versions=1):
        for i in range(versions):
            store.append_version(path, i + 1, b"x" * (content_bytes // versions))

    def test_lowest_score_evicted_first(self, store):
        self.make_sized_log(store, "/a", 100)
        self.make_sized_log(store, "/b", 300)
        size_a = store.log("/a").size_bytes()
        report = store.evict_for_quota({"/a": 0.9, "/b": 0.3}, quota_bytes=size_a + 50)
        assert [e.path for e in report.evicted] == ["/b"]
        assert store.paths() == ["/a"]
        assert report.remaining_bytes == size_a

    def test_quota_already_met_evicts_nothing(self, store):
        self.make_sized_log(store, "/a", 100)
        report = store.evict_for_quota({"/a": 0.5}, quota_bytes=store.total_bytes())
        assert report.evicted == ()

    def test_score_tie_prefers_larger_log(self, store):
        self.make_sized_log(store, "/small", 50)
        self.make_sized_log(store, "/large", 200)
        quota = store.log("/small").size_bytes()
        report = store.evict_for_quota({"/small": 0.5, "/large": 0.5}, quota_bytes=quota)
        assert report.evicted[0].path == "/large"
        assert store.paths() == ["/small"]

    def test_unscored_logs_go_first(self, store):
        self.make_sized_log(store, "/scored", 200)
        self.make_sized_log(store, "/unscored", 50)
        quota = store.total_bytes() - 1
        report = store.evict_for_quota({"/scored": 0.1}, quota_bytes=quota)
        assert report.evicted[0].path == "/unscored"

    def test_negative_quota_rejected(self, store):
        with pytest.raises(ValueError):
            store.evict_for_quota({}, quota_bytes=-1)

    def test_everything_evictable_when_quota_tiny(self, store):
        self.make_sized_log(store, "/a", 100)
        self.make_sized_log(store, "/b", 100)
        report = store.evict_for_quota({"/a": 0.9, "/b": 0.1}, quota_bytes=0)
        assert store.paths() == []
        assert report.remaining_bytes == 0

    def test_bytes_freed_accounting(self, store):
        self.make_sized_log(store, "/a", 100)
        self.make_sized_log(store, "/b", 300)
        before = store.total_bytes()
        report = store.evict_for_quota({"/a": 0.9, "/b": 0.3}, quota_bytes=150)
        assert report.bytes_freed == before - report.remaining_bytes

    @given(
        scores=st.dictionaries(
            st.sampled_from(["/p0", "/p1", "/p2", "/p3", "/p4"]),
            st.floats(0, 1, allow_nan=False),
            min_size=1,
            max_size=5,
        ),
        sizes=st.lists(st.integers(0, 400), min_size=5, max_size=5),
        quota=st.integers(0, 3000),
    )
    @settings(max_examples=40, deadline=None)
    def test_no_survivor_scores_below_any_evicted(self, tmp_path_factory, scores, sizes, quota):
        store = VersionStore(tmp_path_factory.mktemp("ev") / "s")
        paths = [f"/p{i}" for i in range(5)]
        for path, size in zip(paths, sizes):
            store.append_version(path, 1, b"x" * size)
        report = store.evict_for_quota(scores, quota)
        effective = lambda p: scores.get(p, -1.0)
        if report.evicted and store.paths():
            max_evicted = max(effective(e.path) for e in report.evicted)
            min_survivor = min(effective(p) for p in store.paths())
            assert min_survivor >= max_evicted
        assert store.total_bytes() <= quota or not store.paths()


class TestPersistence:
    def test_reopen_yields_identical_logs(self, tmp_path):
        store = VersionStore(tmp_path / "s")
        fill(store, "/a", [(1, b"one"), (2, b"two")])
        fill(store, "/b", [(5, b"other content")])
        digest = store_digest(store)
        reopened = VersionStore(tmp_path / "s")
        assert store_digest(reopened) == digest
        assert reopened.log("/a").timestamps() == [1, 2]

    def test_corrupted_record_detected(self, tmp_path):
        store = VersionStore(tmp_path / "s")
        store.append_version("/a", 1, b"precious bytes here")
        log_file = store.log("/a").log_file
        raw = bytearray(log_file.read_bytes())
        raw[-10] ^= 0xFF  # flip a content byte under the checksum
        log_file.write_bytes(bytes(raw))
        reopened = VersionStore(tmp_path / "s")
        with pytest.raises(StoreFormatError):
            reopened.read_version("/a", 0)

    def test_bad_magic_detected(self, tmp_path):
        store = VersionStore(tmp_path / "s")
        store.append_version("/a", 1, b"x")
        log_file = store.log("/a").log_file
        raw = bytearray(log_file.read_bytes())
        raw[0] ^= 0xFF
        log_file.write_bytes(bytes(raw))
        with pytest.raises(StoreFormatError):
            VersionStore(tmp_path / "s").log("/a")


@given(
    versions=st.lists(
        st.tuples(st.integers(0, 10**6), st.binary(max_size=2048)),
        min_size=1,
        max_size=20,
    )
)
@settings(max_examples=60, deadline=None)
def test_round_trip_and_monotonicity_properties(tmp_path_factory, versions):
    """Appends in sorted-timestamp order read back bit-exactly with dense
    indices and non-decreasing timestamps."""
    store = VersionStore(tmp_path_factory.mktemp("rt") / "s")
    ordered = sorted(versions, key=lambda v: v[0])
    for ts, content in ordered:
        store.append_version("/f", ts, content)
    log = store.log("/f")
    assert log.timestamps() == sorted(log.timestamps())
    for i, (ts, content) in enumerate(ordered):
        version = log.version(i)
        assert version.index == i
        assert version.content == content
        assert version.content_length == len(content)
