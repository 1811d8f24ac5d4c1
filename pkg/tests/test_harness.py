import hashlib
import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import recount_confusion

from confsieve.errors import LabelMismatchError, TraceParseError
from confsieve.harness import (
    DEFAULT_THRESHOLDS,
    WorkloadSpec,
    confusion,
    generate_workload,
    read_labels,
    read_workload_spec,
    roc_curve,
    write_labels,
)
from confsieve.trace import Op, build_stats, iter_trace


def tree_digest(out_dir):
    h = hashlib.blake2b(digest_size=16)
    for path in sorted(p for p in out_dir.rglob("*") if p.is_file()):
        h.update(str(path.relative_to(out_dir)).encode())
        h.update(path.read_bytes())
    return h.hexdigest()


class TestGeneration:
    def test_zero_files(self, tmp_path):
        spec = WorkloadSpec(config_files=0, task_files=0, time_files=0,
                            temp_files=0, userdata_files=0)
        corpus = generate_workload(spec, 7, tmp_path / "o")
        assert corpus.labels == {}
        assert corpus.store.paths() == []

    def test_same_seed_is_byte_identical(self, tmp_path):
        spec = WorkloadSpec(config_files=2, task_files=3, time_files=2,
                            temp_files=1, userdata_files=1)
        generate_workload(spec, 42, tmp_path / "a")
        generate_workload(spec, 42, tmp_path / "b")
        assert tree_digest(tmp_path / "a") == tree_digest(tmp_path / "b")

    def test_different_seed_differs(self, tmp_path):
        spec = WorkloadSpec(config_files=1, task_files=1, time_files=1,
                            temp_files=1, userdata_files=1)
        generate_workload(spec, 1, tmp_path / "a")
        generate_workload(spec, 2, tmp_path / "b")
        assert tree_digest(tmp_path / "a") != tree_digest(tmp_path / "b")

    def test_counts_and_labels_by_construction(self, tmp_path):
        spec = WorkloadSpec(config_files=5, task_files=20, time_files=0,
                            temp_files=0, userdata_files=0)
        corpus = generate_workload(spec, 7, tmp_path / "o")
        assert len(corpus.labels) == 25
        assert sum(corpus.labels.values()) == 5
        assert all(
            corpus.labels[p] == (corpus.archetype_by_path[p] == "CONFIG")
            for p in corpus.labels
        )

    def test_temp_files_get_unlinked(self, tmp_path):
        spec = WorkloadSpec(config_files=0, task_files=0, time_files=0,
                            temp_files=3, userdata_files=0)
        corpus = generate_workload(spec, 3, tmp_path / "o")
        with open(corpus.trace_path) as fh:
            events = list(iter_trace(fh))
        unlinked = {e.path for e in events if e.op is Op.UNLINK}
        assert unlinked == set(corpus.labels)

    def test_userdata_paths_dot_free_under_home(self, tmp_path):
        spec = WorkloadSpec(config_files=0, task_files=0, time_files=0,
                            temp_files=0, userdata_files=4)
        corpus = generate_workload(spec, 3, tmp_path / "o")
        for path in corpus.labels:
            assert path.startswith("/home/user/")
            assert not any(part.startswith(".") for part in path.split("/"))

    def test_trace_is_ordered_and_parseable(self, tmp_path):
        corpus = generate_workload(WorkloadSpec(), 5, tmp_path / "o")
        with open(corpus.trace_path) as fh:
            stats = build_stats(iter_trace(fh))  # raises on disorder
        assert set(corpus.labels) <= set(stats)

    def test_store_timestamps_match_trigger_needs(self, tmp_path):
        spec = WorkloadSpec(config_files=2, task_files=0, time_files=0,
                            temp_files=0, userdata_files=0)
        corpus = generate_workload(spec, 11, tmp_path / "o")
        for path in corpus.store.paths():
            timestamps = corpus.store.log(path).timestamps()
            assert timestamps == sorted(timestamps)


class TestSpecAndLabelFiles:
    def test_workload_spec_parse(self):
        text = "# corpus\nconfig=3\ntask=4\ntime=0\ntemp=1\nuserdata=2\n"
        spec = read_workload_spec(io.StringIO(text))
        assert (spec.config_files, spec.task_files) == (3, 4)
        assert (spec.time_files, spec.temp_files, spec.userdata_files) == (0, 1, 2)

    def test_workload_spec_bad_key(self):
        with pytest.raises(TraceParseError):
            read_workload_spec(io.StringIO("nope=3\n"))

    def test_labels_round_trip(self):
        labels = {"/a": True, "/b": False}
        buffer = io.StringIO()
        write_labels(labels, buffer)
        assert read_labels(io.StringIO(buffer.getvalue())) == labels

    def test_labels_bad_tag(self):
        with pytest.raises(TraceParseError):
            read_labels(io.StringIO("/a\tmaybe\n"))


class TestConfusion:
    def test_hand_counted_example(self):
        scores = {"a": 0.9, "b": 0.85, "c": 0.5}
        labels = {"a": True, "b": False, "c": False}
        usage = {"a": (10, 100), "b": (20, 200), "c": (7, 70)}
        metrics = confusion(scores, labels, 0.8, usage=usage)
        assert (metrics.tp, metrics.fp, metrics.fn) == (1, 1, 0)
        assert metrics.versions_eliminated == (7, 27)
        assert metrics.bytes_saved == (70, 270)

    def test_threshold_one_keeps_nothing(self):
        scores = {"a": 1.0, "b": 0.99}
        labels = {"a": True, "b": False}
        metrics = confusion(scores, labels, 1.0)
        assert (metrics.tp, metrics.fp) == (0, 0)
        assert metrics.fn == 1

    def test_threshold_zero_with_positive_scores_eliminates_nothing(self):
        scores = {"a": 0.2, "b": 0.1}
        labels = {"a": True, "b": False}
        metrics = confusion(scores, labels, 0.0, usage={"a": (5, 50), "b": (5, 50)})
        assert metrics.fn == 0
        assert metrics.versions_eliminated == (0, 5)

    def test_fp_counted_among_survivors_only(self):
        scores = {"a": 0.9, "b": 0.9}
        labels = {"a": False, "b": False}
        metrics = confusion(scores, labels, 0.5, survivors={"a"})
        assert metrics.fp == 1

    def test_key_mismatch_lists_paths(self):
        with pytest.raises(LabelMismatchError, match="/missing"):
            confusion({"/a": 0.5}, {"/a": True, "/missing": False}, 0.5)
        with pytest.raises(LabelMismatchError, match="/extra"):
            confusion({"/a": 0.5, "/extra": 0.1}, {"/a": True}, 0.5)

    @given(
        assignment=st.lists(
            st.tuples(st.floats(0, 1, allow_nan=False), st.booleans(), st.booleans()),
            min_size=1,
            max_size=30,
        ),
        threshold=st.floats(0, 1, allow_nan=False),
    )
    @settings(max_examples=100, deadline=None)
    def test_matches_brute_force_recount(self, assignment, threshold):
        scores = {f"/p{i}": s for i, (s, _, _) in enumerate(assignment)}
        labels = {f"/p{i}": c for i, (_, c, _) in enumerate(assignment)}
        survivors = {f"/p{i}" for i, (_, _, surv) in enumerate(assignment) if surv}
        metrics = confusion(scores, labels, threshold, survivors=survivors)
        assert (metrics.tp, metrics.fn, metrics.fp) == recount_confusion(
            scores, labels, threshold, survivors
        )


class TestRoc:
    def separable(self):
        scores = {f"/c{i}": 0.9 + i / 100 for i in range(5)}
        scores.update({f"/n{i}": 0.1 + i / 100 for i in range(5)})
        labels = {p: p.startswith("/c") for p in scores}
        return scores, labels

    def test_default_thresholds(self):
        scores, labels = self.separable()
        result = roc_curve(scores, labels)
        assert [p.threshold for p in result.points] == list(DEFAULT_THRESHOLDS)

    def test_separable_attains_perfect_point(self):
        scores, labels = self.separable()
        result = roc_curve(scores, labels)
        assert any(p.fpr == 0.0 and p.tpr == 1.0 for p in result.points)
        assert result.optimal_threshold in DEFAULT_THRESHOLDS

    def test_rates_monotone_in_threshold(self):
        rng = np.random.default_rng(0)
        scores = {f"/p{i}": float(rng.random()) for i in range(100)}
        labels = {p: bool(rng.random() < 0.3) for p in scores}
        result = roc_curve(scores, labels, thresholds=sorted(np.linspace(0, 1, 21), reverse=True))
        tprs = [p.tpr for p in result.points]
        fprs = [p.fpr for p in result.points]
        # thresholds descend, so rates must not decrease along the list
        assert tprs == sorted(tprs)
        assert fprs == sorted(fprs)

    def test_label_independent_scores_sit_near_diagonal(self):
        rng = np.random.default_rng(1234)
        scores = {f"/p{i}": float(rng.random()) for i in range(200)}
        labels = {p: i % 2 == 0 for i, p in enumerate(sorted(scores))}
        result = roc_curve(scores, labels)
        for point in result.points:
            assert abs(point.tpr - point.fpr) <= 0.15

    def test_empty_thresholds_rejected(self):
        scores, labels = self.separable()
        with pytest.raises(ValueError):
            roc_curve(scores, labels, thresholds=())

    def test_optimal_threshold_tie_prefers_higher(self):
        scores = {"/a": 0.99, "/b": 0.01}
        labels = {"/a": True, "/b": False}
        result = roc_curve(scores, labels, thresholds=(0.9, 0.5))
        assert result.optimal_threshold == 0.9
