"""confsieve command line: the pipeline end to end.

    gen        synthesize a labeled corpus (store + trace + labels)
    ingest     trace file -> per-path access statistics
    capture    snapshot a directory tree into the store
    filter     statistics -> per-path filter verdicts
    trigger    report trigger points and sample counts
    score      similarity-score every file in the store
    rank       score with filter verdicts folded in, sorted
    entries    per-entry change history for one path (CSV)
    lifetimes  entry lifetime CDF for one path (CSV)
    roc        operating points against ground-truth labels (CSV)
    evict      shrink the store below a quota, lowest score first
    rollback   restore one version of one path to a destination

Exit status: 0 success, 1 usage error, 2 data error.  The store directory
comes from --store or the CONFSIEVE_STORE environment variable.  Reports
go to stdout unless --out is given; `roc` and `lifetimes` can also render
a figure with --plot.
"""

from __future__ import annotations

import argparse
import os
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Optional, TextIO

from . import chunks, entries, filters, harness, store, trace, trigger
from .errors import ConfsieveError

USAGE_EXIT = 1
DATA_EXIT = 2

FILTERED_MODE = "FILTERED"

SCORE_MODES = {
    "all": chunks.ScoreMode.ALL_VERSIONS,
    "triggered": chunks.ScoreMode.TRIGGERED,
    "sampled": chunks.ScoreMode.SAMPLED,
    "recovery": chunks.ScoreMode.RECOVERY,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse defaults to exit 2
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


class _DataError(ConfsieveError):
    pass


@contextmanager
def _open_out(path: Optional[str]):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _info(args, message: str) -> None:
    if not args.quiet:
        print(message, file=sys.stderr)


def _store_dir(args) -> Path:
    chosen = args.store or os.environ.get("CONFSIEVE_STORE")
    if not chosen:
        raise _DataError("no store directory: pass --store or set CONFSIEVE_STORE")
    return Path(chosen)


def _open_store(args, must_exist: bool = True) -> store.VersionStore:
    root = _store_dir(args)
    if must_exist and not root.is_dir():
        raise _DataError(f"store directory {root} does not exist")
    return store.VersionStore(root)


def _nonempty_store(args) -> store.VersionStore:
    st = _open_store(args)
    if not len(st):
        raise _DataError(f"empty store at {st.root}")
    return st


def _trigger_config(args) -> trigger.TriggerConfig:
    return trigger.TriggerConfig.from_hours(args.period_hours, args.samples)


def _usage_map(st: store.VersionStore) -> dict[str, tuple[int, int]]:
    return {p: (len(st.log(p)), st.log(p).size_bytes()) for p in st.paths()}


# --- score file format -------------------------------------------------------
#
# path<TAB>score[<TAB>versions_used<TAB>mode[<TAB>verdict]]; mode FILTERED
# marks files the filters removed (rank emits those with score 0).


def _write_score_rows(fh: TextIO, rows: list[tuple]) -> None:
    for row in rows:
        fh.write("\t".join(str(c) for c in row) + "\n")


def _read_scores(path: str) -> tuple[dict[str, float], set[str]]:
    scores: dict[str, float] = {}
    survivors: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            stripped = line.rstrip("\n")
            if not stripped or stripped.startswith("#"):
                continue
            fields = stripped.split("\t")
            if len(fields) < 2:
                raise _DataError(f"{path} line {lineno}: expected path<TAB>score")
            try:
                scores[fields[0]] = float(fields[1])
            except ValueError:
                raise _DataError(f"{path} line {lineno}: bad score {fields[1]!r}") from None
            if len(fields) < 4 or fields[3] != FILTERED_MODE:
                survivors.add(fields[0])
    return scores, survivors


# --- subcommands -------------------------------------------------------------


def _cmd_gen(args) -> int:
    if args.spec:
        with open(args.spec, "r", encoding="utf-8") as fh:
            spec = harness.read_workload_spec(fh)
    else:
        spec = harness.WorkloadSpec()
    corpus = harness.generate_workload(spec, args.seed, args.out)
    _info(
        args,
        f"generated {len(corpus.labels)} files "
        f"({sum(corpus.labels.values())} configuration) under {args.out}",
    )
    return 0


def _cmd_ingest(args) -> int:
    diagnostics = trace.TraceDiagnostics()
    with open(args.trace, "r", encoding="utf-8") as fh:
        stats = trace.build_stats(trace.iter_trace(fh), diagnostics)
    with _open_out(args.stats_out) as fh:
        trace.write_stats(stats, fh)
    _info(
        args,
        f"ingested {len(stats)} paths "
        f"(orphan closes {diagnostics.orphan_closes}, "
        f"orphan data ops {diagnostics.orphan_data_ops})",
    )
    return 0


def _cmd_capture(args) -> int:
    if not Path(args.dir).is_dir():
        raise _DataError(f"{args.dir} is not a directory")
    st = _open_store(args, must_exist=False)
    report = trace.capture_snapshot(args.dir, st, args.timestamp)
    _info(args, f"captured {report.appended} new versions")
    for skipped in report.skipped:
        _info(args, f"skipped {skipped}")
    return 0


def _load_filter_inputs(args) -> tuple[dict[str, trace.AccessStats], filters.FilterConfig]:
    with open(args.stats, "r", encoding="utf-8") as fh:
        stats = trace.read_stats(fh)
    with open(args.config, "r", encoding="utf-8") as fh:
        cfg = filters.read_filter_config(fh)
    return stats, cfg


def _cmd_filter(args) -> int:
    stats, cfg = _load_filter_inputs(args)
    with _open_out(args.out) as fh:
        for path in sorted(stats):
            verdict = filters.apply_filters(path, stats[path], cfg)
            label = "PASS" if verdict.passed else str(verdict.failed_filter)
            fh.write(f"{path}\t{label}\n")
    return 0


def _cmd_trigger(args) -> int:
    st = _nonempty_store(args)
    cfg = _trigger_config(args)
    with _open_out(args.out) as fh:
        for path in st.paths():
            timestamps = st.log(path).timestamps()
            point = trigger.trigger_point(timestamps, cfg)
            samples = trigger.sample_indices(timestamps, cfg)
            shown = "NONE" if point is None else str(point)
            fh.write(f"{path}\t{shown}\t{len(samples)}\n")
    return 0


def _score_rows(st, paths, mode, cfg) -> list[tuple]:
    rows = []
    for path in paths:
        result = chunks.score_file(st.log(path), mode, cfg)
        rows.append((result.path, f"{result.score:.12f}", result.versions_used, result.mode))
    rows.sort(key=lambda r: (-float(r[1]), r[0]))
    return rows


def _cmd_score(args) -> int:
    st = _nonempty_store(args)
    rows = _score_rows(st, st.paths(), SCORE_MODES[args.mode], _trigger_config(args))
    with _open_out(args.out) as fh:
        _write_score_rows(fh, rows)
    return 0


def _cmd_rank(args) -> int:
    st = _nonempty_store(args)
    stats, cfg = _load_filter_inputs(args)
    surviving = []
    rows = []
    for path in st.paths():
        path_stats = stats.get(path, trace.AccessStats(path=path))
        verdict = filters.apply_filters(path, path_stats, cfg)
        if verdict.passed:
            surviving.append(path)
        else:
            rows.append((path, f"{0.0:.12f}", 0, FILTERED_MODE, str(verdict.failed_filter)))
    for row in _score_rows(st, surviving, SCORE_MODES[args.mode], _trigger_config(args)):
        rows.append(row + ("PASS",))
    rows.sort(key=lambda r: (-float(r[1]), r[0]))
    with _open_out(args.out) as fh:
        _write_score_rows(fh, rows)
    return 0


def _entry_report(args):
    st = _nonempty_store(args)
    if args.path not in st:
        raise _DataError(f"no log for path {args.path!r} in store")
    return entries.entry_history(st.log(args.path))


def _cmd_entries(args) -> int:
    report = _entry_report(args)
    config_ids: Optional[set] = None
    if args.phase_start is not None:
        config_ids = set(entries.classify_config_entries(report, args.phase_start))
    with _open_out(args.out) as fh:
        fh.write("entry_id,adds,deletes,changes,versions_present,lifetime,is_config\n")
        for entry in report.entries:
            if config_ids is None:
                flag = ""
            else:
                flag = "true" if entry.id in config_ids else "false"
            fh.write(
                f"{entry.id},{entry.adds},{entry.deletes},{entry.changes},"
                f"{entry.versions_present},{report.lifetime(entry):.6f},{flag}\n"
            )
    return 0


def _cmd_lifetimes(args) -> int:
    report = _entry_report(args)
    values = sorted(report.lifetime(e) for e in report.entries)
    total = len(values)
    with _open_out(args.out) as fh:
        fh.write("lifetime,cumulative_fraction\n")
        seen = 0
        for i, value in enumerate(values):
            seen += 1
            if i + 1 < total and values[i + 1] == value:
                continue
            fh.write(f"{value:.6f},{seen / total:.6f}\n")
    if args.plot:
        from . import plots

        plots.plot_lifetime_cdf(values, args.plot)
        _info(args, f"wrote figure {args.plot}")
    return 0


def _cmd_roc(args) -> int:
    scores, survivors = _read_scores(args.scores)
    with open(args.labels, "r", encoding="utf-8") as fh:
        labels = harness.read_labels(fh)
    usage = None
    if args.store or os.environ.get("CONFSIEVE_STORE"):
        usage = _usage_map(_open_store(args))
    thresholds = args.thresholds
    result = harness.roc_curve(scores, labels, thresholds, survivors=survivors, usage=usage)
    with _open_out(args.out) as fh:
        fh.write("threshold,tp,fn,fp,tpr,fpr,versions_eliminated_pct,bytes_saved_pct\n")
        for p in result.points:
            ev, tv = p.metrics.versions_eliminated
            eb, tb = p.metrics.bytes_saved
            fh.write(
                f"{p.threshold:g},{p.metrics.tp},{p.metrics.fn},{p.metrics.fp},"
                f"{p.tpr:.6f},{p.fpr:.6f},"
                f"{100.0 * ev / tv if tv else 0.0:.4f},"
                f"{100.0 * eb / tb if tb else 0.0:.4f}\n"
            )
        fh.write(f"# optimal_threshold={result.optimal_threshold:g}\n")
    if args.plot:
        from . import plots

        plots.plot_roc(result.points, args.plot)
        _info(args, f"wrote figure {args.plot}")
    return 0


def _cmd_evict(args) -> int:
    st = _open_store(args)
    scores, _ = _read_scores(args.scores)
    report = st.evict_for_quota(scores, args.quota)
    with _open_out(args.out) as fh:
        for evicted in report.evicted:
            fh.write(f"{evicted.path}\t{evicted.versions_removed}\t{evicted.bytes_freed}\n")
        fh.write(f"# remaining_bytes={report.remaining_bytes}\n")
    return 0


def _cmd_rollback(args) -> int:
    st = _nonempty_store(args)
    if args.path not in st:
        raise _DataError(f"no log for path {args.path!r} in store")
    written = st.rollback(args.path, args.version, args.dest)
    _info(args, f"wrote {written} bytes to {args.dest}")
    return 0


# --- parser ------------------------------------------------------------------


def _thresholds(raw: str) -> tuple[float, ...]:
    try:
        values = tuple(float(part) for part in raw.split(",") if part)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad threshold list {raw!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("thresholds must not be empty")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="confsieve", description=__doc__.splitlines()[0])
    parser.add_argument("--store", help="store directory (default: $CONFSIEVE_STORE)")
    parser.add_argument("--quiet", action="store_true", help="suppress informational output")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name: str, func, help_text: str, uses_store: bool = False):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        if uses_store:
            # SUPPRESS keeps a --store given before the subcommand intact
            p.add_argument("--store", default=argparse.SUPPRESS,
                           help="store directory (overrides the global flag)")
        return p

    p = add("gen", _cmd_gen, "generate a labeled synthetic corpus")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--spec", help="workload spec file (key=value lines)")

    p = add("ingest", _cmd_ingest, "build access statistics from a trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--stats-out", dest="stats_out", help="stats file (default stdout)")

    p = add("capture", _cmd_capture, "snapshot a directory into the store", uses_store=True)
    p.add_argument("--dir", required=True)
    p.add_argument("--timestamp", type=int, help="version timestamp in ns (default: now)")

    p = add("filter", _cmd_filter, "apply the state filters to statistics")
    p.add_argument("--stats", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out")

    for name, func, help_text in (
        ("trigger", _cmd_trigger, "report trigger points"),
        ("score", _cmd_score, "similarity-score the store"),
        ("rank", _cmd_rank, "score with filter verdicts, sorted"),
    ):
        p = add(name, func, help_text, uses_store=True)
        p.add_argument("--period-hours", dest="period_hours", type=float, default=3.0)
        p.add_argument("--samples", type=int, default=12)
        p.add_argument("--out")
        if name != "trigger":
            p.add_argument("--mode", choices=sorted(SCORE_MODES), default="all")
        if name == "rank":
            p.add_argument("--stats", required=True)
            p.add_argument("--config", required=True)

    p = add("entries", _cmd_entries, "entry change history for one path", uses_store=True)
    p.add_argument("--path", required=True)
    p.add_argument("--phase-start", dest="phase_start", type=int)
    p.add_argument("--out")

    p = add("lifetimes", _cmd_lifetimes, "entry lifetime CDF for one path", uses_store=True)
    p.add_argument("--path", required=True)
    p.add_argument("--out")
    p.add_argument("--plot", help="also render the CDF to this image file")

    p = add("roc", _cmd_roc, "ROC points against ground-truth labels", uses_store=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--thresholds", type=_thresholds, default=harness.DEFAULT_THRESHOLDS)
    p.add_argument("--out")
    p.add_argument("--plot", help="also render the curve to this image file")

    p = add("evict", _cmd_evict, "evict lowest-scoring logs to fit a quota", uses_store=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--quota", type=int, required=True, help="quota in bytes")
    p.add_argument("--out")

    p = add("rollback", _cmd_rollback, "restore one version to a destination", uses_store=True)
    p.add_argument("--path", required=True)
    p.add_argument("--version", type=int, required=True)
    p.add_argument("--dest", required=True)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfsieveError, ValueError) as exc:
        print(f"confsieve: {exc}", file=sys.stderr)
        return DATA_EXIT
    except OSError as exc:
        print(f"confsieve: {exc}", file=sys.stderr)
        return DATA_EXIT


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
