"""Filters that drop files which cannot hold persistent application state.

Three cheap predicates run before any content is examined, in a fixed
order, and the first failure wins:

1. persistence: a file the application deleted holds nothing durable;
2. read-before-write: a file whose open-sessions start with a write more
   than a threshold fraction of the time (default 20%) carries no
   information across executions, modulo the default-config-rewrite
   exception the threshold exists for;
3. user data: a file in a user home directory with no dot-prefixed
   directory anywhere on its path below the home is a document, not
   state.

Files that fail a filter are assigned similarity zero downstream instead
of being scored.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import TextIO

from .errors import TraceParseError
from .trace import AccessStats

__all__ = [
    "FilterConfig",
    "FailedFilter",
    "FilterVerdict",
    "passes_persistence",
    "passes_read_before_write",
    "passes_user_data",
    "apply_filters",
    "read_filter_config",
    "write_filter_config",
]


@dataclass(frozen=True)
class FilterConfig:
    write_before_read_threshold: float = 0.20
    home_prefixes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not 0.0 <= self.write_before_read_threshold <= 1.0:
            raise ValueError("write_before_read_threshold must be within [0, 1]")
        normalized = tuple(p.rstrip("/") or "/" for p in self.home_prefixes)
        object.__setattr__(self, "home_prefixes", normalized)


class FailedFilter(str, enum.Enum):
    NONE = "NONE"
    DELETED = "DELETED"
    WRITE_BEFORE_READ = "WRITE_BEFORE_READ"
    USER_DATA = "USER_DATA"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class FilterVerdict:
    passed: bool
    failed_filter: FailedFilter

    def __post_init__(self) -> None:
        if self.passed != (self.failed_filter is FailedFilter.NONE):
            raise ValueError("passed must mirror failed_filter == NONE")


def passes_persistence(stats: AccessStats) -> bool:
    return not stats.deleted


def passes_read_before_write(stats: AccessStats, cfg: FilterConfig) -> bool:
    """True when the file shows information flow across executions.

    A path never opened in the trace has no such evidence and fails.
    Exactly the threshold fraction still passes; removal needs more.
    """
    if stats.opens == 0:
        return False
    return stats.write_before_read_opens / stats.opens <= cfg.write_before_read_threshold


def _components_below_home(path: str, home: str) -> list[str] | None:
    """Path components under `home`, or None when path is not under it."""
    if home == "/":
        return [c for c in path.split("/") if c]
    if path != home and not path.startswith(home + "/"):
        return None
    rest = path[len(home) :].lstrip("/")
    return [c for c in rest.split("/") if c]


def passes_user_data(path: str, cfg: FilterConfig) -> bool:
    """False only for paths under a home prefix whose directories below the
    home are all dot-free.  The basename itself does not count: it is the
    enclosing dot-directory that marks hidden application state."""
    for home in cfg.home_prefixes:
        components = _components_below_home(path, home)
        if components is None:
            continue
        directories = components[:-1]
        if not any(c.startswith(".") for c in directories):
            return False
    return True


def apply_filters(path: str, stats: AccessStats, cfg: FilterConfig) -> FilterVerdict:
    if not passes_persistence(stats):
        return FilterVerdict(False, FailedFilter.DELETED)
    if not passes_read_before_write(stats, cfg):
        return FilterVerdict(False, FailedFilter.WRITE_BEFORE_READ)
    if not passes_user_data(path, cfg):
        return FilterVerdict(False, FailedFilter.USER_DATA)
    return FilterVerdict(True, FailedFilter.NONE)


# --- config file -------------------------------------------------------------
#
# UTF-8 text: `threshold=0.20` once, `home=/home/u` repeated, `#` comments.


def read_filter_config(fh: TextIO) -> FilterConfig:
    threshold = 0.20
    homes: list[str] = []
    for lineno, line in enumerate(fh, 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        if not sep:
            raise TraceParseError(f"filter config line {lineno}: expected key=value")
        key = key.strip()
        value = value.strip()
        if key == "threshold":
            try:
                threshold = float(value)
            except ValueError:
                raise TraceParseError(
                    f"filter config line {lineno}: bad threshold {value!r}"
                ) from None
        elif key == "home":
            if not value:
                raise TraceParseError(f"filter config line {lineno}: empty home prefix")
            homes.append(value)
        else:
            raise TraceParseError(f"filter config line {lineno}: unknown key {key!r}")
    try:
        return FilterConfig(write_before_read_threshold=threshold, home_prefixes=tuple(homes))
    except ValueError as exc:
        raise TraceParseError(f"filter config: {exc}") from None


def write_filter_config(cfg: FilterConfig, fh: TextIO) -> None:
    fh.write(f"threshold={cfg.write_before_read_threshold}\n")
    for home in cfg.home_prefixes:
        fh.write(f"home={home}\n")
