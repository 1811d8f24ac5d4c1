"""Trigger and sampling decisions over a version timestamp sequence.

A file's score is only considered settled once its versions cover enough
wall-clock time: scanning forward from the first version, a new sampling
period opens whenever a version's timestamp exceeds the current period
opener's by more than the period length.  The trigger point is the version
that opens the final required period; if the history runs out first there
is no trigger point yet.

The period openers double as the sampling plan: scoring only those
versions bounds the work per file by the sample length.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import TimestampOrderingError

__all__ = ["TriggerConfig", "trigger_point", "sample_indices"]

NS_PER_HOUR = 3_600_000_000_000


@dataclass(frozen=True)
class TriggerConfig:
    """period_ns is the sampling period length; sample_length is how many
    periods must be covered before a measurement is considered accurate."""

    period_ns: int = 3 * NS_PER_HOUR
    sample_length: int = 12

    def __post_init__(self) -> None:
        if self.period_ns <= 0:
            raise ValueError("period_ns must be positive")
        if self.sample_length < 1:
            raise ValueError("sample_length must be >= 1")

    @classmethod
    def from_hours(cls, hours: float, sample_length: int = 12) -> "TriggerConfig":
        return cls(period_ns=round(hours * NS_PER_HOUR), sample_length=sample_length)


def _check_order(timestamps: Sequence[int]) -> None:
    for i in range(1, len(timestamps)):
        if timestamps[i] < timestamps[i - 1]:
            raise TimestampOrderingError(
                f"timestamps regress at index {i}: "
                f"{timestamps[i]} < {timestamps[i - 1]}"
            )


def trigger_point(timestamps: Sequence[int], cfg: TriggerConfig) -> Optional[int]:
    """Index of the version at which a measurement becomes due, or None.

    Greedy scan: the first version opens period 1; each version more than
    one period after the current opener becomes the next opener; the
    opener of period sample_length is the trigger point.  Equal timestamps
    never advance a period.
    """
    _check_order(timestamps)
    if not timestamps:
        return None
    if cfg.sample_length == 1:
        return 0
    opener = 0
    periods = 1
    for i in range(1, len(timestamps)):
        if timestamps[i] - timestamps[opener] > cfg.period_ns:
            opener = i
            periods += 1
            if periods == cfg.sample_length:
                return opener
    return None


def sample_indices(timestamps: Sequence[int], cfg: TriggerConfig) -> list[int]:
    """Indices of the period-opening versions, up to the trigger point.

    Always a prefix-subsequence starting at index 0 with consecutive
    timestamp gaps above the period length; its length equals the sample
    length exactly when a trigger point exists, and is shorter otherwise.
    """
    _check_order(timestamps)
    if not timestamps:
        return []
    openers = [0]
    opener = 0
    for i in range(1, len(timestamps)):
        if len(openers) == cfg.sample_length:
            break
        if timestamps[i] - timestamps[opener] > cfg.period_ns:
            opener = i
            openers.append(i)
    return openers
