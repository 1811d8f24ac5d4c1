"""Independent reference implementations the tests check against.

Each oracle recomputes a result by a different algorithmic route than the
library (naive counting, quadratic DP, exhaustive enumeration) so that an
agreement is evidence, not an echo.
"""

from collections import Counter
from fractions import Fraction


def naive_similarity(chunk_sets):
    """Recount the top-frequency mass from raw per-version chunk sets.

    Counts every digest with a Counter, sorts descending, takes the
    round-half-up of the mean unique-chunk count, and divides; exact
    rational arithmetic until the final division.
    """
    v = len(chunk_sets)
    if v == 0:
        raise ValueError("no versions")
    counts = Counter()
    for chunk_set in chunk_sets:
        for digest in set(chunk_set):
            counts[digest] += 1
    if not counts:
        return 0.0
    mean_unique = Fraction(sum(len(set(s)) for s in chunk_sets), v)
    k = int(mean_unique + Fraction(1, 2))  # floor(n + 1/2)
    k = max(1, min(k, len(counts)))
    ordered = sorted(counts.values(), reverse=True)
    return sum(ordered[:k]) / (v * k)


def chain_trigger_point(timestamps, period_ns, sample_length):
    """Earliest index whose prefix admits sample_length versions pairwise
    more than one period apart, via quadratic longest-chain DP."""
    n = len(timestamps)
    if n == 0:
        return None
    if sample_length == 1:
        return 0
    longest = [1] * n
    for i in range(n):
        for j in range(i):
            if timestamps[i] - timestamps[j] > period_ns and longest[j] + 1 > longest[i]:
                longest[i] = longest[j] + 1
        if longest[i] >= sample_length:
            return i
    return None


def exhaustive_lcs(a: bytes, b: bytes) -> int:
    """Longest common substring by growing every substring of a.

    Once a[i:j] is missing from b, every longer extension contains it and
    is missing too, so the inner scan may stop there.
    """
    best = 0
    for i in range(len(a)):
        for j in range(i + 1, len(a) + 1):
            if a[i:j] in b:
                best = max(best, j - i)
            else:
                break
    return best


def recount_confusion(scores, labels, threshold, survivors):
    """Independent loop over the labels for tp/fn/fp."""
    tp = fn = fp = 0
    for path, is_config in labels.items():
        above = scores[path] > threshold
        if is_config and above:
            tp += 1
        elif is_config:
            fn += 1
        elif above and path in survivors:
            fp += 1
    return tp, fn, fp
