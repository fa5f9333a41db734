"""
Interval-set arithmetic on (start, end) second pairs, and run-length coding of binary masks.
"""
from typing import List, Sequence, Tuple

import numpy as np

Interval = Tuple[float, float]


def merge_intervals(intervals: Sequence[Interval]) -> List[Interval]:
    """Union as sorted disjoint intervals; touching intervals are joined."""
    merged: List[Interval] = []
    for start, end in sorted((float(s), float(e)) for s, e in intervals if e > s):
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged


def measure(intervals: Sequence[Interval]) -> float:
    """Lebesgue measure of the union."""
    return float(sum(e - s for s, e in merge_intervals(intervals)))


def intersect(a: Sequence[Interval], b: Sequence[Interval]) -> List[Interval]:
    """Intersection of two interval unions, by a two-pointer sweep."""
    left, right = merge_intervals(a), merge_intervals(b)
    out: List[Interval] = []
    i = j = 0
    while i < len(left) and j < len(right):
        start = max(left[i][0], right[j][0])
        end = min(left[i][1], right[j][1])
        if end > start:
            out.append((start, end))
        if left[i][1] < right[j][1]:
            i += 1
        else:
            j += 1
    return out


def rle_encode(mask: Sequence[int]) -> List[Tuple[int, int]]:
    """[(value, run length), ...] for a 0/1 sequence."""
    values = (np.asarray(mask) > 0).astype(int)
    if values.size == 0:
        return []
    edges = np.flatnonzero(np.diff(values)) + 1
    starts = np.concatenate([[0], edges])
    stops = np.concatenate([edges, [values.size]])
    return [(int(values[a]), int(b - a)) for a, b in zip(starts, stops)]


def rle_decode(runs: Sequence[Tuple[int, int]]) -> np.ndarray:
    if not runs:
        return np.zeros(0, dtype=np.int8)
    return np.concatenate([np.full(length, 1 if value else 0, dtype=np.int8) for value, length in runs])
