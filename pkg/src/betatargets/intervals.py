"""Finite unions of half-open intervals with exact sort-and-merge measure."""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from typing import Iterable, Sequence


@dataclass(frozen=True)
class IntervalUnion:
    """Disjoint, sorted, non-adjacent half-open intervals ``[lo, hi)``.

    Endpoints may be ints, Fractions, floats or mpf; only comparison and
    subtraction are used, so Fractions give exact measures.
    """

    parts: tuple = ()

    @classmethod
    def from_intervals(cls, intervals: Iterable[Sequence]) -> "IntervalUnion":
        items = sorted((lo, hi) for lo, hi in intervals if hi > lo)
        merged: list = []
        for lo, hi in items:
            if merged and lo <= merged[-1][1]:
                if hi > merged[-1][1]:
                    merged[-1] = (merged[-1][0], hi)
            else:
                merged.append((lo, hi))
        return cls(tuple(merged))

    @property
    def measure(self):
        total = 0
        for lo, hi in self.parts:
            total += hi - lo
        return total

    def __len__(self):
        return len(self.parts)

    def __iter__(self):
        return iter(self.parts)

    def __bool__(self):
        return bool(self.parts)

    def contains(self, x) -> bool:
        i = bisect_right(self.parts, (x, float("inf"))) - 1
        return i >= 0 and self.parts[i][0] <= x < self.parts[i][1]

    def union(self, other: "IntervalUnion") -> "IntervalUnion":
        return IntervalUnion.from_intervals(list(self.parts) + list(other.parts))

    def intersect(self, other: "IntervalUnion") -> "IntervalUnion":
        out = []
        i = j = 0
        a, b = self.parts, other.parts
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi = min(a[i][1], b[j][1])
            if hi > lo:
                out.append((lo, hi))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return IntervalUnion(tuple(out))

    def clip(self, lo, hi) -> "IntervalUnion":
        return self.intersect(IntervalUnion(((lo, hi),)))

    def complement(self, lo=0, hi=1) -> "IntervalUnion":
        out = []
        cur = lo
        for a, b in self.parts:
            if b <= lo or a >= hi:
                continue
            if a > cur:
                out.append((cur, a))
            cur = max(cur, b)
        if cur < hi:
            out.append((cur, hi))
        return IntervalUnion(tuple(out))

    def as_floats(self) -> list[tuple[float, float]]:
        return [(float(a), float(b)) for a, b in self.parts]


def union_measure(intervals: Iterable[Sequence]):
    """Lebesgue measure of a union of half-open intervals."""
    return IntervalUnion.from_intervals(intervals).measure
