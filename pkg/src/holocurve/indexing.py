"""Multi-index arithmetic over Z_+^m."""

from __future__ import annotations

from functools import lru_cache
from itertools import product
from math import factorial, prod
from typing import Iterable, Sequence


class MultiIndex(tuple):
    """Immutable element of Z_+^m.

    Addition and subtraction act entrywise. Tuple ordering is kept so that
    indices sort and hash like plain tuples; the partial order is ``leq``.
    """

    def __new__(cls, entries: Iterable[int] = ()):
        entries = tuple(int(e) for e in entries)
        if any(e < 0 for e in entries):
            raise ValueError(f"multi-index entries must be non-negative: {entries}")
        return super().__new__(cls, entries)

    @classmethod
    def zero(cls, m: int) -> "MultiIndex":
        return cls((0,) * m)

    @classmethod
    def unit(cls, m: int, i: int) -> "MultiIndex":
        """Unit index e_i with 0-based position ``i``."""
        if not 0 <= i < m:
            raise ValueError(f"coordinate {i} out of range for m={m}")
        return cls(1 if k == i else 0 for k in range(m))

    @property
    def m(self) -> int:
        return len(self)

    @property
    def degree(self) -> int:
        return sum(self)

    @property
    def factorial(self) -> int:
        return prod(factorial(e) for e in self)

    def leq(self, other: Sequence[int]) -> bool:
        _check_same_length(self, other)
        return all(a <= b for a, b in zip(self, other))

    def __add__(self, other):
        _check_same_length(self, other)
        return MultiIndex(a + b for a, b in zip(self, other))

    def __sub__(self, other):
        _check_same_length(self, other)
        if not all(b <= a for a, b in zip(self, other)):
            raise ValueError(f"{tuple(other)} is not <= {tuple(self)}")
        return MultiIndex(a - b for a, b in zip(self, other))

    def __repr__(self) -> str:
        return f"MultiIndex({tuple(self)})"


def _check_same_length(a: Sequence[int], b: Sequence[int]) -> None:
    if len(a) != len(b):
        raise ValueError(f"multi-index lengths differ: {len(a)} vs {len(b)}")


def total_degree(index: Sequence[int]) -> int:
    return sum(index)


def index_factorial(index: Sequence[int]) -> int:
    return prod(factorial(e) for e in index)


def multinomial(index: Sequence[int], sub: Sequence[int]) -> int:
    """Exact I!/(I1!(I-I1)!) for I1 <= I."""
    _check_same_length(index, sub)
    if not all(0 <= b <= a for a, b in zip(index, sub)):
        raise ValueError(f"{tuple(sub)} is not <= {tuple(index)}")
    out = 1
    for a, b in zip(index, sub):
        out *= factorial(a) // (factorial(b) * factorial(a - b))
    return out


@lru_cache(maxsize=None)
def _graded(m: int, cap: int) -> tuple[MultiIndex, ...]:
    out = []
    for d in range(cap + 1):
        out.extend(_exact_degree(m, d))
    return tuple(out)


def _exact_degree(m: int, d: int) -> list[MultiIndex]:
    # lexicographically descending in the first coordinate: (d,0) before (0,d)
    if m == 1:
        return [MultiIndex((d,))]
    out = []
    for first in range(d, -1, -1):
        for rest in _exact_degree(m - 1, d - first):
            out.append(MultiIndex((first,) + tuple(rest)))
    return out


def enumerate_upto(m: int, bound: int | Sequence[int]) -> tuple[MultiIndex, ...]:
    """Graded-lexicographic listing of multi-indices.

    ``bound`` is either a total-degree cap (int) or an entrywise bound.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if isinstance(bound, int):
        if bound < 0:
            return ()
        return _graded(m, bound)
    bound = tuple(bound)
    _check_same_length(bound, (0,) * m)
    boxed = [MultiIndex(e) for e in product(*(range(b + 1) for b in bound))]
    return tuple(sorted(boxed, key=_graded_key))


def _graded_key(index: Sequence[int]) -> tuple:
    return (sum(index), tuple(-e for e in index))


def sub_indices(index: Sequence[int]) -> tuple[MultiIndex, ...]:
    """All I1 <= I in graded-lexicographic order."""
    return enumerate_upto(len(index), tuple(index))
