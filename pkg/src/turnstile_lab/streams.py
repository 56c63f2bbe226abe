"""Turnstile stream model: updates, frequency vectors, stream algebra, constraints.

Streams are replayable, lazily generated update sequences.  The compilers in
:mod:`turnstile_lab.reduction` build streams with ``2**s``-fold repetitions, so
nothing here ever requires materializing a stream in memory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import islice
from typing import Callable, Iterable, Iterator, NamedTuple, Optional, Tuple


class Update(NamedTuple):
    """Single turnstile update: add ``delta`` to coordinate ``index``.

    Streams yield plain ``(index, delta)`` tuples for speed; ``Update`` is the
    named form for constructing them readably, and compares equal to the bare
    tuple.
    """

    index: int
    delta: int


class FrequencyVector:
    """Sparse integer vector over coordinates ``1..n``; zeros are not stored."""

    __slots__ = ("n", "_entries")

    def __init__(self, n: int, entries: Optional[dict] = None):
        if n < 0:
            raise ValueError("dimension must be nonnegative")
        self.n = n
        self._entries = {}
        if entries:
            for i, v in entries.items():
                if not 1 <= i <= n:
                    raise ValueError(f"coordinate {i} outside [1, {n}]")
                if v != 0:
                    self._entries[i] = v

    @classmethod
    def zero(cls, n: int) -> "FrequencyVector":
        return cls(n)

    @classmethod
    def unit(cls, n: int, i: int, value: int = 1) -> "FrequencyVector":
        return cls(n, {i: value})

    @classmethod
    def from_dense(cls, values: Iterable[int]) -> "FrequencyVector":
        values = list(values)
        return cls(len(values), {i + 1: v for i, v in enumerate(values)})

    def to_dense(self) -> list:
        return [self._entries.get(i, 0) for i in range(1, self.n + 1)]

    def get(self, i: int) -> int:
        return self._entries.get(i, 0)

    __getitem__ = get

    def items(self):
        """Nonzero (coordinate, value) pairs in increasing coordinate order."""
        return sorted(self._entries.items())

    @property
    def norm0(self) -> int:
        return len(self._entries)

    @property
    def norm_inf(self) -> int:
        return max((abs(v) for v in self._entries.values()), default=0)

    def is_zero(self) -> bool:
        return not self._entries

    def add(self, other: "FrequencyVector") -> "FrequencyVector":
        self._check_dim(other)
        out = dict(self._entries)
        for i, v in other._entries.items():
            w = out.get(i, 0) + v
            if w:
                out[i] = w
            else:
                out.pop(i, None)
        return FrequencyVector(self.n, out)

    def sub(self, other: "FrequencyVector") -> "FrequencyVector":
        return self.add(other.neg())

    def neg(self) -> "FrequencyVector":
        return FrequencyVector(self.n, {i: -v for i, v in self._entries.items()})

    def scale(self, k: int) -> "FrequencyVector":
        if k == 0:
            return FrequencyVector(self.n)
        return FrequencyVector(self.n, {i: k * v for i, v in self._entries.items()})

    def __add__(self, other):
        return self.add(other)

    def __sub__(self, other):
        return self.sub(other)

    def __neg__(self):
        return self.neg()

    def __eq__(self, other):
        if not isinstance(other, FrequencyVector):
            return NotImplemented
        return self.n == other.n and self._entries == other._entries

    def __hash__(self):
        return hash((self.n, tuple(sorted(self._entries.items()))))

    def __repr__(self):
        return f"FrequencyVector({self.n}, {dict(self.items())})"

    def _check_dim(self, other):
        if self.n != other.n:
            raise ValueError(f"dimension mismatch: {self.n} vs {other.n}")


class Stream:
    """Replayable sequence of updates on coordinates ``1..n``.

    Backed either by a concrete tuple of updates or by a zero-argument factory
    returning a fresh iterator.  Iterating a lazy stream costs time, never
    memory.
    """

    __slots__ = ("n", "_updates", "_factory", "_length")

    def __init__(self, n: int, updates: Optional[Iterable] = None, *,
                 factory: Optional[Callable[[], Iterator[Update]]] = None,
                 length: Optional[int] = None):
        if (updates is None) == (factory is None):
            raise ValueError("exactly one of updates/factory required")
        self.n = n
        self._factory = factory
        if updates is not None:
            self._updates = tuple((i, d) for i, d in updates)
            if not all(1 <= i <= n for i, _ in self._updates):
                bad = next(i for i, _ in self._updates if not 1 <= i <= n)
                raise ValueError(f"update index {bad} outside [1, {n}]")
            self._length = len(self._updates)
        else:
            self._updates = None
            self._length = length

    @classmethod
    def empty(cls, n: int) -> "Stream":
        return cls(n, ())

    @classmethod
    def lazy(cls, n: int, factory: Callable[[], Iterator[Tuple[int, int]]],
             length: Optional[int] = None) -> "Stream":
        return cls(n, factory=factory, length=length)

    def __iter__(self) -> Iterator[Tuple[int, int]]:
        if self._updates is not None:
            return iter(self._updates)
        return iter(self._factory())

    def length(self) -> int:
        """Number of updates; counts by iteration for lazy streams."""
        if self._length is None:
            self._length = sum(1 for _ in self)
        return self._length

    def prefix(self, t: int) -> "Stream":
        if t < 0:
            raise ValueError("prefix length must be nonnegative")
        return Stream.lazy(self.n, lambda: islice(iter(self), t))

    def materialize(self) -> "Stream":
        return Stream(self.n, list(self))

    def __repr__(self):
        if self._updates is not None and len(self._updates) <= 8:
            return f"Stream({self.n}, {list(self._updates)})"
        size = "?" if self._length is None else self._length
        return f"Stream(n={self.n}, length={size})"


def freq(stream: Stream, t: Optional[int] = None) -> FrequencyVector:
    """State of the stream after its first ``t`` updates (default: all)."""
    entries: dict = {}
    seen = 0
    for i, d in stream:
        if t is not None and seen == t:
            break
        seen += 1
        w = entries.get(i, 0) + d
        if w:
            entries[i] = w
        else:
            entries.pop(i, None)
    if t is not None and seen < t:
        raise ValueError(f"time {t} out of range for stream of length {seen}")
    return FrequencyVector(stream.n, entries)


def canonical_stream(x: FrequencyVector) -> Stream:
    """Stream inserting each nonzero coordinate of ``x`` once, in index order."""
    return Stream(x.n, x.items())


def negate(stream: Stream) -> Stream:
    """Same update sequence with every delta sign-flipped."""
    return Stream.lazy(stream.n,
                       lambda: ((i, -d) for i, d in stream),
                       length=stream._length)


def concat(first: Stream, second: Stream, *rest: Stream) -> Stream:
    """Updates of the given streams, one after another."""
    parts = (first, second) + rest
    n = first.n
    for s in parts[1:]:
        if s.n != n:
            raise ValueError(f"dimension mismatch: {n} vs {s.n}")
    lengths = [s._length for s in parts]
    total = sum(lengths) if all(l is not None for l in lengths) else None

    def gen():
        for s in parts:
            yield from s

    return Stream.lazy(n, gen, length=total)


def repeat(stream: Stream, times: int) -> Stream:
    """The stream concatenated with itself ``times`` times (lazily)."""
    if times < 0:
        raise ValueError("repeat count must be nonnegative")

    def gen():
        for _ in range(times):
            yield from stream

    size = None if stream._length is None else times * stream._length
    return Stream.lazy(stream.n, gen, length=size)


def lint_zero_deltas(stream: Stream) -> list:
    """Times (1-based) of zero-delta updates; legal but never emitted by generators."""
    return [t for t, (_, d) in enumerate(stream, start=1) if d == 0]


@dataclass(frozen=True)
class StreamConstraint:
    """Predicate on all prefix states of a stream."""

    kind: str  # "binary" | "box" | "length" | "strict"
    bound: Optional[int] = None

    @classmethod
    def binary(cls):
        return cls("binary")

    @classmethod
    def box(cls, m: int):
        if m < 0:
            raise ValueError("box bound must be nonnegative")
        return cls("box", m)

    @classmethod
    def length(cls, l: int):
        if l < 0:
            raise ValueError("length bound must be nonnegative")
        return cls("length", l)

    @classmethod
    def strict_turnstile(cls):
        return cls("strict")


class ConstraintReport(NamedTuple):
    ok: bool
    violation_time: Optional[int]  # minimal violating prefix length, or None


def check_constraint(stream: Stream, constraint: StreamConstraint) -> ConstraintReport:
    """True iff every prefix state satisfies the constraint; else first bad time."""
    kind = constraint.kind
    if kind == "length":
        bound = constraint.bound
        for t, _ in enumerate(stream, start=1):
            if t > bound:
                return ConstraintReport(False, t)
        return ConstraintReport(True, None)

    entries: dict = {}
    for t, (i, d) in enumerate(stream, start=1):
        v = entries.get(i, 0) + d
        if v:
            entries[i] = v
        else:
            entries.pop(i, None)
        if kind == "binary":
            bad = v not in (0, 1)
        elif kind == "box":
            bad = abs(v) > constraint.bound
        elif kind == "strict":
            bad = v < 0
        else:
            raise ValueError(f"unknown constraint kind {kind!r}")
        if bad:
            return ConstraintReport(False, t)
    return ConstraintReport(True, None)


def little_endian_vector(j: int, moduli_prefix: tuple, free_coordinate: int,
                         n: Optional[int] = None) -> FrequencyVector:
    """The ``j``-th vector of ``prod Z_a x N x {0}^*`` in little-endian order.

    Coordinate 1 varies fastest; the free coordinate takes the remaining
    quotient.  ``j`` counts from 0.
    """
    if j < 0:
        raise ValueError("enumeration index must be nonnegative")
    if len(moduli_prefix) != free_coordinate - 1:
        raise ValueError("need one modulus per coordinate below the free one")
    if n is None:
        n = free_coordinate
    entries = {}
    for c, a in enumerate(moduli_prefix, start=1):
        if a < 1:
            raise ValueError("moduli must be positive")
        j, digit = divmod(j, a)
        if digit:
            entries[c] = digit
    if j:
        entries[free_coordinate] = j
    return FrequencyVector(n, entries)


def little_endian_iter(moduli_prefix, free_coordinate: int,
                       n: Optional[int] = None) -> Iterator[FrequencyVector]:
    """Lazily enumerate ``prod Z_a x N x {0}^*`` in little-endian order, from 0."""
    moduli_prefix = tuple(moduli_prefix)
    j = 0
    while True:
        yield little_endian_vector(j, moduli_prefix, free_coordinate, n)
        j += 1


def write_stream(path, stream: Stream) -> None:
    """JSON-lines format: header ``{"n": n}`` then one update per line."""
    with open(path, "w") as fh:
        fh.write(json.dumps({"n": stream.n}) + "\n")
        for i, d in stream:
            fh.write(json.dumps({"i": i, "d": d}) + "\n")


def read_stream(path) -> Stream:
    """Read a JSON-lines stream file written by :func:`write_stream`."""
    with open(path) as fh:
        header = json.loads(fh.readline())
        updates = [(rec["i"], rec["d"])
                   for rec in (json.loads(line) for line in fh if line.strip())]
    return Stream(header["n"], updates)
