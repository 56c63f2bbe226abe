"""Compilers from a deterministic streaming algorithm to sketch parameters.

Two modes.  Total mode probes the algorithm with short canonical streams and
quotients out state collisions; it suits algorithms computing a total function.
General mode walks a single ever-growing covering stream, records the
state-preserving loops it finds, and recovers answers by replaying the
recorded prefix plus bulk loop corrections, which suits relations / promise
problems.  Both proceed coordinate by coordinate with backtracking.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Tuple

from .module_sketch import SketchParams, SketchVector
from .streams import (FrequencyVector, Stream, Update, canonical_stream, concat,
                      little_endian_vector, negate, repeat)


class DeterministicAlg(ABC):
    """Deterministic transition system over turnstile updates.

    States must be hashable and comparable; the compilers never look inside
    them.  ``state_bits`` declares the space budget: at most ``2**state_bits``
    reachable states.
    """

    n: int
    state_bits: int

    @property
    @abstractmethod
    def initial_state(self):
        ...

    @abstractmethod
    def transition(self, state, update: Update):
        ...

    @abstractmethod
    def output(self, state):
        ...


class StateBudgetError(RuntimeError):
    """More distinct states observed than the declared budget allows."""

    def __init__(self, declared_bits: int, observed: int):
        super().__init__(
            f"observed {observed} distinct states, exceeding the declared "
            f"budget of 2^{declared_bits}")
        self.declared_bits = declared_bits
        self.observed = observed


def run_on_stream(alg: DeterministicAlg, stream: Stream):
    """Fold the transition over the stream; return (final state, answer)."""
    state = alg.initial_state
    for upd in stream:
        state = alg.transition(state, upd)
    return state, alg.output(state)


def _final_state(alg: DeterministicAlg, stream: Stream):
    state = alg.initial_state
    for upd in stream:
        state = alg.transition(state, upd)
    return state


def enumeration_updates(moduli: Tuple[int, ...], free_coordinate: int, n: int,
                        j_start: int, j_stop: int) -> Iterator[Update]:
    """Covering-stream updates taking the enumeration from x_{j_start} to x_{j_stop}.

    Concatenates the canonical streams of the successor differences, i.e. the
    update segment whose frequency is x_{j_stop} - x_{j_start}.
    """
    if j_stop < j_start:
        raise ValueError("segment must move forward")
    digits = []
    j = j_start
    for a in moduli:
        j, d = divmod(j, a)
        digits.append(d)
    digits.append(j)  # free coordinate, unbounded
    for _ in range(j_stop - j_start):
        # increment the little-endian counter; canonical order is index order,
        # and the resets at lower coordinates come before the carry
        p = 0
        while p < len(moduli) and digits[p] == moduli[p] - 1:
            p += 1
        for c in range(p):
            if moduli[c] > 1:
                yield (c + 1, -(moduli[c] - 1))
            digits[c] = 0
        coord = p + 1 if p < len(moduli) else free_coordinate
        yield (coord, 1)
        digits[p] += 1


@dataclass(frozen=True)
class CollisionWitness:
    """Record of the state collision that fixed one coordinate's modulus."""

    index: int                 # coordinate whose (a, o) this collision set
    moduli: Tuple[int, ...]    # enumeration moduli below the free coordinate
    free_coord: int            # enumeration free coordinate at discovery time
    j1: int                    # earlier colliding enumeration index
    j2: int                    # first enumeration index colliding with a prior one

    def x1(self, n: int) -> FrequencyVector:
        return little_endian_vector(self.j1, self.moduli, self.free_coord, n)

    def x2(self, n: int) -> FrequencyVector:
        return little_endian_vector(self.j2, self.moduli, self.free_coord, n)


@dataclass(frozen=True)
class SegmentSpec:
    """Replayable covering-stream piece: enumeration from x_0 through x_{j_stop}."""

    moduli: Tuple[int, ...]
    free_coord: int
    j_stop: int


@dataclass
class CompilationTrace:
    """Everything needed to use and audit a compiled sketch."""

    mode: str                          # "total" | "general"
    params: SketchParams
    state_bits: int
    witnesses: List[CollisionWitness]
    history: List[SegmentSpec] = field(default_factory=list)   # general mode
    prefix_segments: List[int] = field(default_factory=list)   # per index, #segments in pi_i
    transitions_fed: int = 0           # diagnostic: transition calls during compilation

    def prefix_stream(self, index: Optional[int] = None) -> Stream:
        """The recorded prefix pi_index (default pi_n), regenerated lazily."""
        if self.mode != "general":
            raise ValueError("prefix streams exist only in general mode")
        count = len(self.history) if index is None else self.prefix_segments[index - 1]
        segments = self.history[:count]
        n = self.params.n

        def gen():
            for seg in segments:
                yield from enumeration_updates(seg.moduli, seg.free_coord, n, 0, seg.j_stop)

        return Stream.lazy(n, gen)

    def loop_stream(self, index: int) -> Stream:
        """The recorded loop rho_index; freq equals a_i e_i - o_i."""
        w = self.witnesses[index - 1]
        n = self.params.n

        def gen():
            yield from enumeration_updates(w.moduli, w.free_coord, n, w.j1, w.j2)

        return Stream.lazy(n, gen)

    def quotient_vector(self, index: int) -> FrequencyVector:
        """a_i e_i - o_i for the given coordinate."""
        i = index
        entries = {i: self.params.a[i - 1]}
        for j, v in self.params.o[i - 1]:
            entries[j] = -v
        return FrequencyVector(self.params.n, entries)


def _split_diff(diff: FrequencyVector, index: int) -> Tuple[int, list]:
    """Express diff as a_i e_i - o_i; returns (a_i, overflow entries)."""
    a_i = diff[index]
    entries = [(j, -v) for j, v in diff.items() if j < index]
    for j, v in diff.items():
        if j > index:
            raise AssertionError(f"collision difference has support above {index}")
    return a_i, entries


def _find_collision_total(alg, moduli, free_coord, small_space):
    cap = 2 ** alg.state_bits  # pigeonhole: a collision occurs by this index
    n = alg.n
    fed = 0

    def state_at(j):
        nonlocal fed
        x = little_endian_vector(j, moduli, free_coord, n)
        st = alg.initial_state
        for upd in canonical_stream(x):
            st = alg.transition(st, upd)
            fed += 1
        return st

    if small_space:
        for j2 in range(1, cap + 1):
            s2 = state_at(j2)
            for j1 in range(j2):
                if state_at(j1) == s2:
                    return j1, j2, fed
        raise StateBudgetError(alg.state_bits, cap + 1)

    seen = {}
    for j in range(cap + 1):
        s = state_at(j)
        if s in seen:
            return seen[s], j, fed
        seen[s] = j
    raise StateBudgetError(alg.state_bits, len(seen))


def _compile(alg: DeterministicAlg, mode: str, small_space: bool) -> CompilationTrace:
    n, s = alg.n, alg.state_bits
    cap = 2 ** s
    a: list = [None] * n
    o: list = [None] * n
    wit: list = [None] * n
    history: List[SegmentSpec] = []
    prefix_segments: list = [0] * n
    current_state = alg.initial_state
    transitions = 0
    # every backtrack strictly shrinks a positive modulus, so this bounds the loop
    budget = n * (cap + 2)

    i = 1
    while i <= n:
        budget -= 1
        if budget < 0:
            raise RuntimeError("compilation failed to terminate")
        moduli = tuple(a[:i - 1])
        if mode == "total":
            j1, j2, fed = _find_collision_total(alg, moduli, i, small_space)
            transitions += fed
        else:
            j1, j2, state, fed = _find_collision_general(
                alg, history, current_state, moduli, i, small_space)
            transitions += fed
        x1 = little_endian_vector(j1, moduli, i, n)
        x2 = little_endian_vector(j2, moduli, i, n)
        diff = x2 - x1
        a_new, o_new = _split_diff(diff, i)
        if a_new > 0:
            target = i
        else:
            # same free-coordinate value: quotient the largest moving coordinate,
            # which little-endian order guarantees moved upward
            nonzero = [j for j, _ in diff.items()]
            if not nonzero:
                raise AssertionError("collision between identical vectors")
            target = max(nonzero)
            a_new, o_new = _split_diff(diff, target)
            if not 0 < a_new < a[target - 1]:
                raise AssertionError("backtracking must strictly shrink the modulus")
        a[target - 1] = a_new
        o[target - 1] = o_new
        wit[target - 1] = CollisionWitness(target, moduli, i, j1, j2)
        if mode == "general":
            history.append(SegmentSpec(moduli, i, j1))
            prefix_segments[target - 1] = len(history)
            current_state = state
        for k in range(target, i):
            a[k] = o[k] = wit[k] = None
        i = target + 1

    params = SketchParams(n, a, o)
    return CompilationTrace(mode=mode, params=params, state_bits=s, witnesses=wit,
                            history=history, prefix_segments=prefix_segments,
                            transitions_fed=transitions)


def _find_collision_general(alg, history, start_state, moduli, free_coord, small_space):
    cap = 2 ** alg.state_bits
    n = alg.n
    fed = 0

    if small_space:
        def state_at(j):
            nonlocal fed
            st = alg.initial_state
            for seg in history:
                for upd in enumeration_updates(seg.moduli, seg.free_coord, n, 0, seg.j_stop):
                    st = alg.transition(st, upd)
                    fed += 1
            for upd in enumeration_updates(moduli, free_coord, n, 0, j):
                st = alg.transition(st, upd)
                fed += 1
            return st

        for j2 in range(1, cap + 1):
            s2 = state_at(j2)
            for j1 in range(j2):
                if state_at(j1) == s2:
                    return j1, j2, s2, fed
        raise StateBudgetError(alg.state_bits, cap + 1)

    seen = {start_state: 0}
    state = start_state
    for j in range(1, cap + 1):
        for upd in enumeration_updates(moduli, free_coord, n, j - 1, j):
            state = alg.transition(state, upd)
            fed += 1
        if state in seen:
            return seen[state], j, state, fed
        seen[state] = j
    raise StateBudgetError(alg.state_bits, len(seen))


def compile_total(alg: DeterministicAlg, small_space: bool = False) -> CompilationTrace:
    """Compile via collisions between short canonical streams."""
    return _compile(alg, "total", small_space)


def compile_general(alg: DeterministicAlg, small_space: bool = False) -> CompilationTrace:
    """Compile via loops on a single covering stream."""
    return _compile(alg, "general", small_space)


def recover_total(trace: CompilationTrace, alg: DeterministicAlg, sketch: SketchVector):
    """Answer for the original input: run the algorithm on the reduced vector."""
    if trace.mode != "total":
        raise ValueError("trace was not produced in total mode")
    _, answer = run_on_stream(alg, canonical_stream(sketch.to_frequency_vector()))
    return answer


def recovery_stream(trace: CompilationTrace, sketch: SketchVector) -> Stream:
    """The replay stream: prefix, its negation, bulk loop corrections, residual."""
    if trace.mode != "general":
        raise ValueError("trace was not produced in general mode")
    n = trace.params.n
    reps = 2 ** trace.state_bits
    pi = trace.prefix_stream()
    parts = [pi, negate(pi)]
    for i in range(1, n + 1):
        parts.append(repeat(canonical_stream(trace.quotient_vector(i).neg()), reps))
    parts.append(canonical_stream(sketch.to_frequency_vector()))
    return concat(*parts)


def recover_general(trace: CompilationTrace, alg: DeterministicAlg, sketch: SketchVector):
    """Answer valid for any input mapping to this sketch value."""
    _, answer = run_on_stream(alg, recovery_stream(trace, sketch))
    return answer
