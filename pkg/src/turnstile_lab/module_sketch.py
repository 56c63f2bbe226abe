"""Generalized linear sketch: a finite Z-module of wrap-with-carry counters.

The module is the product of cyclic ranges ``[0, a_i)``.  Whenever coordinate
``i`` leaves its range it wraps by ``a_i`` and injects an "overflow" vector
``o_i`` supported on lower coordinates.  ``canonicalize`` maps any integer
vector to its unique in-range representative; it is a module homomorphism, so
the sketch is mergeable and indifferent to stream length and order.
"""

from __future__ import annotations

import json
from math import ceil, log2
from typing import Iterable, Optional, Tuple

from .streams import FrequencyVector, Update


class SketchParams:
    """Moduli ``a_i >= 1`` and overflow vectors ``o_i`` (support below ``i``).

    Overflow entries are canonically in ``[0, a_j)``; params produced by the
    compilers may carry entries anywhere in ``(-a_j, a_j)``, which the
    canonicalization handles identically (floored arithmetic throughout).
    """

    __slots__ = ("n", "a", "o")

    def __init__(self, n: int, a: Iterable[int], o: Iterable[Iterable[Tuple[int, int]]]):
        self.n = n
        self.a = tuple(a)
        self.o = tuple(tuple(sorted((j, v) for j, v in oi if v != 0)) for oi in o)
        if len(self.a) != n or len(self.o) != n:
            raise ValueError("need exactly one modulus and one overflow vector per coordinate")
        for i, ai in enumerate(self.a, start=1):
            if ai < 1:
                raise ValueError(f"modulus a_{i} = {ai} must be >= 1")
        for i, oi in enumerate(self.o, start=1):
            for j, v in oi:
                if not 1 <= j < i:
                    raise ValueError(f"o_{i} entry at coordinate {j} not below {i}")
                if abs(v) >= self.a[j - 1]:
                    raise ValueError(f"|o_{i}[{j}]| = {abs(v)} not below a_{j} = {self.a[j - 1]}")

    def is_canonical(self) -> bool:
        """True when every overflow entry lies in ``[0, a_j)``."""
        return all(v > 0 for oi in self.o for _, v in oi)

    def modulus(self, i: int) -> int:
        return self.a[i - 1]

    def overflow(self, i: int) -> Tuple[Tuple[int, int], ...]:
        return self.o[i - 1]

    def overflow_vector(self, i: int) -> FrequencyVector:
        return FrequencyVector(self.n, dict(self.o[i - 1]))

    @property
    def nontrivial_count(self) -> int:
        return sum(1 for ai in self.a if ai > 1)

    def __eq__(self, other):
        if not isinstance(other, SketchParams):
            return NotImplemented
        return (self.n, self.a, self.o) == (other.n, other.a, other.o)

    def __hash__(self):
        return hash((self.n, self.a, self.o))

    def __repr__(self):
        return f"SketchParams(n={self.n}, a={self.a})"


class SketchVector:
    """Element of the module: entries ``0 <= v_i < a_i``, zeros not stored."""

    __slots__ = ("params", "_entries")

    def __init__(self, params: SketchParams, entries: Optional[dict] = None):
        self.params = params
        self._entries = {}
        if entries:
            for i, v in entries.items():
                if v == 0:
                    continue
                if not 0 < v < params.a[i - 1]:
                    raise ValueError(f"entry {v} at coordinate {i} outside [0, {params.a[i - 1]})")
                self._entries[i] = v

    @classmethod
    def zero(cls, params: SketchParams) -> "SketchVector":
        return cls(params)

    def get(self, i: int) -> int:
        return self._entries.get(i, 0)

    __getitem__ = get

    def items(self):
        return sorted(self._entries.items())

    def is_zero(self) -> bool:
        return not self._entries

    def to_frequency_vector(self) -> FrequencyVector:
        return FrequencyVector(self.params.n, dict(self._entries))

    def __eq__(self, other):
        if not isinstance(other, SketchVector):
            return NotImplemented
        return self.params == other.params and self._entries == other._entries

    def __hash__(self):
        return hash((self.params, tuple(sorted(self._entries.items()))))

    def __repr__(self):
        return f"SketchVector({dict(self.items())})"


def _entries_of(x) -> dict:
    if isinstance(x, SketchVector):
        return dict(x._entries)
    if isinstance(x, FrequencyVector):
        return {i: v for i, v in x.items()}
    raise TypeError(f"cannot canonicalize {type(x).__name__}")


def canonicalize(params: SketchParams, x) -> SketchVector:
    """Map an integer vector to its in-range representative.

    Single downward pass: coordinate i keeps its floored remainder mod a_i and
    the floored quotient spills o_i into lower coordinates, which have not been
    processed yet.  Works for arbitrary signed entries.
    """
    if isinstance(x, FrequencyVector) and x.n != params.n:
        raise ValueError(f"dimension mismatch: {x.n} vs {params.n}")
    if isinstance(x, SketchVector) and x.params != params:
        raise ValueError("params mismatch")
    z = _entries_of(x)
    a = params.a
    o = params.o
    out = {}
    for i in range(params.n, 0, -1):
        r = z.pop(i, 0)
        if r == 0:
            continue
        q, rem = divmod(r, a[i - 1])
        if rem:
            out[i] = rem
        if q:
            for j, v in o[i - 1]:
                z[j] = z.get(j, 0) + q * v
    return SketchVector(params, out)


def module_add(params: SketchParams, u: SketchVector, v: SketchVector) -> SketchVector:
    """Module addition: canonicalize the integer sum."""
    if u.params != params or v.params != params:
        raise ValueError("params mismatch")
    total = dict(u._entries)
    for i, w in v._entries.items():
        total[i] = total.get(i, 0) + w
    return canonicalize(params, FrequencyVector(params.n, total))


def module_neg(params: SketchParams, u: SketchVector) -> SketchVector:
    """Additive inverse: canonicalize the negated vector."""
    return canonicalize(params, u.to_frequency_vector().neg())


def scalar_mul(params: SketchParams, k: int, u: SketchVector) -> SketchVector:
    """k-fold module sum by binary doubling; equals canonicalize(k * u)."""
    if k < 0:
        return scalar_mul(params, -k, module_neg(params, u))
    acc = SketchVector.zero(params)
    base = u
    while k:
        if k & 1:
            acc = module_add(params, acc, base)
        k >>= 1
        if k:
            base = module_add(params, base, base)
    return acc


def apply_update(params: SketchParams, state: SketchVector, update: Update) -> SketchVector:
    """Fold one stream update into the sketch state."""
    if state.params != params:
        raise ValueError("params mismatch")
    i, d = update
    if d == 0:
        return state
    entries = dict(state._entries)
    entries[i] = entries.get(i, 0) + d
    return canonicalize(params, FrequencyVector(params.n, entries))


def sketch_stream(params: SketchParams, stream) -> SketchVector:
    """Run a whole stream through the sketch from the zero state."""
    state = SketchVector.zero(params)
    for upd in stream:
        state = apply_update(params, state, upd)
    return state


def state_bits(params: SketchParams) -> int:
    """Stored bits of one sketch state: sum of ceil(log2 a_i) over a_i > 1."""
    return sum(ceil(log2(ai)) for ai in params.a if ai > 1)


def params_bits(params: SketchParams) -> int:
    """State bits plus index bits for the nontrivial coordinates."""
    index_bits = ceil(log2(params.n)) if params.n > 1 else 0
    return state_bits(params) + params.nontrivial_count * index_bits


def space_bits(obj) -> int:
    """Bit accounting for a state (SketchVector) or for params (adds index bits)."""
    if isinstance(obj, SketchVector):
        return state_bits(obj.params)
    if isinstance(obj, SketchParams):
        return params_bits(obj)
    raise TypeError(f"no space accounting for {type(obj).__name__}")


def params_to_json(params: SketchParams) -> str:
    return json.dumps({
        "n": params.n,
        "a": list(params.a),
        "o": [[[j, v] for j, v in oi] for oi in params.o],
    })


def params_from_json(text: str) -> SketchParams:
    data = json.loads(text)
    return SketchParams(data["n"], data["a"], [[(j, v) for j, v in oi] for oi in data["o"]])


def random_params(rng, n_max: int = 6, a_max: int = 8) -> SketchParams:
    """Random valid params with canonical overflow entries in [0, a_j)."""
    n = rng.randint(1, n_max)
    a = [rng.randint(1, a_max) for _ in range(n)]
    o = []
    for i in range(1, n + 1):
        oi = []
        for j in range(1, i):
            if a[j - 1] > 1 and rng.random() < 0.5:
                v = rng.randint(1, a[j - 1] - 1)
                oi.append((j, v))
        o.append(oi)
    return SketchParams(n, a, o)
