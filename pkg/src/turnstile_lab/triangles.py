"""Turnstile triangle counting under two stream regimes.

Both estimators emulate edge sampling: keep each edge as a "seed" with a
k-wise-independent coin, remember the neighborhood of every live seed, and at
the end count the triangles a seed closes with two later-arriving neighbors,
scaled by the inverse sampling rate.  The bounded-degree variant caps the seed
set; the bounded-length variant keeps multiplicity counters with clamped
neighbor counts and caps each neighbor set.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from math import ceil, floor, isqrt, log2
from typing import Dict, FrozenSet, Iterable, Optional, Set, Tuple

from .streams import FrequencyVector, Stream, Update

_PRIME = 2 ** 61 - 1  # Mersenne prime, comfortably above every edge key


class KWiseHash:
    """Degree-(k-1) polynomial over a prime field, thresholded to a coin.

    Any k fixed keys get independent uniform field values.  The coin comes
    from comparing the value against floor(p * field size), so the achieved
    probability differs from num/den by less than 2**-60; no test below can
    tell the difference.
    """

    def __init__(self, k: int, p_num: int, p_den: int, seed: int):
        if not 0 < p_num <= p_den:
            raise ValueError("sampling probability must be in (0, 1]")
        if k < 1:
            raise ValueError("independence must be at least 1")
        rng = random.Random(seed)
        self.k = k
        self.p = Fraction(p_num, p_den)
        self.coeffs = [rng.randrange(_PRIME) for _ in range(k)]
        self.threshold = (p_num * _PRIME) // p_den

    def value(self, key: int) -> int:
        acc = 0
        for c in self.coeffs:
            acc = (acc * key + c) % _PRIME
        return acc

    def __call__(self, key: int) -> bool:
        return self.value(key) < self.threshold


def make_kwise_hash(k: int, p_num: int, p_den: int, seed: int) -> KWiseHash:
    return KWiseHash(k, p_num, p_den, seed)


def edge_key(u: int, v: int) -> int:
    """Injective integer key for an undirected edge."""
    if u > v:
        u, v = v, u
    s = u + v
    return s * (s + 1) // 2 + v


def edge_coord(n: int, u: int, v: int) -> int:
    """1-based coordinate of edge (u, v) among all n-vertex pairs, row-major."""
    if u > v:
        u, v = v, u
    if not 1 <= u < v <= n:
        raise ValueError(f"not an edge of an {n}-vertex graph: {(u, v)}")
    r = u - 1
    return r * n - r * (r + 1) // 2 + (v - u)


def coord_edge(n: int, coord: int) -> Tuple[int, int]:
    """Inverse of edge_coord."""
    c0 = coord - 1
    # row r starts at r*n - r*(r+1)/2; solve and fix up rounding
    r = (2 * n - 1 - isqrt((2 * n - 1) ** 2 - 8 * c0)) // 2
    while r * n - r * (r + 1) // 2 > c0:
        r -= 1
    while (r + 1) * n - (r + 1) * (r + 2) // 2 <= c0:
        r += 1
    u = r + 1
    v = u + (c0 - (r * n - r * (r + 1) // 2)) + 1
    return u, v


def graph_dimension(n: int) -> int:
    return n * (n - 1) // 2


def vertices_from_dimension(dim: int) -> int:
    n = (1 + isqrt(1 + 8 * dim)) // 2
    if graph_dimension(n) != dim:
        raise ValueError(f"{dim} is not a pair count")
    return n


def count_triangles(edges: Iterable[Tuple[int, int]]) -> int:
    """Exact triangle count by neighborhood intersection."""
    adj: Dict[int, Set[int]] = {}
    pairs = set()
    for u, v in edges:
        if u > v:
            u, v = v, u
        if (u, v) in pairs or u == v:
            continue
        pairs.add((u, v))
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    total = 0
    for u, v in pairs:
        total += len(adj[u] & adj[v])
    return total // 3


@dataclass
class EstimateResult:
    estimate: Fraction
    seed_peak: int          # largest seed-set size over all prefixes
    seed_cap: Optional[int]
    stored_peak: int        # largest number of stored entries over all prefixes
    peak_bits: int          # stored_peak scaled by per-entry bits


def estimate_bounded_degree(stream: Stream, p: Fraction, m_bound: int, d: int,
                            rng: random.Random, cap_enabled: bool = True) -> EstimateResult:
    """Single-pass estimator for streams whose every prefix has max degree d."""
    n = vertices_from_dimension(stream.n)
    h = KWiseHash(3, p.numerator, p.denominator, rng.randrange(2 ** 62))
    cap = floor(2 * p * m_bound) if cap_enabled else None

    seeds: Dict[Tuple[int, int], Set[Tuple[int, int]]] = {}
    at_vertex: Dict[int, Set[Tuple[int, int]]] = {}
    seed_peak = stored = stored_peak = 0

    for coord, delta in stream:
        if delta == 0:
            continue
        u, v = coord_edge(n, coord)
        e = (u, v)
        incident = at_vertex.get(u, set()) | at_vertex.get(v, set())
        if delta > 0:
            if h(edge_key(u, v)) and e not in seeds and (cap is None or len(seeds) < cap):
                seeds[e] = set()
                at_vertex.setdefault(u, set()).add(e)
                at_vertex.setdefault(v, set()).add(e)
                stored += 1
                seed_peak = max(seed_peak, len(seeds))
            for f in incident:
                if f != e and e not in seeds[f]:
                    seeds[f].add(e)
                    stored += 1
        else:
            if e in seeds:
                stored -= 1 + len(seeds[e])
                del seeds[e]
                at_vertex[u].discard(e)
                at_vertex[v].discard(e)
            for f in incident:
                if f != e and f in seeds and e in seeds[f]:
                    seeds[f].discard(e)
                    stored -= 1
        stored_peak = max(stored_peak, stored)

    total = 0
    for (u, v), grabbed in seeds.items():
        around_u = {x + y - u for x, y in grabbed if u in (x, y)}
        around_v = {x + y - v for x, y in grabbed if v in (x, y)}
        total += len(around_u & around_v)
    bits_per_edge = 2 * ceil(log2(max(n, 2)))
    return EstimateResult(Fraction(total) / p, seed_peak, cap,
                          stored_peak, stored_peak * bits_per_edge)


def estimate_bounded_length(stream: Stream, p: Fraction, d: int, L: int,
                            eps: Fraction, t_floor: int, rng: random.Random,
                            cap_enabled: bool = True) -> EstimateResult:
    """Single-pass estimator for strict streams of bounded total length."""
    n = vertices_from_dimension(stream.n)
    h = KWiseHash(2, p.numerator, p.denominator, rng.randrange(2 ** 62))
    cap_frac = Fraction(2 * d * d * L) / (Fraction(eps) * t_floor) if cap_enabled else None

    counts: Dict[Tuple[int, int], int] = {}      # running multiplicity per hashed edge
    nsets: Dict[Tuple[int, int], Dict[Tuple[int, int], int]] = {}
    at_vertex: Dict[int, Set[Tuple[int, int]]] = {}
    seed_peak = stored = stored_peak = 0

    for coord, chi in stream:
        if chi == 0:
            continue
        u, v = coord_edge(n, coord)
        e = (u, v)
        if h(edge_key(u, v)):
            old = counts.get(e, 0)
            if e not in counts:
                stored += 1
            new = old + chi
            counts[e] = new
            if old == 0 and new > 0:
                dropped = nsets.pop(e, None)
                if dropped is not None:
                    stored -= len(dropped)
                nsets[e] = {}
                at_vertex.setdefault(u, set()).add(e)
                at_vertex.setdefault(v, set()).add(e)
            elif new <= 0 and e in nsets:
                stored -= len(nsets[e])
                del nsets[e]
                at_vertex[u].discard(e)
                at_vertex[v].discard(e)
            seed_peak = max(seed_peak, len(nsets))
        for f in at_vertex.get(u, set()) | at_vertex.get(v, set()):
            if f == e:
                continue
            grabbed = nsets[f]
            if e in grabbed:
                grabbed[e] = max(grabbed[e] + chi, 0)
            elif cap_frac is None or len(grabbed) < cap_frac:
                grabbed[e] = max(chi, 0)
                stored += 1
        stored_peak = max(stored_peak, stored)

    total = 0
    for e, grabbed in nsets.items():
        if counts.get(e) != 1:
            continue
        u, v = e
        around_u = {x + y - u for (x, y), z in grabbed.items() if z == 1 and u in (x, y)}
        around_v = {x + y - v for (x, y), z in grabbed.items() if z == 1 and v in (x, y)}
        total += len(around_u & around_v)
    cap_int = None if cap_frac is None else ceil(cap_frac)
    bits_per_entry = 3 * ceil(log2(max(n, 2)))  # edge plus a small counter
    return EstimateResult(Fraction(total) / p, seed_peak, cap_int,
                          stored_peak, stored_peak * bits_per_entry)


def median_of_runs(run, repetitions: int):
    """Median of independent estimator runs; repetitions must be odd."""
    if repetitions < 1 or repetitions % 2 == 0:
        raise ValueError("repetitions must be odd and positive")
    values = sorted(run(i) for i in range(repetitions))
    return values[repetitions // 2]


@dataclass(frozen=True)
class GraphStreamSpec:
    """Recipe for a planted-triangle graph stream."""

    n: int
    d: int
    T: int
    kind: str            # "degree" | "length"
    churn: int = 0       # per-edge churn intensity
    L: Optional[int] = None  # total length budget, "length" kind only


@dataclass
class GeneratedGraphStream:
    stream: Stream
    edges: FrozenSet[Tuple[int, int]]
    T: int
    m: int
    L: Optional[int] = None  # length budget actually used, "length" kind only


class InfeasibleSpec(ValueError):
    pass


def _planted_graph(spec: GraphStreamSpec, rng: random.Random):
    """Final graph: T triangles from 4-cliques plus spare triangles, then a
    triangle-free matching over leftover vertices."""
    n, d, T = spec.n, spec.d, spec.T
    q, r = divmod(T, 4)
    need = 4 * q + 3 * r
    if need > n:
        raise InfeasibleSpec(f"{T} triangles need {need} vertices, have {n}")
    if T > 0 and d < (3 if q else 2):
        raise InfeasibleSpec(f"degree bound {d} too small for the planted blocks")
    order = rng.sample(range(1, n + 1), n)
    edges = set()
    pos = 0
    for _ in range(q):
        block = order[pos:pos + 4]
        pos += 4
        for i in range(4):
            for j in range(i + 1, 4):
                a, b = block[i], block[j]
                edges.add((min(a, b), max(a, b)))
    for _ in range(r):
        block = order[pos:pos + 3]
        pos += 3
        for i in range(3):
            for j in range(i + 1, 3):
                a, b = block[i], block[j]
                edges.add((min(a, b), max(a, b)))
    leftovers = order[pos:]
    if d >= 1:
        for i in range(0, len(leftovers) - 1, 2):
            a, b = leftovers[i], leftovers[i + 1]
            edges.add((min(a, b), max(a, b)))
    return frozenset(edges)


def generate_graph_stream(spec: GraphStreamSpec, rng: random.Random) -> GeneratedGraphStream:
    """Stream whose final state is a planted graph, with verified ground truth."""
    edges = _planted_graph(spec, rng)
    truth = count_triangles(edges)
    if truth != spec.T:
        raise InfeasibleSpec(f"planted graph has {truth} triangles, wanted {spec.T}")
    n = spec.n
    dim = graph_dimension(n)
    degree: Dict[int, int] = {}
    for u, v in edges:
        degree[u] = degree.get(u, 0) + 1
        degree[v] = degree.get(v, 0) + 1

    per_coord: Dict[int, list] = {}
    if spec.kind == "degree":
        for u, v in edges:
            rounds = rng.randint(0, spec.churn) if spec.churn else 0
            per_coord[edge_coord(n, u, v)] = [1] + [-1, 1] * rounds
        if spec.churn:
            residual = {v: spec.d - degree.get(v, 0) for v in range(1, n + 1)}
            attempts = spec.churn * max(4, len(edges))
            for _ in range(attempts):
                u, v = rng.randint(1, n), rng.randint(1, n)
                if u == v:
                    continue
                e = (min(u, v), max(u, v))
                if e in edges or residual[u] < 1 or residual[v] < 1:
                    continue
                coord = edge_coord(n, *e)
                if coord in per_coord:
                    continue
                residual[u] -= 1
                residual[v] -= 1
                per_coord[coord] = [1, -1] * rng.randint(1, max(1, spec.churn))
    elif spec.kind == "length":
        m = len(edges)
        used_length = spec.L if spec.L is not None else 2 * m
        if used_length < m:
            raise InfeasibleSpec(f"L = {used_length} below the {m} required insertions")
        for u, v in edges:
            per_coord[edge_coord(n, u, v)] = [1]
        budget = used_length - m
        edge_list = sorted(edges)
        patterns = ([1, -1], [2, -2], [2, -1, -1])
        while budget >= 2:
            unit = patterns[rng.randrange(3)]
            if len(unit) > budget:
                unit = patterns[0]
            if rng.random() < 0.5 and edge_list:
                u, v = edge_list[rng.randrange(len(edge_list))]
            else:
                u, v = rng.randint(1, n), rng.randint(1, n)
                if u == v:
                    continue
            coord = edge_coord(n, min(u, v), max(u, v))
            events = per_coord.setdefault(coord, [])
            # keep each coordinate's own prefix nonnegative: churn goes in front
            per_coord[coord] = unit + events
            budget -= len(unit)
    else:
        raise InfeasibleSpec(f"unknown stream kind {spec.kind!r}")

    tokens = []
    for coord, events in per_coord.items():
        tokens += [coord] * len(events)
    rng.shuffle(tokens)
    cursors = {coord: 0 for coord in per_coord}
    updates = []
    for coord in tokens:
        k = cursors[coord]
        cursors[coord] = k + 1
        updates.append(Update(coord, per_coord[coord][k]))
    stream = Stream(dim, updates)
    used_length = None
    if spec.kind == "length":
        used_length = spec.L if spec.L is not None else 2 * len(edges)
    return GeneratedGraphStream(stream, edges, truth, len(edges), used_length)


def random_degree_graph(n: int, d: int, m_target: int, rng: random.Random) -> FrozenSet[Tuple[int, int]]:
    """Random graph with max degree at most d, by rejection."""
    edges: Set[Tuple[int, int]] = set()
    degree: Dict[int, int] = {}
    attempts = 20 * m_target + 50
    while len(edges) < m_target and attempts:
        attempts -= 1
        u, v = rng.randint(1, n), rng.randint(1, n)
        if u == v:
            continue
        e = (min(u, v), max(u, v))
        if e in edges or degree.get(u, 0) >= d or degree.get(v, 0) >= d:
            continue
        edges.add(e)
        degree[u] = degree.get(u, 0) + 1
        degree[v] = degree.get(v, 0) + 1
    return frozenset(edges)


def insert_only_stream(n: int, edges: Iterable[Tuple[int, int]]) -> Stream:
    """Canonical insertion stream for an edge set."""
    coords = sorted(edge_coord(n, u, v) for u, v in edges)
    return Stream(graph_dimension(n), [Update(c, 1) for c in coords])
