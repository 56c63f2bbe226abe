"""Three-player triangle-parity gadget over constrained turnstile streams.

An instance spreads n hidden triangles (plus isolated padding edges) across
three players, one player per side-pair of a triangle of vertex groups; every
triangle's three edge labels XOR to the same hidden bit.  The encodings place
each player's input in its own coordinate range, and the trackers recover the
hidden bit from a single pass in logarithmic space: they watch the two words of
one random vertex and, once those decode, opportunistically watch one word of
the implied partner vertex.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from math import ceil, log2
from typing import List, Optional, Tuple

from .streams import FrequencyVector, Stream, Update

PLAYERS = ((0, 1), (1, 2), (2, 0))

BOT = "bot"  # decoded blank symbol


class InvalidInstance(ValueError):
    pass


def player_of(s: int, t: int) -> int:
    for p, (x, y) in enumerate(PLAYERS):
        if {x, y} == {s, t}:
            return p
    raise ValueError(f"no player joins sides {s} and {t}")


def block_index(player: int, side: int) -> int:
    a, b = PLAYERS[player]
    if side == a:
        return 2 * player
    if side == b:
        return 2 * player + 1
    raise ValueError(f"side {side} not incident to player {player}")


def word_size(N: int) -> int:
    """Bits per symbol word; one spare top bit above the vertex-index width."""
    return 1 + ceil(log2(N + 1))


def int_bits(value: int, width: int) -> Tuple[int, ...]:
    """Big-endian bits of value in the given width."""
    return tuple((value >> (width - 1 - k)) & 1 for k in range(width))


def encode_symbol(symbol, width: int) -> Tuple[int, ...]:
    """Blank symbol becomes the zero word; (l, z) becomes bits of l, each XOR z."""
    if symbol is None:
        return (0,) * width
    l, z = symbol
    return tuple(b ^ z for b in int_bits(l, width))


def decode_word_bits(bits, N: int):
    """Inverse of encode_symbol: BOT, an (l, z) pair, or None when invalid."""
    if any(b not in (0, 1) for b in bits):
        return None
    if not any(bits):
        return BOT
    z = bits[0]
    l = 0
    for b in bits[1:]:
        l = (l << 1) | (b ^ z)
    if not 1 <= l <= N:
        return None
    return (l, z)


def sign_correct(values, M: int) -> Tuple[int, ...]:
    """Round every entry to -M, 0 or M by sign."""
    return tuple(M if v > 0 else -M if v < 0 else 0 for v in values)


def bits_from_signs(values, M: int) -> Tuple[int, ...]:
    """Map +M to 1 and -M to 0; anything else is outside the domain."""
    out = []
    for v in values:
        if v == M:
            out.append(1)
        elif v == -M:
            out.append(0)
        else:
            raise ValueError(f"entry {v} not in {{-{M}, {M}}}")
    return tuple(out)


@dataclass
class PromiseInstance:
    """Players' triple lists plus the hidden parity and triangle ground truth."""

    n: int
    tau: int
    players: Tuple[List[Tuple[int, int, int]], ...]  # per player: (u, v, z)
    triangles: Tuple[Tuple[int, int, int], ...]       # (side0, side1, side2) vertices

    @property
    def N(self) -> int:
        return 30 * self.n


def random_instance(n: int, tau: int, rng: random.Random) -> PromiseInstance:
    """Uniformly random valid instance with the given hidden parity."""
    if n < 1:
        raise ValueError("need at least one triangle")
    if tau not in (0, 1):
        raise ValueError("parity bit must be 0 or 1")
    N = 30 * n
    iso_per_player = 9 * n

    tri_verts = []
    iso_verts = {}  # (side, player) -> vertex list
    for side in range(3):
        sample = rng.sample(range(1, N + 1), n + 2 * iso_per_player)
        tri_verts.append(sample[:n])
        incident = [p for p in range(3) if side in PLAYERS[p]]
        iso_verts[(side, incident[0])] = sample[n:n + iso_per_player]
        iso_verts[(side, incident[1])] = sample[n + iso_per_player:]

    z01 = [rng.randint(0, 1) for _ in range(n)]
    z12 = [rng.randint(0, 1) for _ in range(n)]
    z20 = [tau ^ z01[t] ^ z12[t] for t in range(n)]
    labels = (z01, z12, z20)

    players = []
    for p, (a, b) in enumerate(PLAYERS):
        triples = [(tri_verts[a][t], tri_verts[b][t], labels[p][t]) for t in range(n)]
        triples += [(iso_verts[(a, p)][k], iso_verts[(b, p)][k], rng.randint(0, 1))
                    for k in range(iso_per_player)]
        rng.shuffle(triples)
        players.append(triples)

    triangles = tuple((tri_verts[0][t], tri_verts[1][t], tri_verts[2][t])
                      for t in range(n))
    return PromiseInstance(n, tau, tuple(players), triangles)


def validate_instance(inst: PromiseInstance) -> Tuple[Tuple[int, int, int], ...]:
    """Check every promise; returns the triangles found."""
    N = inst.N
    if len(inst.players) != 3:
        raise InvalidInstance("need exactly three players")
    maps = []
    for p, triples in enumerate(inst.players):
        if len(triples) != N // 3:
            raise InvalidInstance(f"player {p} has {len(triples)} triples, wants {N // 3}")
        us = [u for u, _, _ in triples]
        vs = [v for _, v, _ in triples]
        if len(set(us)) != len(us) or len(set(vs)) != len(vs):
            raise InvalidInstance(f"player {p} repeats a vertex")
        for u, v, z in triples:
            if not (1 <= u <= N and 1 <= v <= N) or z not in (0, 1):
                raise InvalidInstance(f"player {p} triple {(u, v, z)} out of range")
        maps.append({u: (v, z) for u, v, z in triples})

    m01, m12, m20 = maps
    degree: dict = {}
    for p, triples in enumerate(inst.players):
        a, b = PLAYERS[p]
        for u, v, _ in triples:
            degree[(a, u)] = degree.get((a, u), 0) + 1
            degree[(b, v)] = degree.get((b, v), 0) + 1
    if any(d > 2 for d in degree.values()):
        raise InvalidInstance("a vertex has degree above 2")

    triangles = []
    parities = []
    for u, (v, zuv) in m01.items():
        hop = m12.get(v)
        if hop is None:
            continue
        w, zvw = hop
        back = m20.get(w)
        if back is None or back[0] != u:
            continue
        triangles.append((u, v, w))
        parities.append(zuv ^ zvw ^ back[1])
    if len(triangles) != inst.n:
        raise InvalidInstance(f"found {len(triangles)} triangles, wants {inst.n}")
    if any(par != inst.tau for par in parities):
        raise InvalidInstance("a triangle's label parity disagrees with tau")

    tri_nodes = {(side, verts[side]) for verts in triangles for side in range(3)}
    for node, d in degree.items():
        if d == 2 and node not in tri_nodes:
            raise InvalidInstance(f"degree-2 vertex {node} outside all triangles")
    return tuple(triangles)


class Layout:
    """Coordinate layout of the bit encoding: 6 blocks x N symbols x B bits."""

    def __init__(self, n: int):
        self.n = n
        self.N = 30 * n
        self.B = word_size(self.N)
        self.dim = 6 * self.N * self.B

    def word_base(self, block: int, pos: int) -> int:
        """First coordinate (1-based) of the word for symbol `pos` of `block`."""
        return block * self.N * self.B + (pos - 1) * self.B + 1

    def word_coords(self, block: int, pos: int) -> range:
        base = self.word_base(block, pos)
        return range(base, base + self.B)


@dataclass
class EncodedInstance:
    """Outer symbols already passed through the inner bit code."""

    n: int
    variant: str                # "binary" | "pm"
    M: Optional[int]
    words: Tuple[Tuple[Tuple[int, ...], ...], ...]  # [block][pos-1] -> bit word

    @property
    def layout(self) -> Layout:
        return Layout(self.n)

    def value(self, block: int, pos: int, bit: int) -> int:
        b = self.words[block][pos - 1][bit]
        if self.variant == "binary":
            return b
        return self.M if b else -self.M

    def vector(self) -> FrequencyVector:
        lay = self.layout
        entries = {}
        for block in range(6):
            for pos in range(1, lay.N + 1):
                base = lay.word_base(block, pos)
                for k, b in enumerate(self.words[block][pos - 1]):
                    v = b if self.variant == "binary" else (self.M if b else -self.M)
                    if v:
                        entries[base + k] = v
        return FrequencyVector(lay.dim, entries)


def encode_instance(inst: PromiseInstance, variant: str = "binary",
                    M: Optional[int] = None) -> EncodedInstance:
    """Deterministic injective encoding; raises on malformed instances."""
    validate_instance(inst)
    if variant not in ("binary", "pm"):
        raise ValueError(f"unknown variant {variant!r}")
    if variant == "pm":
        if M is None or M < 1:
            raise ValueError("pm variant needs M >= 1")
    else:
        M = None
    lay = Layout(inst.n)
    symbols = [[None] * lay.N for _ in range(6)]
    for p, triples in enumerate(inst.players):
        for u, v, z in triples:
            symbols[2 * p][u - 1] = (v, z)
            symbols[2 * p + 1][v - 1] = (u, z)
    words = tuple(tuple(encode_symbol(sym, lay.B) for sym in block)
                  for block in symbols)
    return EncodedInstance(inst.n, variant, M, words)


def decode_instance(enc: EncodedInstance) -> PromiseInstance:
    """Rebuild the players' lists from the first block of each player."""
    lay = enc.layout
    players = []
    for p in range(3):
        triples = []
        for u in range(1, lay.N + 1):
            sym = decode_word_bits(enc.words[2 * p][u - 1], lay.N)
            if sym is None:
                raise InvalidInstance(f"block {2 * p} word {u} does not decode")
            if sym == BOT:
                continue
            v, z = sym
            triples.append((u, v, z))
        players.append(triples)

    m01 = {u: (v, z) for u, v, z in players[0]}
    m12 = {u: (v, z) for u, v, z in players[1]}
    m20 = {u: (v, z) for u, v, z in players[2]}
    tau = None
    triangles = []
    for u, (v, zuv) in m01.items():
        hop = m12.get(v)
        if hop is None:
            continue
        w, zvw = hop
        back = m20.get(w)
        if back is None or back[0] != u:
            continue
        triangles.append((u, v, w))
        tau = zuv ^ zvw ^ back[1]
    if tau is None:
        raise InvalidInstance("no triangle found while decoding")
    inst = PromiseInstance(enc.n, tau, tuple(players), tuple(triangles))
    validate_instance(inst)
    return inst


@dataclass(frozen=True)
class Schedule:
    """How the encoded bits are revealed as a stream."""

    kind: str                 # "insert" | "churn" | "last-player"
    churn: int = 0            # max extra toggles per coordinate
    last_player: int = 0      # designated player for "last-player"

    @classmethod
    def insert_only(cls):
        return cls("insert")

    @classmethod
    def random_churn(cls, k: int):
        if k < 1:
            raise ValueError("churn schedule needs k >= 1")
        return cls("churn", churn=k)

    @classmethod
    def adversarial_last(cls, player: int, churn: int = 1):
        if player not in (0, 1, 2):
            raise ValueError("player must be 0, 1 or 2")
        return cls("last-player", churn=churn, last_player=player)


def _churned_updates(enc: EncodedInstance, churn: int, rng: random.Random,
                     last_blocks=frozenset()) -> List[Tuple[int, int]]:
    """Per-coordinate churn sequences, uniformly interleaved.

    Every event gets an iid uniform key, sorted within its coordinate so the
    coordinate's own order survives the global sort.  Blocks in last_blocks
    get keys offset past everyone else's, so they finish last.
    """
    lay = enc.layout
    B, N = lay.B, lay.N
    binary = enc.variant == "binary"
    M = enc.M
    if not binary:
        lo, span = -(2 * M - 1), 2 * (2 * M - 1) + 1
    rnd = rng.random
    cmax = churn + 1
    keyed = []
    ap = keyed.append
    for block in range(6):
        offset = 1.0 if block in last_blocks else 0.0
        coord = block * N * B
        for word in enc.words[block]:
            for bit in word:
                coord += 1
                r = int(rnd() * cmax)
                if binary:
                    if bit:
                        deltas = [1] + [-1, 1] * r
                    elif r:
                        deltas = [1, -1] * r
                    else:
                        continue
                else:
                    final = M if bit else -M
                    if r:
                        deltas = []
                        cur = 0
                        for _ in range(r):
                            value = lo + int(rnd() * span)
                            if value != cur:
                                deltas.append(value - cur)
                                cur = value
                        if final != cur:
                            deltas.append(final - cur)
                    else:
                        deltas = (final,)
                if len(deltas) == 1:
                    ap((offset + rnd(), coord, deltas[0]))
                else:
                    ks = sorted(rnd() for _ in deltas)
                    for key, delta in zip(ks, deltas):
                        ap((offset + key, coord, delta))
    keyed.sort()
    return [(coord, delta) for _, coord, delta in keyed]


def _list_stream(dim: int, updates: list) -> Stream:
    # generated in-range by construction; skip the validating copy
    return Stream.lazy(dim, updates.__iter__, length=len(updates))


def instance_stream(enc: EncodedInstance, schedule: Schedule,
                    rng: random.Random) -> Stream:
    """A stream with the encoded bits as its final state, obeying the box."""
    lay = enc.layout
    if schedule.kind == "insert":
        return _list_stream(lay.dim, enc.vector().items())
    if schedule.kind == "churn":
        return _list_stream(lay.dim, _churned_updates(enc, schedule.churn, rng))
    if schedule.kind == "last-player":
        p = schedule.last_player
        return _list_stream(lay.dim, _churned_updates(enc, schedule.churn, rng,
                                                      last_blocks={2 * p, 2 * p + 1}))
    raise ValueError(f"unknown schedule kind {schedule.kind!r}")


_LABELINGS = ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0))


class _TrackerBase:
    """Shared machinery: word layout, watch table, space accounting."""

    def __init__(self, n: int, rng: random.Random, labeling=None, u=None):
        self.lay = Layout(n)
        self.labeling = labeling if labeling is not None else _LABELINGS[rng.randrange(6)]
        self.u = u if u is not None else rng.randint(1, self.lay.N)
        a, b, c = self.labeling
        self.sides = (a, b, c)
        self.w1_base = self.lay.word_base(block_index(player_of(a, b), a), self.u)
        self.w2_base = self.lay.word_base(block_index(player_of(a, c), a), self.u)
        self.w3_block = block_index(player_of(b, c), b)
        self.w3_base = None
        self.target = None
        self.invalid = False
        self.watch = {}
        for k in range(self.lay.B):
            self.watch[self.w1_base + k] = ("w1", k)
            self.watch[self.w2_base + k] = ("w2", k)
        self.peak_bits = 0
        self._note_bits()

    def _base_bits(self) -> int:
        idx = ceil(log2(self.lay.N))
        # labeling, u, two fully tracked words, decoded target slot
        return 3 + idx + 2 * self.lay.B * self._value_bits() + (idx + 2)

    def _note_bits(self):
        self.peak_bits = max(self.peak_bits, self.space_bits())

    def space_bits(self) -> int:
        bits = self._base_bits()
        if self.w3_base is not None:
            bits += self.lay.B * self._third_slot_bits()
        return bits

    def interested(self):
        return tuple(self.watch)

    def _retarget(self, new_target):
        """Swap the opportunistically tracked word; returns watch changes."""
        added, removed = [], []
        if self.w3_base is not None:
            for k in range(self.lay.B):
                coord = self.w3_base + k
                removed.append(coord)
                self.watch.pop(coord, None)
            self.w3_base = None
        self._clear_third()
        self.target = new_target
        if new_target is not None:
            v = new_target[0]
            self.w3_base = self.lay.word_base(self.w3_block, v)
            for k in range(self.lay.B):
                coord = self.w3_base + k
                self.watch[coord] = ("w3", k)
                added.append(coord)
        self._note_bits()
        return added, removed


class BinaryTracker(_TrackerBase):
    """Single-pass tracker for binary streams."""

    def __init__(self, n, rng, labeling=None, u=None):
        self.w1 = None
        self.w2 = None
        self.known = {}
        super().__init__(n, rng, labeling, u)
        self.w1 = [0] * self.lay.B
        self.w2 = [0] * self.lay.B

    def _value_bits(self) -> int:
        return 1

    def _third_slot_bits(self) -> int:
        return 2  # known flag + bit value

    def _clear_third(self):
        self.known = {}

    def process(self, update):
        coord, d = update
        role = self.watch.get(coord)
        if role is None:
            return None
        which, k = role
        if which == "w1":
            self.w1[k] += d
            if self.w1[k] not in (0, 1):
                self.invalid = True
            sym = decode_word_bits(self.w1, self.lay.N)
            # a decodable word adopts a new target; transiently undecodable
            # windows keep the old one (reading a postfix stays sound)
            if isinstance(sym, tuple) and sym != self.target:
                return self._retarget(sym)
        elif which == "w2":
            self.w2[k] += d
            if self.w2[k] not in (0, 1):
                self.invalid = True
        else:
            if d > 0:
                self.known[k] = 1
            elif d < 0:
                self.known[k] = 0
            if abs(d) > 1:
                self.invalid = True
        return None

    def result(self):
        if self.invalid:
            return None
        sym1 = decode_word_bits(self.w1, self.lay.N)
        sym2 = decode_word_bits(self.w2, self.lay.N)
        if not isinstance(sym1, tuple) or not isinstance(sym2, tuple):
            return None
        v, z_uv = sym1
        w, z_uw = sym2
        if self.target != (v, z_uv) or not self.known:
            return None
        k, bit = min(self.known.items())
        z_vw = bit ^ int_bits(w, self.lay.B)[k]
        return z_uv ^ z_vw ^ z_uw


class BoxedTracker(_TrackerBase):
    """Single-pass tracker for box-constrained streams with values in [-M, M]."""

    def __init__(self, n, M, rng, labeling=None, u=None):
        if M < 1:
            raise ValueError("M must be >= 1")
        self.M = M
        self.w1 = None
        self.w2 = None
        self.window = {}
        super().__init__(n, rng, labeling, u)
        self.w1 = [0] * self.lay.B
        self.w2 = [0] * self.lay.B

    def _value_bits(self) -> int:
        return 1 + ceil(log2(2 * self.M))

    def _third_slot_bits(self) -> int:
        # current, min and max of the relative value, each box-bounded
        return 3 * (1 + ceil(log2(4 * self.M)))

    def _clear_third(self):
        self.window = {}

    def _decode(self, values):
        pattern = sign_correct(values, self.M)
        if any(p == 0 for p in pattern):
            return None
        return decode_word_bits(bits_from_signs(pattern, self.M), self.lay.N)

    def process(self, update):
        coord, d = update
        role = self.watch.get(coord)
        if role is None:
            return None
        which, k = role
        if which == "w1":
            self.w1[k] += d
            sym = self._decode(self.w1)
            if isinstance(sym, tuple) and sym != self.target:
                return self._retarget(sym)
        elif which == "w2":
            self.w2[k] += d
        else:
            cur, mn, mx = self.window.get(k, (0, 0, 0))
            cur += d
            self.window[k] = (cur, min(mn, cur), max(mx, cur))
        return None

    def result(self):
        if self.invalid:
            return None
        sym1 = self._decode(self.w1)
        sym2 = self._decode(self.w2)
        if not isinstance(sym1, tuple) or not isinstance(sym2, tuple):
            return None
        v, z_uv = sym1
        w, z_uw = sym2
        if self.target != (v, z_uv):
            return None
        w_bits = int_bits(w, self.lay.B)
        for k in range(self.lay.B):
            cur, mn, mx = self.window.get(k, (0, 0, 0))
            if mn <= cur - self.M:
                return z_uv ^ (1 ^ w_bits[k]) ^ z_uw
            if mx >= cur + self.M:
                return z_uv ^ (0 ^ w_bits[k]) ^ z_uw
        return None


def _run_single(tracker, stream: Stream, meter=None):
    watch = tracker.watch  # same dict object across retargets
    proc = tracker.process
    for upd in stream:
        if upd[0] in watch:
            proc(upd)
    if meter is not None:
        meter.observe(tracker.peak_bits)
    return tracker.result()


def track_binary(stream: Stream, n: int, rng: random.Random, *,
                 labeling=None, u=None, meter=None):
    """One tracker over one pass of a binary stream; 0/1 answers equal tau."""
    return _run_single(BinaryTracker(n, rng, labeling, u), stream, meter)


def track_boxed(stream: Stream, n: int, M: int, rng: random.Random, *,
                labeling=None, u=None, meter=None):
    """One tracker over one pass of a box-constrained stream."""
    return _run_single(BoxedTracker(n, M, rng, labeling, u), stream, meter)


def track_amplified(stream: Stream, n: int, variant: str, rng: random.Random, *,
                    copies: int = 360, M: Optional[int] = None, meter=None):
    """Run many independent trackers over the same single pass.

    Returns the first non-blank answer; every non-blank answer agrees on valid
    instances, so which one is returned does not matter.
    """
    if copies < 1:
        raise ValueError("need at least one copy")
    if variant == "binary":
        trackers = [BinaryTracker(n, rng) for _ in range(copies)]
    elif variant == "pm":
        trackers = [BoxedTracker(n, M, rng) for _ in range(copies)]
    else:
        raise ValueError(f"unknown variant {variant!r}")

    listeners: dict = {}
    for cid, tr in enumerate(trackers):
        for coord in tr.interested():
            listeners.setdefault(coord, set()).add(cid)

    for upd in stream:
        audience = listeners.get(upd[0])
        if not audience:
            continue
        for cid in tuple(audience):
            changes = trackers[cid].process(upd)
            if changes:
                added, removed = changes
                for coord in removed:
                    group = listeners.get(coord)
                    if group:
                        group.discard(cid)
                        if not group:
                            del listeners[coord]
                for coord in added:
                    listeners.setdefault(coord, set()).add(cid)

    if meter is not None:
        meter.observe(max(tr.peak_bits for tr in trackers))
    for tr in trackers:
        answer = tr.result()
        if answer is not None:
            return answer
    return None
