"""Small deterministic streaming algorithms for exercising the compilers."""

from __future__ import annotations

from math import ceil, log2

from .reduction import DeterministicAlg
from .streams import Update


class ModMemory(DeterministicAlg):
    """Remembers every coordinate mod k; computes the total function x mod (k,..,k)."""

    def __init__(self, n: int, k: int):
        if k < 1:
            raise ValueError("k must be positive")
        self.n = n
        self.k = k
        self.state_bits = max(1, ceil(log2(k ** n))) if k > 1 else 0

    @property
    def initial_state(self):
        return (0,) * self.n

    def transition(self, state, update: Update):
        i, d = update
        out = list(state)
        out[i - 1] = (out[i - 1] + d) % self.k
        return tuple(out)

    def output(self, state):
        return state

    def brute(self, x):
        """The function this algorithm computes, evaluated directly."""
        return tuple(x[i] % self.k for i in range(1, self.n + 1))


class SumMod(DeterministicAlg):
    """Counts the coordinate sum mod k; optionally answers only its parity.

    With ``parity_output`` it solves the relation "parity of the coordinate
    sum" (k must be even), which makes it a general-mode compilation target.
    """

    def __init__(self, n: int, k: int, parity_output: bool = False):
        if k < 1:
            raise ValueError("k must be positive")
        if parity_output and k % 2:
            raise ValueError("parity output needs an even modulus")
        self.n = n
        self.k = k
        self.parity_output = parity_output
        self.state_bits = max(1, ceil(log2(k))) if k > 1 else 0

    @property
    def initial_state(self):
        return 0

    def transition(self, state, update: Update):
        return (state + update.delta) % self.k

    def output(self, state):
        return state % 2 if self.parity_output else state

    def brute(self, x):
        total = sum(v for _, v in x.items())
        return (total % self.k) % 2 if self.parity_output else total % self.k


class SingleState(DeterministicAlg):
    """One state, constant answer."""

    def __init__(self, n: int, answer=0):
        self.n = n
        self.answer = answer
        self.state_bits = 0

    @property
    def initial_state(self):
        return ()

    def transition(self, state, update: Update):
        return state

    def output(self, state):
        return self.answer


class Mixer(DeterministicAlg):
    """Scrambled transitions over 2**bits states; a backtracking stress test."""

    def __init__(self, n: int, bits: int):
        self.n = n
        self.state_bits = bits
        self._mask = (1 << bits) - 1

    @property
    def initial_state(self):
        return 0

    def transition(self, state, update: Update):
        i, d = update
        mixed = (state * 2654435761 + i * 97 + d) & 0xFFFFFFFF
        return (mixed ^ (mixed >> 7)) & self._mask

    def output(self, state):
        return state


class Forgetful(DeterministicAlg):
    """Two-coordinate memory that coarsens when the second coordinate moves.

    Tracks the first coordinate mod 4 while the second is 0 mod 4, but only
    mod 2 otherwise.  Drives the compilers through their backtracking path
    deterministically.
    """

    n = 2
    state_bits = 4  # 10 reachable states

    @property
    def initial_state(self):
        return (0, 0)

    def transition(self, state, update: Update):
        alpha, beta = state
        i, d = update
        if i == 1:
            modulus = 4 if beta == 0 else 2
            return ((alpha + d) % modulus, beta)
        beta = (beta + d) % 4
        if beta != 0:
            alpha %= 2
        return (alpha, beta)

    def output(self, state):
        return state


TOY_ALGS = {
    "mod-memory": lambda n, k: ModMemory(n, k),
    "sum-mod": lambda n, k: SumMod(n, k),
    "sum-mod-parity": lambda n, k: SumMod(n, k, parity_output=True),
    "single-state": lambda n, k: SingleState(n),
    "mixer": lambda n, k: Mixer(n, max(1, k)),
    "forgetful": lambda n, k: Forgetful(),
}


def make_toy_alg(name: str, n: int, k: int = 2) -> DeterministicAlg:
    try:
        factory = TOY_ALGS[name]
    except KeyError:
        raise ValueError(f"unknown toy algorithm {name!r}; known: {sorted(TOY_ALGS)}")
    return factory(n, k)
