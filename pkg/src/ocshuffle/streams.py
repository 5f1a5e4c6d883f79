"""Counter-based coin streams.

Coin r of pool `label` under seed s is a pure function of (s, label, r),
so any pool can be consumed at any rate, replayed, or read out of order
without global coordination.  The mixing function is splitmix64, which
is more than adequate for fair-coin extraction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

MASK64 = (1 << 64) - 1
GOLDEN64 = 0x9E3779B97F4A7C15  # 2^64 / golden ratio, the splitmix increment

HEADS = 1
TAILS = 0

COIN_NAMES = {HEADS: "H", TAILS: "T"}


def splitmix64(x: int) -> int:
    x = (x + GOLDEN64) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return (x ^ (x >> 31)) & MASK64


def fnv1a64(s: str) -> int:
    h = 0xCBF29CE484222325
    for ch in s.encode("utf-8"):
        h = ((h ^ ch) * 0x100000001B3) & MASK64
    return h


def stream_key(seed: int, label: str) -> int:
    """64-bit key identifying pool `label` under a master seed."""
    return splitmix64((seed & MASK64) ^ fnv1a64(label))


def coin_at(seed: int, label: str, r: int) -> int:
    """Coin r (0-indexed) of pool `label` under `seed`; HEADS or TAILS."""
    key = stream_key(seed, label)
    word = splitmix64((key + (r & MASK64) * GOLDEN64) & MASK64)
    return (word >> 63) & 1


def coin_from_key(key: int, r: int) -> int:
    """Same as coin_at but with the stream key precomputed."""
    word = splitmix64((key + (r & MASK64) * GOLDEN64) & MASK64)
    return (word >> 63) & 1


def trial_stream_key(seed: int, trial: int) -> int:
    """Stream key for Monte-Carlo trial `trial` under a master seed.

    Mirrored bit-for-bit by the compiled kernels; changing this breaks
    recorded experiment outputs.
    """
    base = stream_key(seed, "trial")
    return splitmix64((base + (trial & MASK64) * GOLDEN64) & MASK64)


@dataclass
class CoinStream:
    """A sequential view of a counter-based coin pool."""

    seed: int
    label: str
    consumed: int = 0
    _key: int = field(init=False, repr=False)

    def __post_init__(self):
        self._key = stream_key(self.seed, self.label)

    def peek(self, r: int) -> int:
        """Coin at absolute index r without consuming anything."""
        return coin_from_key(self._key, r)

    def next(self) -> int:
        c = coin_from_key(self._key, self.consumed)
        self.consumed += 1
        return c


@dataclass
class FixedCoinStream:
    """A pool with an explicitly injected coin sequence (for replays).

    Reads past the injected prefix fall back to the counter-based
    stream, so short golden scenarios do not have to script every coin.
    """

    seed: int
    label: str
    prefix: tuple = ()
    consumed: int = 0

    def __post_init__(self):
        self._key = stream_key(self.seed, self.label)

    def peek(self, r: int) -> int:
        if r < len(self.prefix):
            return self.prefix[r]
        return coin_from_key(self._key, r)

    def next(self) -> int:
        c = self.peek(self.consumed)
        self.consumed += 1
        return c
