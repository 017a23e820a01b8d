"""Counter-based random streams.

Every draw is a pure function of ``(seed, stream, counter)``: the stream key is
derived from seed and stream id, and the 64-bit output word at position ``c``
is the SplitMix64 finalizer applied to ``key + (c + 1) * GOLDEN``.  Because no
hidden state is shared between draws, a batch of replications can be advanced
in lockstep with numpy and still reproduce exactly what a single replication
would see on its own.

Inside an episode, counters are structured rather than sequential::

    bits 63..24  round t
    bits 23..22  purpose (alpha / kappa / reward / tie)
    bits 21..12  arm
    bits 11..0   index within the draw (rejection attempts)

so the value used for, say, the kappa uniform of arm 2 in round 517 does not
depend on how many uniforms earlier rounds consumed.
"""

from __future__ import annotations

import numpy as np

RNG_ID = "splitmix64-counter/v1"

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_STREAM_SALT = np.uint64(0xD1B54A32D192ED03)

PURPOSE_ALPHA = 0
PURPOSE_KAPPA = 1
PURPOSE_REWARD = 2
PURPOSE_TIE = 3

MAX_ARMS = 1 << 10
MAX_INDEX = 1 << 12
MAX_ROUND = 1 << 40

_U64 = (1 << 64) - 1


def mix64(z: np.ndarray) -> np.ndarray:
    """SplitMix64 output finalizer on a uint64 array (wrapping arithmetic)."""
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def stream_keys(seed: int, streams) -> np.ndarray:
    """Keys for one or many stream ids under a common seed."""
    s = np.asarray(streams, dtype=np.uint64)
    with np.errstate(over="ignore"):
        inner = mix64(s * _STREAM_SALT + GOLDEN)
        return mix64(np.uint64(seed & _U64) ^ inner)


def words_at(keys: np.ndarray, counters: np.ndarray) -> np.ndarray:
    # uint64 array arithmetic wraps silently; only 0-d operands would warn
    with np.errstate(over="ignore"):
        return mix64(np.add(keys, (counters + np.uint64(1)) * GOLDEN))


def uniforms_at(keys: np.ndarray, counters: np.ndarray) -> np.ndarray:
    """Uniform doubles on (0, 1] at the given counter positions (53-bit)."""
    w = words_at(keys, counters)
    return ((w >> np.uint64(11)) + np.uint64(1)).astype(np.float64) * 2.0**-53


def packed_counter(t: int, purpose: int, arm: int = 0) -> int:
    """Base counter of the draw slot for (round, purpose, arm)."""
    if not 0 <= t < MAX_ROUND:
        raise ValueError(f"round {t} outside counter range")
    if not 0 <= arm < MAX_ARMS:
        raise ValueError(f"arm {arm} outside counter range")
    return (t << 24) | (purpose << 22) | (arm << 12)


class RngStream:
    """A single-owner sequential view of one counter-based stream.

    ``uniform()`` and friends consume positions ``position, position + 1, ...``.
    ``at(counter)`` returns a fresh view of the same stream starting elsewhere,
    which is how the policy addresses its per-round draw slots.
    """

    __slots__ = ("seed", "stream", "position", "_key")

    def __init__(self, seed: int, stream: int = 0, position: int = 0):
        if not (0 <= seed <= _U64 and 0 <= stream <= _U64):
            raise ValueError("seed and stream must be unsigned 64-bit integers")
        self.seed = int(seed)
        self.stream = int(stream)
        self.position = int(position)
        self._key = stream_keys(self.seed, self.stream)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream={self.stream}, position={self.position})"

    @property
    def key(self) -> np.uint64:
        return self._key

    def at(self, counter: int) -> "RngStream":
        return RngStream(self.seed, self.stream, counter)

    def slot(self, t: int, purpose: int, arm: int = 0) -> "RngStream":
        return self.at(packed_counter(t, purpose, arm))

    def uniforms(self, n: int) -> np.ndarray:
        c = np.arange(self.position, self.position + n, dtype=np.uint64)
        self.position += n
        return uniforms_at(self._key, c)

    def uniform(self) -> float:
        return float(self.uniforms(1)[0])
