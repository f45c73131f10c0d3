"""Deterministic random source for every stochastic choice in the toolkit.

Weight initialization, dataset noise, sampling, and shuffling all draw from
this generator so that a single integer seed pins down a whole run bit for
bit, and so that any reimplementation can reproduce the exact streams from
the constants below.

Generator: xoshiro256** (Blackman & Vigna). State update uses shifts 17/45
and the scrambler ``rotl(s1 * 5, 7) * 9``. The four state words are seeded
from SplitMix64 (increment ``0x9E3779B97F4B7C15``, multipliers
``0xBF58476D1CE4E5B9`` and ``0x94D049BB133111EB``, shifts 30/27/31), so any
64-bit seed, including zero, is valid.

Derived values:

* ``random()``   -- float64 in [0, 1): ``(next_uint64() >> 11) * 2**-53``
* ``below(n)``   -- int in [0, n): ``(next_uint64() * n) >> 64``
* ``shuffle(xs)``-- in-place Fisher-Yates from the top, ``j = below(i + 1)``
"""

_MASK = (1 << 64) - 1
_SPLITMIX_INC = 0x9E3779B97F4B7C15


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


def _splitmix_step(state: int) -> tuple[int, int]:
    state = (state + _SPLITMIX_INC) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


def derive_seeds(seed: int, n: int) -> tuple[int, ...]:
    """First ``n`` outputs of the SplitMix64 stream started at ``seed``.

    Used to fan a single user-facing seed out into independent sub-seeds
    (dataset noise, train/validation split, weight init, shuffling) without
    correlating the resulting streams.
    """
    state = seed & _MASK
    out = []
    for _ in range(n):
        state, value = _splitmix_step(state)
        out.append(value)
    return tuple(out)


# Fixed fan-out used wherever one user-facing seed drives a whole pipeline.
ROLE_NAMES = ("dataset", "surgery", "split", "init", "shuffle", "probe")


def seed_roles(seed: int) -> dict[str, int]:
    """Named sub-seeds for the standard pipeline roles, in ROLE_NAMES order."""
    return dict(zip(ROLE_NAMES, derive_seeds(seed, len(ROLE_NAMES))))


class Rng:
    """xoshiro256** stream seeded via SplitMix64."""

    def __init__(self, seed: int):
        state = seed & _MASK
        s = []
        for _ in range(4):
            state, value = _splitmix_step(state)
            s.append(value)
        self._s = s

    def next_uint64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & _MASK, 7) * 9) & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def random(self) -> float:
        """Uniform float64 in [0, 1)."""
        return (self.next_uint64() >> 11) * 2.0**-53

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def below(self, n: int) -> int:
        """Uniform int in [0, n) via the multiply-high reduction."""
        if n <= 0:
            raise ValueError("below() needs n >= 1")
        return (self.next_uint64() * n) >> 64

    def shuffle(self, xs: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(xs) - 1, 0, -1):
            j = self.below(i + 1)
            xs[i], xs[j] = xs[j], xs[i]
