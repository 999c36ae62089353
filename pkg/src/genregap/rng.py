"""Deterministic random primitives shared across the toolkit.

All randomness flows from explicit 64-bit seeds through SplitMix64 so that
results reproduce bit-for-bit across platforms and across the compiled and
pure-Python sampling kernels, which implement the same generator.
"""

from __future__ import annotations

import hashlib

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


def splitmix64_next(state: int) -> tuple[int, int]:
    """Advance SplitMix64 by one step; return (new_state, output word)."""
    state = (state + _GOLDEN) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return state, z ^ (z >> 31)


def derive_seed(root: int | str, *parts: object) -> int:
    """Derive a stable 64-bit child seed from a root seed and a label path.

    Uses SHA-256 so the derivation is independent of process hash
    randomization and identical across runs and platforms.
    """
    h = hashlib.sha256()
    h.update(str(root).encode("utf-8"))
    for part in parts:
        h.update(b"/")
        h.update(str(part).encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "big")


class DetRng:
    """SplitMix64-backed generator with the few sampling ops the toolkit needs."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state, out = splitmix64_next(self.state)
        return out

    def next_double(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * _INV53

    def randint(self, n: int) -> int:
        """Uniform integer in [0, n). Truncation bias is O(2**-53)."""
        i = int(self.next_double() * n)
        return n - 1 if i >= n else i

    def choice(self, seq):
        return seq[self.randint(len(seq))]

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(i + 1)
            items[i], items[j] = items[j], items[i]
