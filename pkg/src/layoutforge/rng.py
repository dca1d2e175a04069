"""Seedable random streams with a documented splitting rule.

Every stochastic component draws from a ``random.Random`` (MT19937, whose
stream CPython guarantees to be stable across platforms) seeded through a
SplitMix64 hash of ``(seed, restart_index, purpose)``.  Distinct purposes
("init", "chain", "t0", ...) therefore never share a stream, and a restart
can be reproduced in isolation from the same base seed.
"""

from __future__ import annotations

import random

_MASK64 = (1 << 64) - 1

# Fixed purpose tags; new tags may be appended but never renumbered.
PURPOSES = {
    "init": 1,
    "chain": 2,
    "t0": 3,
    "oracle": 4,
    "mc": 5,
    "test": 6,
    "level": 7,
}


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, restart_index: int = 0, purpose: str = "chain") -> int:
    """Mix (seed, restart_index, purpose-tag) into a single 64-bit stream seed."""
    if purpose not in PURPOSES:
        raise ValueError(f"unknown rng purpose {purpose!r}")
    h = _splitmix64(seed & _MASK64)
    h = _splitmix64(h ^ (restart_index & _MASK64))
    h = _splitmix64(h ^ PURPOSES[purpose])
    return h


def stream(seed: int, restart_index: int = 0, purpose: str = "chain") -> random.Random:
    """Independent random stream for (seed, restart_index, purpose)."""
    return random.Random(derive_seed(seed, restart_index, purpose))
