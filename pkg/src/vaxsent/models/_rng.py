"""Seed streams: one 64-bit root seed, counter-based child generators per task."""

import zlib

import numpy as np


def _word(part) -> int:
    if isinstance(part, (int, np.integer)) and not isinstance(part, bool) and part >= 0:
        return int(part)
    return zlib.crc32(str(part).encode("utf-8"))


def child_seed(seed: int, *path) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(_word(p) for p in path))


def child_rng(seed: int, *path) -> np.random.Generator:
    """Generator keyed by (seed, path); same key, same stream, in any process."""
    return np.random.Generator(np.random.Philox(child_seed(seed, *path)))


def derive_seed(seed: int, *path) -> int:
    return int(child_seed(seed, *path).generate_state(1, dtype=np.uint64)[0])
