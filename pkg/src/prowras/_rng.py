from __future__ import annotations

import zlib

import numpy as np


def as_rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def _key(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part)
    return zlib.crc32(str(part).encode("utf-8"))


def derive_seed(seed: int, *parts) -> np.random.SeedSequence:
    """Seed stream keyed by ``parts``; stable across processes and runs."""
    return np.random.SeedSequence([int(seed), *(_key(p) for p in parts)])


def derive_rng(seed: int, *parts) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *parts))


def derive_int(seed: int, *parts) -> int:
    return int(derive_seed(seed, *parts).generate_state(1, dtype=np.uint32)[0])
