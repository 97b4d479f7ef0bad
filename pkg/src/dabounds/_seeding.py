"""Deterministic seed derivation.

Every stochastic routine derives its generators from ``(base_seed, *keys)``
through :class:`numpy.random.SeedSequence` spawn keys, so a stream depends
only on its logical position (trial block, source index, replication, ...)
and never on scheduling or thread count.  Generators are PCG64; Gaussian
draws use numpy's ziggurat sampler.
"""
from __future__ import annotations

import zlib

import numpy as np

# Monte-Carlo trials are grouped in fixed-size blocks; one stream per block.
TRIAL_BLOCK = 4096


def _key(k) -> int:
    if isinstance(k, (bool, np.bool_)):
        return int(k)
    if isinstance(k, (int, np.integer)):
        if k < 0:
            raise ValueError("seed keys must be nonnegative")
        return int(k)
    # floats and strings: stable across processes and platforms
    return zlib.crc32(repr(k).encode("utf-8"))


def check_seed(seed) -> int:
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be a nonnegative integer, got {seed!r}")
    if seed < 0:
        raise ValueError(f"seed must be a nonnegative integer, got {seed!r}")
    return int(seed)


def derive_rng(seed: int, *keys) -> np.random.Generator:
    """Generator for the stream identified by ``(seed, *keys)``."""
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(_key(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int, *keys) -> int:
    """A 64-bit integer seed for ``(seed, *keys)``; used where an int is handed on."""
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(_key(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def trial_blocks(n_trials: int, block: int = TRIAL_BLOCK) -> list[tuple[int, int]]:
    """Split ``n_trials`` into ``(block_index, size)`` pairs of fixed layout."""
    if n_trials < 1:
        raise ValueError("number of trials must be >= 1")
    out = []
    start, i = 0, 0
    while start < n_trials:
        size = min(block, n_trials - start)
        out.append((i, size))
        start += size
        i += 1
    return out
