"""Shared plumbing: deterministic RNG streams, memory budgeting, float formatting."""

from __future__ import annotations

import numpy as np

# Largest number of float64 entries a single dense intermediate (e.g. the
# sigma(WX) feature matrix) may hold before row-block accumulation kicks in.
DEFAULT_BUDGET = 200_000_000

# Hard cap used by the CLI to refuse configs whose dense n x n outputs alone
# would be unreasonable, before any allocation happens.
HARD_ENTRY_CAP = 2_000_000_000


def rng_stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator derived from a root seed and an integer path.

    All randomness in the package flows through this: a single u64 root seed
    is split into per-component streams by hashing (seed, *key) through
    SeedSequence, so any component can be re-drawn in isolation and results
    do not depend on call order.
    """
    if seed < 0:
        raise ValueError("seed must be a nonnegative integer")
    entropy = [int(seed)] + [int(k) for k in key]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


# Component indices for stream splitting. Fixed constants, never reordered.
STREAM_DATA = 1
STREAM_WEIGHTS = 2
STREAM_OUTER = 3
STREAM_TASK_COEF = 4
STREAM_TASK_NOISE = 5
STREAM_TEST_DATA = 6
STREAM_MC_KERNEL = 7
STREAM_PROBE = 8


def fmt_float(x) -> str:
    """17 significant digits, enough to round-trip float64 exactly."""
    return format(float(x), ".17g")


def block_ranges(total: int, block: int):
    """Deterministic fixed partition [0,block), [block,2*block), ..."""
    if block <= 0:
        raise ValueError("block size must be positive")
    out = []
    start = 0
    while start < total:
        stop = min(start + block, total)
        out.append((start, stop))
        start = stop
    return out
