"""Counter-based random streams for reproducible simulation.

The generator is the SplitMix64 finalizer driven in counter mode.  A stream
is identified by a 64-bit key; raw output ``k`` of that stream is

    mix64((key + (k + 1) * GOLDEN) mod 2**64)

where ``GOLDEN = 0x9E3779B97F4A7C15`` and ``mix64`` is

    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9   (mod 2**64)
    z ^= z >> 27;  z *= 0x94D049BB133111EB   (mod 2**64)
    z ^= z >> 31

Substream keys are derived by the same map (`derive_key`), so the lifetime
simulator addresses draw ``k`` of individual ``j`` in replication ``r`` as

    key = derive_key(derive_key(seed, r), j);   u = unit(key, k)

Uniform doubles keep the top 53 bits: ``u = (raw >> 11) / 2**53`` in [0, 1).

This recipe, constants included, is a compatibility contract: simulation
output must be reproducible bit-for-bit by any implementation, in any
language, that follows it.  Reference outputs are frozen in
``tests/test_rng.py`` and listed in the README.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MULT1 = 0xBF58476D1CE4E5B9
_MULT2 = 0x94D049BB133111EB
_UNIT = 2.0**-53


def mix64(value: int) -> int:
    """SplitMix64 finalizer on a 64-bit unsigned integer."""
    z = value & MASK64
    z = ((z ^ (z >> 30)) * _MULT1) & MASK64
    z = ((z ^ (z >> 27)) * _MULT2) & MASK64
    return z ^ (z >> 31)


def derive_key(parent: int, index: int) -> int:
    """Key of substream `index` (>= 0) under `parent`."""
    if index < 0:
        raise ValueError("stream index must be non-negative")
    return mix64((parent + (index + 1) * GOLDEN) & MASK64)


def stream_key(seed: int, *indices: int) -> int:
    """Descend the stream tree: one `derive_key` step per index."""
    key = seed & MASK64
    for index in indices:
        key = derive_key(key, index)
    return key


def raw(key: int, counter: int) -> int:
    """Raw 64-bit output `counter` (>= 0) of the stream `key`."""
    if counter < 0:
        raise ValueError("counter must be non-negative")
    return mix64((key + (counter + 1) * GOLDEN) & MASK64)


def unit(key: int, counter: int) -> float:
    """Uniform double in [0, 1): top 53 bits of the raw output."""
    return (raw(key, counter) >> 11) * _UNIT


def _mix64_array(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MULT1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MULT2)
        return z ^ (z >> np.uint64(31))


def derive_keys(parents: np.ndarray | int, indices: np.ndarray | int) -> np.ndarray:
    """Vectorized `derive_key`; broadcasts parents against indices."""
    parents = np.asarray(parents, dtype=np.uint64)
    indices = np.asarray(indices, dtype=np.uint64)
    with np.errstate(over="ignore"):
        state = parents + (indices + np.uint64(1)) * np.uint64(GOLDEN)
    return _mix64_array(state)


def raw_array(keys: np.ndarray | int, counters: np.ndarray | int) -> np.ndarray:
    """Vectorized `raw`; broadcasts keys against counters."""
    keys = np.asarray(keys, dtype=np.uint64)
    counters = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        state = keys + (counters + np.uint64(1)) * np.uint64(GOLDEN)
    return _mix64_array(state)


def unit_array(keys: np.ndarray | int, counters: np.ndarray | int) -> np.ndarray:
    """Vectorized `unit`: uniform doubles in [0, 1)."""
    return (raw_array(keys, counters) >> np.uint64(11)).astype(np.float64) * _UNIT
