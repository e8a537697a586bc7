"""Counter-based uniform random streams built on the SplitMix64 finalizer.

Every draw is a pure function of (seed, counter), so any slice of a stream
can be generated independently, in any order and in any chunking, with
bitwise identical results on every platform.  Noisy circuit propagation and
event sampling both lean on this: their outputs must not depend on the
evaluation schedule.
"""

from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK = 0xFFFFFFFFFFFFFFFF


def mix64(z: np.ndarray) -> np.ndarray:
    """Stafford variant-13 finalizer: full-avalanche 64-bit mixing."""
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def substream(seed: int, label: int) -> int:
    """Derive an independent child seed for the labeled stream."""
    key = np.array([seed & _MASK], dtype=np.uint64)
    lab = np.array([label & _MASK], dtype=np.uint64)
    return int(mix64(key + (lab + np.uint64(1)) * GOLDEN)[0])


def counter_uniform(seed: int, counter: np.ndarray) -> np.ndarray:
    """Uniforms in (0, 1], one per counter value, stable across platforms."""
    base = np.uint64(seed & _MASK)
    raw = mix64(base + (counter.astype(np.uint64) + np.uint64(1)) * GOLDEN)
    # 53-bit mantissa; shift into (0, 1] so log() stays finite downstream
    return ((raw >> np.uint64(11)) + np.uint64(1)) * (2.0**-53)


def counter_normals(seed: int, indices: np.ndarray) -> np.ndarray:
    """Standard normal draw per index via Box-Muller on counter pairs."""
    idx = indices.astype(np.uint64)
    u1 = counter_uniform(seed, idx * np.uint64(2))
    u2 = counter_uniform(seed, idx * np.uint64(2) + np.uint64(1))
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
