"""Reproducible random streams.

Every stream is numpy's Philox4x64 counter-based generator keyed by a 64-bit
seed; uniforms are ``Generator.random`` doubles, (next_uint64 >> 11) * 2**-53,
which numpy fixes across platforms.  Normals are made here with Box-Muller so
the transform does not depend on numpy's ziggurat tables.  Per-replication
seeds come from SplitMix64, so replication ``t`` never depends on how many
replications ran before it.
"""

from __future__ import annotations

import numpy as np

__all__ = ["splitmix64", "derive_seed", "stream", "uniforms", "box_muller"]

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    z = (x + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(base_seed: int, index: int) -> int:
    """Seed for sub-stream ``index`` of ``base_seed``; a pure function of both."""
    return splitmix64((base_seed ^ splitmix64(index & _MASK)) & _MASK)


def stream(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed & _MASK))


def uniforms(gen: np.random.Generator, size) -> np.ndarray:
    """Doubles on [0, 1)."""
    return gen.random(size)


def box_muller(gen: np.random.Generator, size: int) -> np.ndarray:
    """``size`` standard normals from ceil(size / 2) uniform pairs (u1, u2):
    sqrt(-2 log(1 - u1)) * (cos(2 pi u2), sin(2 pi u2)), interleaved."""
    pairs = (size + 1) // 2
    u = uniforms(gen, (pairs, 2))
    radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
    angle = 2.0 * np.pi * u[:, 1]
    z = np.column_stack((radius * np.cos(angle), radius * np.sin(angle))).reshape(-1)
    return z[:size]
