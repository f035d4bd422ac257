"""Seeded random streams.

Every random draw in the package comes from a PCG64 generator whose seed
sequence is derived from a user seed plus a fixed integer key path.  PCG64
and SeedSequence are fully specified by numpy, so a (seed, key path) pair
names the same stream on every platform.
"""

from __future__ import annotations

import zlib

import numpy as np
import torch


def stream_key(name: str) -> int:
    """Stable 32-bit key for a named stream."""
    return zlib.crc32(name.encode("utf-8"))


def make_rng(seed: int, *keys: int | str) -> np.random.Generator:
    """Return the PCG64 stream for ``seed`` at the given key path.

    String keys are hashed with CRC-32, integer keys are used directly, so
    ``make_rng(s, i)`` equals the ``i``-th child of ``SeedSequence(s).spawn``.
    """
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    path = tuple(stream_key(k) if isinstance(k, str) else int(k) for k in keys)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=path)))


def torch_generator(seed: int, *keys: int | str) -> torch.Generator:
    """A CPU torch generator seeded from the numpy stream at ``keys``."""
    g = torch.Generator()
    g.manual_seed(int(make_rng(seed, *keys).integers(0, 2**63 - 1)))
    return g
