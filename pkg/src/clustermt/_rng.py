"""Seed derivation. Every stochastic step draws from its own Philox stream."""

import zlib

import numpy as np


def _key(part):
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    return int(part)


def make_rng(seed, *keys):
    """Return an independent generator for ``seed`` and a path of keys.

    Keys may be ints or strings; the same (seed, keys) always gives the same
    stream, and distinct key paths give statistically independent streams.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(_key(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed, *keys):
    """A 64-bit child seed, for handing to code that takes a plain integer."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(_key(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
