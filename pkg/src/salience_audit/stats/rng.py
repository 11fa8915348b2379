"""Seeded random streams.

All randomness goes through numpy's Philox4x64 counter-based generator keyed
by a ``SeedSequence``; streams are reproducible across platforms and numpy
versions that keep the Philox/SeedSequence algorithms stable. Sub-streams are
derived from string keys through a fixed hash, so adding a key never shifts
another key's stream.
"""

import hashlib

import numpy as np


def _key_words(keys):
    words = []
    for k in keys:
        digest = hashlib.blake2b(str(k).encode("utf-8"), digest_size=8).digest()
        words.append(int.from_bytes(digest, "little"))
    return tuple(words)


def make_rng(seed, *keys) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        if keys:
            raise TypeError("keys cannot be applied to an existing Generator")
        return seed
    ss = np.random.SeedSequence(int(seed), spawn_key=_key_words(keys))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed, *keys) -> int:
    """A 64-bit integer seed for the sub-stream named by ``keys``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=_key_words(keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
