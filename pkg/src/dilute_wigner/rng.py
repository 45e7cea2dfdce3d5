"""Counter-based random sub-streams.

Every stream is keyed by ``(master_seed, tag, *counters)`` through
:class:`numpy.random.SeedSequence` and fed to a Philox generator, so the
numbers drawn for a given key never depend on how many other streams were
consumed before it, or on which worker process consumed them.
"""

from __future__ import annotations

import struct

import numpy as np

UINT64_MASK = (1 << 64) - 1

# stream tags
MASK = 1
VALUES = 2
TRIAL = 3
LANCZOS = 4


def _key_word(value: int | float) -> int:
    if isinstance(value, float):
        (bits,) = struct.unpack("<Q", struct.pack("<d", value))
        return bits
    return int(value) & UINT64_MASK


def substream(master_seed: int, tag: int, *counters: int | float) -> np.random.Generator:
    ss = np.random.SeedSequence(
        entropy=int(master_seed) & UINT64_MASK,
        spawn_key=(int(tag), *(_key_word(c) for c in counters)),
    )
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(master_seed: int, tag: int, *counters: int | float) -> int:
    """Hash ``(master_seed, tag, counters)`` into a fresh 64-bit seed."""
    ss = np.random.SeedSequence(
        entropy=int(master_seed) & UINT64_MASK,
        spawn_key=(int(tag), *(_key_word(c) for c in counters)),
    )
    return int(ss.generate_state(1, dtype=np.uint64)[0])
