"""
Reproducible random streams.

Every stream is a numpy Generator over the counter-based Philox bit generator,
seeded by a SeedSequence whose spawn key names the stream. Two streams with
different keys are independent, and a stream depends only on (seed, key).
"""
import zlib

import numpy as np


def make_rng(seed: int | None, *key: int | str) -> np.random.Generator:
    """Philox generator for the stream `key` under the global `seed`"""
    spawn_key = tuple(_key_part(part) for part in key)
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=spawn_key)
    return np.random.Generator(np.random.Philox(sequence))


def derive_seed(seed: int | None, *key: int | str) -> int:
    """64-bit integer seed of the stream `key`, recorded in manifests"""
    spawn_key = tuple(_key_part(part) for part in key)
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=spawn_key)
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def _key_part(part: int | str) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    return int(part)
