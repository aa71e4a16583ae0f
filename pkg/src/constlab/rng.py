"""Deterministic random streams.

All randomness in the package flows from one 64-bit seed. Consumers never
construct Generators directly; they ask for a named substream. Substream
identity is (seed, label path), so adding parallelism or reordering callers
cannot change the numbers a given consumer sees.
"""

from __future__ import annotations

import zlib

import numpy as np


def _path_key(path: tuple) -> tuple[int, ...]:
    out = []
    for part in path:
        if isinstance(part, (int, np.integer)):
            out.append(int(part) & 0xFFFFFFFF)
        else:
            out.append(zlib.crc32(str(part).encode("utf-8")))
    return tuple(out)


def substream(seed: int, *path) -> np.random.Generator:
    """Generator for the substream named by `path` under `seed`."""
    ss = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF,
                                spawn_key=_path_key(path))
    return np.random.Generator(np.random.PCG64(ss))


def block_streams(seed: int, label, n_blocks: int):
    """Independent per-block substreams; block k's stream depends only on
    (seed, label, k), never on n_blocks, so estimates are partition-stable."""
    for k in range(n_blocks):
        yield substream(seed, label, k)
