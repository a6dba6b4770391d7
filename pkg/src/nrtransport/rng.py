"""Counter-based random substreams.

Every random draw in the toolkit comes from a Philox counter-based generator
keyed by (master seed, path tags). A given (seed, path) pair always yields the
same stream, independent of call order or worker scheduling, so parallel
replications are reproducible by construction.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _encode(item) -> bytes:
    if isinstance(item, (bytes, bytearray)):
        return b"b" + bytes(item)
    if isinstance(item, str):
        return b"s" + item.encode("utf-8")
    if isinstance(item, (int, np.integer)):
        return b"i" + int(item).to_bytes(16, "little", signed=True)
    raise TypeError(f"unsupported stream path element: {item!r}")


def substream(seed: int, *path) -> np.random.Generator:
    """Return an independent generator for (seed, *path).

    Path elements may be ints or strings, e.g.
    ``substream(seed, "hst", "phase", trp_index)``.
    """
    h = hashlib.blake2b(digest_size=16)
    h.update(_encode(int(seed)))
    for item in path:
        h.update(_encode(item))
    key = int.from_bytes(h.digest(), "little")
    return np.random.Generator(np.random.Philox(key=key))
