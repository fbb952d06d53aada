"""Deterministic RNG substreams derived from one experiment seed.

All randomness in the package flows from a single integer seed through
named substreams, so every stage (scene jitter, receiver noise, weight
init, shuffle order) can be reproduced in isolation.  Substream keys are
hashed with SHA-256, which is stable across platforms and Python runs,
unlike the builtin hash().
"""

import hashlib

import numpy as np


def substream(seed, *key):
    """Return a Generator for the (seed, *key) substream.

    Args:
        seed: master experiment seed (int).
        key: any mix of strings/ints/floats naming the substream, e.g.
            ("noise", placement_index, eta_index).

    Returns:
        numpy.random.Generator seeded deterministically from the key.
    """
    h = hashlib.sha256()
    h.update(str(int(seed)).encode())
    for part in key:
        h.update(b"/")
        h.update(repr(part).encode())
    words = np.frombuffer(h.digest()[:16], dtype=np.uint32)
    return np.random.default_rng(np.random.SeedSequence(entropy=words.tolist()))


def substream_seed(seed, *key):
    """Collapse a substream key to a single int seed (for APIs taking ints)."""
    h = hashlib.sha256()
    h.update(str(int(seed)).encode())
    for part in key:
        h.update(b"/")
        h.update(repr(part).encode())
    return int.from_bytes(h.digest()[:8], "little")
