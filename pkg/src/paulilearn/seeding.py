"""Deterministic derivation of independent random streams.

All randomness in the package flows from an integer master seed through named
sub-streams.  A stream is identified by the master seed plus a tuple of string
or integer labels; the identity is hashed into a Philox key, so streams are
independent of execution order and of how many other streams exist.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_key(master_seed: int, *labels) -> np.ndarray:
    """128-bit Philox key derived from the master seed and a label path."""
    path = "/".join([str(int(master_seed))] + [str(lab) for lab in labels])
    digest = hashlib.sha256(path.encode("utf-8")).digest()
    return np.frombuffer(digest[:16], dtype=np.uint64)


def stream(master_seed: int, *labels) -> np.random.Generator:
    """Independent Generator for (master_seed, *labels)."""
    return np.random.Generator(np.random.Philox(key=derive_key(master_seed, *labels)))
