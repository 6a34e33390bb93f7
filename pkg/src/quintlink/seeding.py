"""Deterministic seed derivation shared by every randomised stage.

A run has one master seed.  Every stage (and every per-item draw inside a
stage) derives its own child seed with ``derive_seed``, so results do not
depend on execution order or parallelism.
"""

from __future__ import annotations

import hashlib

import numpy as np

_DOMAIN = b"quintlink.seed.v1"


def derive_seed(master: int, *parts: object) -> int:
    """Derive a child seed from a master seed and a key path.

    The key path is hashed, not concatenated, so ``("ab", "c")`` and
    ``("a", "bc")`` yield different seeds.
    """
    h = hashlib.blake2b(_DOMAIN, digest_size=8)
    h.update(str(int(master)).encode("utf-8"))
    for part in parts:
        token = part.name if hasattr(part, "name") else str(part)
        h.update(b"\x1f")
        h.update(token.encode("utf-8"))
    return int.from_bytes(h.digest(), "little")


def rng_for(master: int, *parts: object) -> np.random.Generator:
    """Seeded generator for the stage identified by ``parts``."""
    return np.random.default_rng(derive_seed(master, *parts))
