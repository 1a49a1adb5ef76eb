"""Deterministic sub-seed derivation.

All randomness in an experiment flows from one master seed through labeled
hashes, so adding a component never perturbs the streams of the others.
"""

from __future__ import annotations

import hashlib


def derive_seed(master: int, *parts: str | int) -> int:
    """Stable 63-bit sub-seed for (master, component label, indices)."""
    text = "|".join(str(p) for p in (master, *parts))
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % 2**63
