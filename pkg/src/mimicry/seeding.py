"""Deterministic seed derivation: every stage's randomness flows from one master seed."""

import hashlib


def derive_seed(master: int, label: str) -> int:
    """Stable 64-bit child seed for a named stage of a run."""
    digest = hashlib.sha256(f"{master}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")
