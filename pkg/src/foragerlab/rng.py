"""Deterministic seed derivation for independent random streams.

Every stochastic operation in the workbench pulls its randomness from a
``random.Random`` seeded by a key derived here.  Keys are built from the
run seed plus whatever coordinates identify the draw site (generation,
slot index, purpose tag), so results never depend on call order or on
scheduling.
"""

from __future__ import annotations

import hashlib
import random


def derive_seed(*parts: object) -> int:
    """Hash an arbitrary key tuple into a 64-bit seed."""
    text = ":".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def stream(*parts: object) -> random.Random:
    """A fresh Random whose state depends only on the key tuple."""
    return random.Random(derive_seed(*parts))
