"""Stable 64-bit seed derivation (independent of PYTHONHASHSEED)."""

from __future__ import annotations

import hashlib


def derive_seed(*parts: object) -> int:
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        h.update(repr(p).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "big")


def job_seed(master: int, prop: str, family: str, size: int) -> int:
    return derive_seed("job", master, prop, family, size)
