"""Directed graphs stored as row-major adjacency bitstrings.

Bit ``i * n + j`` is set iff the edge ``i -> j`` exists. Internally the bits
live in a Python int (bit k of ``mask`` is position k of the bitstring), which
keeps hashing, comparison and flips cheap.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Iterator

MAX_NODES = 64


class GraphError(ValueError):
    """Invalid graph construction, edit, or parse."""


@dataclass(frozen=True, slots=True)
class DirectedGraph:
    n: int
    mask: int = 0

    def __post_init__(self) -> None:
        if not 1 <= self.n <= MAX_NODES:
            raise GraphError(f"node count {self.n} outside [1, {MAX_NODES}]")
        if self.mask < 0 or self.mask >> (self.n * self.n):
            raise GraphError("mask has bits beyond n*n")

    @classmethod
    def empty(cls, n: int) -> DirectedGraph:
        return cls(n, 0)

    @classmethod
    def full(cls, n: int) -> DirectedGraph:
        return cls(n, (1 << (n * n)) - 1)

    @classmethod
    def from_bits(cls, bits: Iterable[bool | int], n: int | None = None) -> DirectedGraph:
        bits = list(bits)
        if n is None:
            n = round(len(bits) ** 0.5)
        if len(bits) != n * n:
            raise GraphError(f"expected {n * n} bits, got {len(bits)}")
        mask = 0
        for k, b in enumerate(bits):
            if b:
                mask |= 1 << k
        return cls(n, mask)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> DirectedGraph:
        mask = 0
        for i, j in edges:
            if not (0 <= i < n and 0 <= j < n):
                raise GraphError(f"edge ({i}, {j}) out of range for n={n}")
            mask |= 1 << (i * n + j)
        return cls(n, mask)

    @classmethod
    def random(cls, n: int, rng: random.Random) -> DirectedGraph:
        return cls(n, rng.getrandbits(n * n))

    @property
    def num_bits(self) -> int:
        return self.n * self.n

    @property
    def bits(self) -> tuple[bool, ...]:
        return tuple(bool(self.mask >> k & 1) for k in range(self.n * self.n))

    def has_edge(self, i: int, j: int) -> bool:
        return bool(self.mask >> (i * self.n + j) & 1)

    def edges(self) -> Iterator[tuple[int, int]]:
        n = self.n
        for k in range(n * n):
            if self.mask >> k & 1:
                yield divmod(k, n)

    def edge_count(self) -> int:
        return self.mask.bit_count()

    def to_bitstring(self) -> str:
        return encode_bitstring(self)

    def __str__(self) -> str:
        return f"{self.n}:{encode_bitstring(self)}"


def edge_index(n: int, i: int, j: int) -> int:
    return i * n + j


def edge_pair(n: int, index: int) -> tuple[int, int]:
    if not 0 <= index < n * n:
        raise GraphError(f"edge index {index} outside [0, {n * n})")
    return divmod(index, n)


def flip_bits(g: DirectedGraph, positions: Iterable[int]) -> DirectedGraph:
    """Return a copy of ``g`` with every listed bit position toggled."""
    size = g.n * g.n
    seen: set[int] = set()
    flip = 0
    for p in positions:
        if not 0 <= p < size:
            raise GraphError(f"flip position {p} outside [0, {size})")
        if p in seen:
            raise GraphError(f"flip position {p} repeated")
        seen.add(p)
        flip |= 1 << p
    return DirectedGraph(g.n, g.mask ^ flip)


def hamming(g1: DirectedGraph, g2: DirectedGraph) -> int:
    if g1.n != g2.n:
        raise GraphError(f"size mismatch: {g1.n} vs {g2.n}")
    return (g1.mask ^ g2.mask).bit_count()


def mask_to_bitstring(mask: int, n: int) -> str:
    size = n * n
    if size == 0:
        return ""
    return format(mask, f"0{size}b")[::-1]


def bitstring_to_mask(text: str) -> int:
    return int(text[::-1], 2) if text else 0


def encode_bitstring(g: DirectedGraph) -> str:
    return mask_to_bitstring(g.mask, g.n)


def decode_bitstring(n: int, text: str) -> DirectedGraph:
    if not 1 <= n <= MAX_NODES:
        raise GraphError(f"node count {n} outside [1, {MAX_NODES}]")
    if len(text) != n * n:
        raise GraphError(f"bitstring length {len(text)} != {n * n} for n={n}")
    bad = set(text) - {"0", "1"}
    if bad:
        raise GraphError(f"bitstring contains invalid characters {sorted(bad)!r}")
    return DirectedGraph(n, bitstring_to_mask(text))


def parse_graph_spec(spec: str) -> DirectedGraph:
    """Parse ``"<n>:<bitstring>"`` as used on the command line."""
    head, sep, body = spec.partition(":")
    if not sep:
        raise GraphError(f"graph spec {spec!r} is not of the form <n>:<bits>")
    try:
        n = int(head)
    except ValueError:
        raise GraphError(f"bad node count {head!r}") from None
    return decode_bitstring(n, body.strip())
