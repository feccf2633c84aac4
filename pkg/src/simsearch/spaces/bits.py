"""Hamming distance over packed bit vectors.

Data rows are dense 0/1 integers; payloads keep the packed byte form plus
the original bit length so vectors of any length compare correctly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import parse_dense_line
from .base import Space, SpaceError, register_space


@dataclass(frozen=True)
class BitVector:
    packed: np.ndarray  # uint8, big-endian bit order per np.packbits
    nbits: int

    def __len__(self) -> int:
        return self.nbits


def make_bitvector(bits) -> BitVector:
    arr = np.asarray(bits)
    if not np.all((arr == 0) | (arr == 1)):
        raise SpaceError("bit vectors accept only 0/1 elements")
    packed = np.packbits(arr.astype(np.uint8))
    packed.flags.writeable = False
    return BitVector(packed, int(arr.shape[0]))


def unpack_bits(bv: BitVector) -> np.ndarray:
    return np.unpackbits(bv.packed)[: bv.nbits]


def bit_hamming(x: BitVector, y: BitVector) -> int:
    """Popcount of xor; equals the naive per-bit loop."""
    if x.nbits != y.nbits:
        raise SpaceError(f"bit length mismatch: {x.nbits} vs {y.nbits}")
    return int(np.bitwise_count(np.bitwise_xor(x.packed, y.packed)).sum())


class BitHammingSpace(Space):
    dist_type = "int"

    def parse_line(self, line: str):
        label, values = parse_dense_line(line)
        return label, make_bitvector([int(v) for v in values])

    def format_payload(self, payload: BitVector) -> str:
        return " ".join(str(int(b)) for b in unpack_bits(payload))

    def make_payload(self, bits) -> BitVector:
        return make_bitvector(bits)

    def _distance(self, x: BitVector, y: BitVector) -> int:
        return bit_hamming(x, y)

    def stack(self, payloads):
        nbits = {p.nbits for p in payloads}
        if len(nbits) > 1:
            raise SpaceError("cannot stack bit vectors of differing lengths")
        block = np.stack([p.packed for p in payloads])
        block.flags.writeable = False
        return block, nbits.pop()

    def _batch_distance(self, block, y: BitVector) -> np.ndarray:
        packed, nbits = block
        if nbits != y.nbits:
            raise SpaceError(f"bit length mismatch: {nbits} vs {y.nbits}")
        return np.bitwise_count(np.bitwise_xor(packed, y.packed)).sum(axis=1)

    def take(self, block, ids):
        packed, nbits = block
        return packed[np.asarray(ids, dtype=np.int64)], nbits


register_space("bit_hamming", lambda params, dt: BitHammingSpace(),
               dist_types=("int",))
