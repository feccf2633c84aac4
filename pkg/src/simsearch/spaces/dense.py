"""Dense-vector spaces: the Lp family, cosine distance, angular distance.

Payloads are fixed-length numpy vectors narrowed to the declared storage
type.  All kernels are written row-wise over a 2-D block; the single-pair
distance is the one-row case, which keeps exact and batch scans bitwise
consistent.
"""
from __future__ import annotations

import math

import numpy as np

from ..data import parse_dense_line
from .base import Space, SpaceError, check_same_dim, register_space


def _binary_fraction_digits(p: float, max_digits: int = 5) -> int | None:
    """Number of binary fraction digits of p, or None if more than max."""
    frac = p - math.floor(p)
    for digits in range(max_digits + 1):
        scaled = frac * (1 << digits)
        if scaled == math.floor(scaled):
            return digits
    return None


def _pow_by_square_rooting(a: np.ndarray, p: float, digits: int) -> np.ndarray:
    """a**p via repeated square roots, for p with few binary fraction digits."""
    int_part = int(math.floor(p))
    frac_bits = int(round((p - int_part) * (1 << digits)))
    out = a ** int_part if int_part else np.ones_like(a)
    root = a
    for bit in range(digits, 0, -1):
        root = np.sqrt(root)
        if frac_bits & (1 << (bit - 1)):
            out = out * root
    return out


class DenseVectorSpace(Space):
    """Shared parsing/serialization for dense-vector payloads."""

    def __init__(self):
        self._dim: int | None = None

    def parse_line(self, line: str):
        label, values = parse_dense_line(line)
        vec = np.asarray(values, dtype=self.store_dtype)
        if self._dim is None:
            self._dim = vec.shape[0]
        elif vec.shape[0] != self._dim:
            raise SpaceError(
                f"row of dimension {vec.shape[0]} in a space of dimension {self._dim}")
        vec.flags.writeable = False
        return label, vec

    def format_payload(self, payload) -> str:
        return " ".join(repr(float(v)) for v in payload)

    def make_payload(self, values) -> np.ndarray:
        vec = np.asarray(values, dtype=self.store_dtype)
        vec.flags.writeable = False
        return vec

    def stack(self, payloads):
        block = np.stack([np.asarray(p) for p in payloads]).astype(np.float64)
        block.flags.writeable = False
        return block

    def elem_count(self, payload) -> int:
        return int(np.asarray(payload).shape[0])

    def dense_coords(self, payload) -> np.ndarray:
        return np.asarray(payload, dtype=np.float64)

    def _as_block(self, x) -> np.ndarray:
        return np.asarray(x, dtype=np.float64).reshape(1, -1)

    def _distance(self, x, y) -> float:
        block = self._as_block(x)
        check_same_dim(block, np.asarray(y))
        return float(self._batch_distance(block, y)[0])


class LpSpace(DenseVectorSpace):
    """Minkowski distance (sum |x_i-y_i|^p)^(1/p); p=inf is Chebyshev."""

    def __init__(self, p: float):
        super().__init__()
        if not (p > 0):
            raise SpaceError(f"lp requires p > 0, got {p}")
        self.p = p
        self._sqrt_digits = None if math.isinf(p) else _binary_fraction_digits(p)

    def _batch_distance(self, block, y) -> np.ndarray:
        diff = np.abs(block - np.asarray(y, dtype=np.float64))
        p = self.p
        if math.isinf(p):
            return diff.max(axis=1)
        if p == 1.0:
            return diff.sum(axis=1)
        if p == 2.0:
            return np.sqrt((diff * diff).sum(axis=1))
        if self._sqrt_digits is not None:
            powed = _pow_by_square_rooting(diff, p, self._sqrt_digits)
        else:
            powed = diff ** p
        return powed.sum(axis=1) ** (1.0 / p)


class CosineSpace(DenseVectorSpace):
    """Cosine distance 1 - <x,y>/(|x||y|), in [0, 2]."""

    angular = False

    def _ratio(self, block: np.ndarray, y) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        check_same_dim(block, y)
        norms = np.sqrt((block * block).sum(axis=1))
        ynorm = math.sqrt(float((y * y).sum()))
        if ynorm == 0.0 or np.any(norms == 0.0):
            raise SpaceError("cosine/angular distance undefined for zero vectors")
        # elementwise product instead of @: keeps per-row reduction order
        # identical between one-row and many-row blocks
        return np.clip((block * y).sum(axis=1) / (norms * ynorm), -1.0, 1.0)

    def _batch_distance(self, block, y) -> np.ndarray:
        cosine = 1.0 - self._ratio(block, y)
        if self.angular:
            return np.arccos(1.0 - cosine)
        return cosine


class AngularSpace(CosineSpace):
    """Angular distance arccos(1 - cosine distance): a true metric."""

    angular = True


def _register_all():
    register_space("l1", lambda params, dt: LpSpace(1.0))
    register_space("l2", lambda params, dt: LpSpace(2.0))
    register_space("linf", lambda params, dt: LpSpace(math.inf))
    register_space("lp", lambda params, dt: LpSpace(params.get("p", "real", required=True)))
    register_space("cosinesimil", lambda params, dt: CosineSpace())
    register_space("angulardist", lambda params, dt: AngularSpace())


_register_all()
