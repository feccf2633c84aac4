"""Sparse-vector spaces: Lp family, cosine, and angular over (id, value) pairs.

A payload keeps two aligned arrays (strictly increasing int ids, float
values).  Scalar products come in two flavors: a merge-based reference and a
set-intersection fast path; the fast path must agree with the reference
exactly and is checked by tests.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..data import parse_sparse_line
from .base import Space, SpaceError, register_space


@dataclass(frozen=True)
class SparseVector:
    ids: np.ndarray     # int64, strictly increasing
    values: np.ndarray  # float, same length

    def __len__(self) -> int:
        return len(self.ids)


def make_sparse(pairs, dtype=np.float32) -> SparseVector:
    ids = np.asarray([p[0] for p in pairs], dtype=np.int64)
    values = np.asarray([p[1] for p in pairs], dtype=dtype)
    if len(ids) > 1 and not np.all(np.diff(ids) > 0):
        order = np.argsort(ids, kind="stable")
        ids, values = ids[order], values[order]
        if not np.all(np.diff(ids) > 0):
            raise SpaceError("sparse vector has repeated element ids")
    ids.flags.writeable = False
    values.flags.writeable = False
    return SparseVector(ids, values)


def sparse_dot_merge(x: SparseVector, y: SparseVector) -> float:
    """Reference scalar product: textbook two-pointer merge over sorted ids."""
    i = j = 0
    total = 0.0
    xi, xv, yi, yv = x.ids, x.values, y.ids, y.values
    nx, ny = len(xi), len(yi)
    while i < nx and j < ny:
        a, b = xi[i], yi[j]
        if a == b:
            total += float(xv[i]) * float(yv[j])
            i += 1
            j += 1
        elif a < b:
            i += 1
        else:
            j += 1
    return total


def sparse_dot_fast(x: SparseVector, y: SparseVector) -> float:
    """Accelerated scalar product via vectorized id intersection.

    Accumulates shared-id products in ascending id order, matching the merge
    reference exactly.
    """
    _, ix, iy = np.intersect1d(x.ids, y.ids, assume_unique=True,
                               return_indices=True)
    if len(ix) == 0:
        return 0.0
    prods = x.values[ix].astype(np.float64) * y.values[iy].astype(np.float64)
    total = 0.0
    for p in prods:          # sequential sum keeps parity with the merge path
        total += float(p)
    return total


def _union_values(x: SparseVector, y: SparseVector):
    """Aligned float64 value arrays over the union of element ids."""
    union = np.union1d(x.ids, y.ids)
    xv = np.zeros(len(union))
    yv = np.zeros(len(union))
    xv[np.searchsorted(union, x.ids)] = x.values.astype(np.float64)
    yv[np.searchsorted(union, y.ids)] = y.values.astype(np.float64)
    return xv, yv


class SparseVectorSpace(Space):
    def parse_line(self, line: str):
        label, pairs = parse_sparse_line(line)
        return label, make_sparse(pairs, dtype=self.store_dtype)

    def format_payload(self, payload: SparseVector) -> str:
        return " ".join(
            f"{int(i)} {repr(float(v))}" for i, v in zip(payload.ids, payload.values))

    def make_payload(self, pairs) -> SparseVector:
        return make_sparse(pairs, dtype=self.store_dtype)


class SparseLpSpace(SparseVectorSpace):
    def __init__(self, p: float):
        if not (p > 0):
            raise SpaceError(f"lp requires p > 0, got {p}")
        self.p = p

    def _distance(self, x: SparseVector, y: SparseVector) -> float:
        xv, yv = _union_values(x, y)
        diff = np.abs(xv - yv)
        if math.isinf(self.p):
            return float(diff.max()) if len(diff) else 0.0
        if self.p == 1.0:
            return float(diff.sum())
        if self.p == 2.0:
            return float(math.sqrt((diff * diff).sum()))
        return float((diff ** self.p).sum() ** (1.0 / self.p))


class SparseCosineSpace(SparseVectorSpace):
    """Cosine distance over sparse vectors; ``fast=True`` switches the scalar
    product to the intersection-based path."""

    angular = False

    def __init__(self, fast: bool = False):
        self._dot = sparse_dot_fast if fast else sparse_dot_merge

    def _distance(self, x: SparseVector, y: SparseVector) -> float:
        xnorm = math.sqrt(self._dot(x, x))
        ynorm = math.sqrt(self._dot(y, y))
        if xnorm == 0.0 or ynorm == 0.0:
            raise SpaceError("cosine/angular distance undefined for zero vectors")
        ratio = min(1.0, max(-1.0, self._dot(x, y) / (xnorm * ynorm)))
        cosine = 1.0 - ratio
        if self.angular:
            return math.acos(1.0 - cosine)
        return cosine


class SparseAngularSpace(SparseCosineSpace):
    angular = True


def _register_all():
    register_space("l1_sparse", lambda params, dt: SparseLpSpace(1.0))
    register_space("l2_sparse", lambda params, dt: SparseLpSpace(2.0))
    register_space("linf_sparse", lambda params, dt: SparseLpSpace(math.inf))
    register_space("lp_sparse",
                   lambda params, dt: SparseLpSpace(params.get("p", "real", required=True)))
    register_space("cosinesimil_sparse", lambda params, dt: SparseCosineSpace())
    register_space("cosinesimil_sparse_fast",
                   lambda params, dt: SparseCosineSpace(fast=True))
    register_space("angulardist_sparse", lambda params, dt: SparseAngularSpace())
    register_space("angulardist_sparse_fast",
                   lambda params, dt: SparseAngularSpace(fast=True))


_register_all()
