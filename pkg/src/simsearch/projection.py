"""Projections to low-dimensional dense vectors for filter-and-refine search.

Four kinds are supported:

* ``rand``      - dot products with random orthonormal vectors (vector
  spaces only; sparse inputs pass through the hashing trick first);
* ``fastmap``   - corrected coordinates against random pivot pairs;
* ``randrefpt`` - raw distances to random reference points;
* ``perm``      - ordinal pivot positions (permutations).

All distance-based kinds work in any space.  Projections are immutable and
pure: projecting the same object twice yields the same vector.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .data import DataSet, ObjectRecord
from .spaces.base import Space, SpaceError
from .spaces.sparse import SparseVector

PROJECTION_KINDS = ("rand", "fastmap", "randrefpt", "perm")

_FNV64_OFFSET = 0xCBF29CE484222325
_FNV64_PRIME = 0x100000001B3


def _mix64(value: int, seed: int) -> int:
    """Fixed 64-bit avalanche hash (FNV-1a over the value bytes, seeded)."""
    h = _FNV64_OFFSET ^ (seed & 0xFFFFFFFFFFFFFFFF)
    v = value & 0xFFFFFFFFFFFFFFFF
    for _ in range(8):
        h = ((h ^ (v & 0xFF)) * _FNV64_PRIME) & 0xFFFFFFFFFFFFFFFF
        v >>= 8
    h ^= h >> 33
    h = (h * 0xFF51AFD7ED558CCD) & 0xFFFFFFFFFFFFFFFF
    h ^= h >> 33
    return h


def hashing_trick(vec: SparseVector, interm_dim: int, seed: int = 0) -> np.ndarray:
    """Fold a sparse vector into ``interm_dim`` cells by hashing element ids;
    colliding ids accumulate their value sum."""
    if interm_dim < 1:
        raise ValueError(f"intermDim must be >= 1, got {interm_dim}")
    out = np.zeros(interm_dim)
    for elem_id, value in zip(vec.ids, vec.values):
        out[_mix64(int(elem_id), seed) % interm_dim] += float(value)
    return out


def compute_permutation(dists: np.ndarray) -> np.ndarray:
    """Ordinal pivot positions (1-based) from a pivot-distance vector.

    positions[i] is the rank of pivot i among pivots sorted by increasing
    distance; ties rank the smaller pivot index first.
    """
    order = np.argsort(dists, kind="stable")
    positions = np.empty(len(dists), dtype=np.int64)
    positions[order] = np.arange(1, len(dists) + 1)
    return positions


class Projection:
    """Immutable mapping from space objects to ``proj_dim`` dense coordinates."""

    def __init__(self, kind: str, space: Space, proj_dim: int, interm_dim: int,
                 basis, hash_seed: int = 0):
        self.kind = kind
        self.space = space
        self.proj_dim = proj_dim
        self.interm_dim = interm_dim
        self.basis = basis
        self.hash_seed = hash_seed

    def _source_coords(self, payload) -> np.ndarray:
        if isinstance(payload, SparseVector):
            return hashing_trick(payload, self.interm_dim, self.hash_seed)
        coords = self.space.dense_coords(payload)
        if coords is None:
            raise SpaceError(
                "classic random projections need a vector space payload")
        return coords

    def project(self, payload, dist_fn: Callable | None = None) -> np.ndarray:
        """Project one payload; ``dist_fn(pivot_payload) -> float`` overrides
        the distance used for pivot-based kinds (query proxying)."""
        if self.kind == "rand":
            coords = self._source_coords(payload)
            if coords.shape[0] != self.basis.shape[1]:
                raise SpaceError(
                    f"dimension mismatch: object has {coords.shape[0]} coordinates, "
                    f"projection expects {self.basis.shape[1]}")
            return self.basis @ coords

        # pivot occupies the left argument slot, mirroring the query proxy's
        # convention, so data- and query-side projections stay comparable in
        # non-symmetric spaces
        if dist_fn is None:
            dist_fn = lambda piv: self.space.index_time_distance(piv, payload)

        if self.kind == "fastmap":
            out = np.empty(self.proj_dim)
            for i, (a, b, dist_ab) in enumerate(self.basis):
                da = dist_fn(a)
                db = dist_fn(b)
                out[i] = (da * da + dist_ab * dist_ab - db * db) / (2.0 * dist_ab)
            return out

        dists = np.asarray([dist_fn(piv) for piv in self.basis], dtype=np.float64)
        if self.kind == "randrefpt":
            return dists
        return compute_permutation(dists).astype(np.float64)  # perm


def _orthonormalize(rows: np.ndarray, source_dim: int) -> np.ndarray:
    """Gram-Schmidt over the first ``source_dim`` rows; the rest only get
    unit-normalized."""
    out = rows.astype(np.float64).copy()
    n_ortho = min(len(out), source_dim)
    for i in range(len(out)):
        if i < n_ortho:
            for j in range(i):
                out[i] -= np.dot(out[i], out[j]) * out[j]
        norm = np.linalg.norm(out[i])
        if norm == 0.0:
            raise ValueError("degenerate random basis vector")
        out[i] /= norm
    return out


def make_projection(kind: str, space: Space, data: DataSet, proj_dim: int,
                    interm_dim: int = 0, seed: int = 0) -> Projection:
    """Build a projection of the requested kind over a data sample.

    Deterministic for a fixed seed; pivots are drawn without replacement.
    """
    if kind not in PROJECTION_KINDS:
        raise ValueError(f"unknown projection kind {kind!r}; known: {PROJECTION_KINDS}")
    if proj_dim < 1:
        raise ValueError(f"projDim must be >= 1, got {proj_dim}")
    rng = np.random.default_rng(seed)

    if kind == "rand":
        if len(data) == 0:
            raise ValueError("random projections need a sample object to size the basis")
        sample = data[0].payload
        if isinstance(sample, SparseVector):
            if interm_dim < 1:
                raise ValueError("sparse inputs require intermDim >= 1")
            source_dim = interm_dim
        else:
            source_dim = space.elem_count(sample)
            if source_dim == 0:
                raise SpaceError("classic random projections need a vector space")
            interm_dim = 0
        basis = _orthonormalize(rng.standard_normal((proj_dim, source_dim)),
                                source_dim)
        basis.flags.writeable = False
        return Projection(kind, space, proj_dim, interm_dim, basis,
                          hash_seed=seed)

    if len(data) == 0:
        raise ValueError("pivot-based projections need a non-empty data sample")

    if kind == "fastmap":
        pairs = []
        attempts = 0
        while len(pairs) < proj_dim:
            if attempts > 100 * proj_dim:
                raise ValueError("could not draw pivot pairs with nonzero distance")
            attempts += 1
            i, j = rng.choice(len(data), size=2, replace=False)
            a, b = data[int(i)].payload, data[int(j)].payload
            dist_ab = space.index_time_distance(a, b)
            if dist_ab > 0:
                pairs.append((a, b, float(dist_ab)))
        return Projection(kind, space, proj_dim, interm_dim, pairs)

    # randrefpt and perm share pivot sampling without replacement
    if proj_dim > len(data):
        raise ValueError(
            f"cannot draw {proj_dim} distinct pivots from {len(data)} objects")
    picked = rng.choice(len(data), size=proj_dim, replace=False)
    pivots = [data[int(i)].payload for i in picked]
    return Projection(kind, space, proj_dim, interm_dim, pivots)


def project_query(proj: Projection, query) -> np.ndarray:
    """Project the query object of a Query, counting pivot distances."""
    return proj.project(query.query_obj.payload, dist_fn=query.distance_to)
