"""Generalized hyperplane tree: binary splits by two random pivots."""
from __future__ import annotations

import numpy as np

from ..core import Index, Query, register_method, scan_records
from ..data import ObjectRecord
from ..params import ParamMap
from ..spaces.base import Space
from .vptree import DEFAULT_BUCKET_SIZE, MAX_LEAVES_UNBOUNDED


class _Node:
    __slots__ = ("p1", "p2", "pivot_block", "left", "right", "bucket", "block")

    def __init__(self):
        self.p1: ObjectRecord | None = None
        self.p2: ObjectRecord | None = None
        self.pivot_block = None
        self.left = None
        self.right = None
        self.bucket: list[ObjectRecord] | None = None
        self.block = None


def _leaf(space: Space, records, chunk_bucket: bool) -> _Node:
    node = _Node()
    node.bucket = records
    if chunk_bucket and space.supports_batch():
        node.block = space.stack([r.payload for r in records])
    return node


def _build(space: Space, records: list[ObjectRecord], bucket_size: int,
           chunk_bucket: bool, rng: np.random.Generator) -> _Node | None:
    if not records:
        return None
    if len(records) <= bucket_size:
        return _leaf(space, records, chunk_bucket)
    # draw two distinct pivots, redrawing identical (zero-distance) pairs
    for _ in range(32):
        i, j = (int(v) for v in rng.choice(len(records), size=2, replace=False))
        p1, p2 = records[i], records[j]
        if space.index_time_distance(p1.payload, p2.payload) > 0:
            break
    else:
        return _leaf(space, records, chunk_bucket)
    node = _Node()
    node.p1, node.p2 = p1, p2
    if space.supports_batch():
        node.pivot_block = space.stack([p1.payload, p2.payload])
    rest = [r for k, r in enumerate(records) if k != i and k != j]
    if space.supports_batch() and rest:
        block = space.stack([r.payload for r in rest])
        d1 = space._batch_distance(block, p1.payload)
        d2 = space._batch_distance(block, p2.payload)
    else:
        d1 = np.asarray([space.index_time_distance(p1.payload, r.payload) for r in rest])
        d2 = np.asarray([space.index_time_distance(p2.payload, r.payload) for r in rest])
    left = [r for r, a, b in zip(rest, d1, d2) if a <= b]
    right = [r for r, a, b in zip(rest, d1, d2) if a > b]
    if not left or not right:
        return _leaf(space, records, chunk_bucket)
    node.left = _build(space, left, bucket_size, chunk_bucket, rng)
    node.right = _build(space, right, bucket_size, chunk_bucket, rng)
    return node


def _search(node: _Node | None, query: Query, budget: list) -> None:
    if node is None or budget[0] <= 0:
        return
    if node.bucket is not None:
        budget[0] -= 1
        scan_records(query, node.bucket, node.block)
        return
    if node.pivot_block is not None and query.orientation == "left":
        d1, d2 = (float(v) for v in query.batch_distance_to(node.pivot_block))
    else:
        d1 = query.distance_to(node.p1.payload)
        d2 = query.distance_to(node.p2.payload)
    query.check_and_add(node.p1.id, d1, node.p1.label)
    query.check_and_add(node.p2.id, d2, node.p2.label)
    near, far = (node.left, node.right) if d1 <= d2 else (node.right, node.left)
    _search(near, query, budget)
    if budget[0] <= 0:
        return
    # hyperplane bound: the far half-space is at least |d1-d2|/2 away
    if query.radius() > abs(d1 - d2) / 2.0:
        _search(far, query, budget)


class GhTreeIndex(Index):
    """ghtree: exact for metric spaces, approximate under a leaf-visit cap."""

    def _create(self, params: ParamMap) -> None:
        self.bucket_size = params.get("bucketSize", "int", default=DEFAULT_BUCKET_SIZE)
        self.chunk_bucket = params.get("chunkBucket", "bool", default=True)
        self.seed = params.get("seed", "int", default=0)
        if self.bucket_size < 1:
            raise ValueError("bucketSize must be >= 1")
        rng = np.random.default_rng(self.seed)
        self.root = _build(self.space, list(self.data.records),
                           self.bucket_size, self.chunk_bucket, rng)

    def reset_query_time_params(self) -> None:
        self.max_leaves = MAX_LEAVES_UNBOUNDED

    def _apply_query_params(self, params: ParamMap) -> None:
        self.max_leaves = params.get("maxLeavesToVisit", "int",
                                     default=MAX_LEAVES_UNBOUNDED)

    def _run(self, query: Query) -> None:
        _search(self.root, query, [self.max_leaves])

    _search_knn = _run
    _search_range = _run

    def size_bytes(self) -> int:
        return 96 * max(1, len(self.data) // max(1, self.bucket_size)) + 8 * len(self.data)

    def str_desc(self) -> str:
        return f"ghtree: bucketSize={self.bucket_size}"


register_method("ghtree", GhTreeIndex)
