"""List of clusters: flat sequential clustering for metric spaces.

Clusters are peeled off one at a time: pick a center by the configured
strategy, absorb either the ``bucketSize`` nearest remaining points or all
points within ``radius``, and continue with the remainder.  Search visits
clusters in increasing query-center distance, pruning those that cannot
contain answers.
"""
from __future__ import annotations

import numpy as np

from ..core import Index, Query, register_method, scan_records
from ..data import ObjectRecord
from ..params import ParamMap
from ..spaces.base import Space
from .vptree import MAX_LEAVES_UNBOUNDED

STRATEGIES = ("random", "closestPrevCenter", "farthestPrevCenter",
              "minSumDistPrevCenters", "maxSumDistPrevCenters")


class _Cluster:
    __slots__ = ("center", "covering_radius", "members", "block")

    def __init__(self, center: ObjectRecord, covering_radius: float,
                 members: list[ObjectRecord], block):
        self.center = center
        self.covering_radius = covering_radius
        self.members = members
        self.block = block


def _distances_from(space: Space, center: ObjectRecord,
                    records: list[ObjectRecord]) -> np.ndarray:
    if space.supports_batch() and records:
        block = space.stack([r.payload for r in records])
        return np.asarray(space._batch_distance(block, center.payload), dtype=np.float64)
    return np.asarray([space.index_time_distance(center.payload, r.payload)
                       for r in records], dtype=np.float64)


class ListClustersIndex(Index):
    """list_clusters: ordered clusters with covering radii."""

    def _create(self, params: ParamMap) -> None:
        self.use_bucket_size = params.get("useBucketSize", "bool", default=True)
        self.bucket_size = params.get("bucketSize", "int", default=100)
        self.radius = params.get("radius", "real", default=0.0)
        self.strategy = params.get("strategy", "text", default="random")
        self.chunk_bucket = params.get("chunkBucket", "bool", default=True)
        self.seed = params.get("seed", "int", default=0)
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; known: {STRATEGIES}")
        if not self.use_bucket_size and self.radius <= 0:
            raise ValueError("radius mode needs a positive radius")
        rng = np.random.default_rng(self.seed)
        space = self.space

        remaining = list(self.data.records)
        self.clusters: list[_Cluster] = []
        prev_center: ObjectRecord | None = None
        sum_dists: np.ndarray | None = None  # per remaining point, to prev centers
        while remaining:
            if prev_center is None or self.strategy == "random":
                center_pos = int(rng.integers(len(remaining)))
            elif self.strategy in ("closestPrevCenter", "farthestPrevCenter"):
                prev_d = _distances_from(space, prev_center, remaining)
                center_pos = int(np.argmin(prev_d) if self.strategy ==
                                 "closestPrevCenter" else np.argmax(prev_d))
            else:
                # sum_dists already covers every previous center
                center_pos = int(np.argmin(sum_dists) if self.strategy ==
                                 "minSumDistPrevCenters" else np.argmax(sum_dists))
            center = remaining.pop(center_pos)
            if sum_dists is not None:
                sum_dists = np.delete(sum_dists, center_pos)
            dists = _distances_from(space, center, remaining)
            if self.use_bucket_size:
                take = min(self.bucket_size, len(remaining))
                order = np.lexsort((np.arange(len(remaining)), dists))[:take]
                chosen = set(int(i) for i in order)
            else:
                chosen = set(int(i) for i in np.flatnonzero(dists <= self.radius))
            members = [r for i, r in enumerate(remaining) if i in chosen]
            covering = float(max((dists[i] for i in chosen), default=0.0))
            block = None
            if self.chunk_bucket and members and space.supports_batch():
                block = space.stack([r.payload for r in members])
            self.clusters.append(_Cluster(center, covering, members, block))
            keep = [i for i in range(len(remaining)) if i not in chosen]
            remaining = [remaining[i] for i in keep]
            if self.strategy in ("minSumDistPrevCenters", "maxSumDistPrevCenters"):
                tail = dists[keep] if len(keep) else np.zeros(0)
                sum_dists = tail if sum_dists is None else sum_dists[keep] + tail
            prev_center = center

    def reset_query_time_params(self) -> None:
        self.max_leaves = MAX_LEAVES_UNBOUNDED

    def _apply_query_params(self, params: ParamMap) -> None:
        self.max_leaves = params.get("maxLeavesToVisit", "int",
                                     default=MAX_LEAVES_UNBOUNDED)

    def _run(self, query: Query) -> None:
        # centers are data points too: evaluating the visit order doubles as
        # comparing each center against the query
        center_dists = []
        for cl in self.clusters:
            d = query.distance_to(cl.center.payload)
            query.check_and_add(cl.center.id, d, cl.center.label)
            center_dists.append(d)
        order = np.lexsort((np.arange(len(self.clusters)), center_dists))
        # prune the suffix once no remaining cluster ball can intersect the query ball
        suffix_max_radius = np.zeros(len(order))
        running = 0.0
        for pos in range(len(order) - 1, -1, -1):
            running = max(running, self.clusters[order[pos]].covering_radius)
            suffix_max_radius[pos] = running
        budget = self.max_leaves
        for pos, ci in enumerate(order):
            if budget <= 0:
                break
            cl = self.clusters[int(ci)]
            d = center_dists[int(ci)]
            if d - suffix_max_radius[pos] > query.radius():
                break
            if d <= cl.covering_radius + query.radius():
                budget -= 1
                scan_records(query, cl.members, cl.block)

    _search_knn = _run
    _search_range = _run

    def size_bytes(self) -> int:
        return 64 * len(self.clusters) + 8 * len(self.data)

    def str_desc(self) -> str:
        mode = (f"bucketSize={self.bucket_size}" if self.use_bucket_size
                else f"radius={self.radius}")
        return f"list_clusters: {mode} strategy={self.strategy}"


register_method("list_clusters", ListClustersIndex)
