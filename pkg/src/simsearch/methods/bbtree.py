"""Bregman ball tree: exact search for decomposable Bregman divergences.

Nodes cover their members with a divergence ball.  The pruning test computes
the exact minimum divergence from the ball to the query by bisecting along
the segment, in gradient space, between the query image and the ball center
image: the constrained minimizer of div(x, q) over {x : div(x, center) <= R}
lies on that segment, and both the divergence to the center and the
divergence to the query are monotone along it.

The two-sided early exit keeps the returned value a certified lower bound at
any bisection tolerance: while walking the segment, points still outside the
ball give lower bounds, points inside give upper bounds.
"""
from __future__ import annotations

import numpy as np

from ..core import Index, Query, UnsupportedQueryError, register_method, scan_records
from ..data import ObjectRecord
from ..params import ParamMap
from ..spaces.divergence import BregmanSpace
from .vptree import MAX_LEAVES_UNBOUNDED

BISECT_TOL = 1e-6
BISECT_MAX_ITER = 100
LLOYD_ITERATIONS = 10
DEFAULT_BUCKET_SIZE = 50


class _Ball:
    __slots__ = ("center_payload", "center_vals", "center_logs", "center_dual",
                 "radius", "left", "right", "bucket", "block")

    def __init__(self):
        self.center_payload = None
        self.center_vals: np.ndarray | None = None
        self.center_logs: np.ndarray | None = None
        self.center_dual: np.ndarray | None = None
        self.radius = 0.0
        self.left: "_Ball | None" = None
        self.right: "_Ball | None" = None
        self.bucket: list[ObjectRecord] | None = None
        self.block = None


def _values_of(space: BregmanSpace, payload) -> np.ndarray:
    return space._vals_logs(payload)[0]


def _make_ball(space: BregmanSpace, records: list[ObjectRecord],
               duals: np.ndarray) -> _Ball:
    ball = _Ball()
    mean_dual = duals.mean(axis=0)
    center_vals = space.grad_inv(mean_dual)
    ball.center_vals = center_vals
    ball.center_dual = space.grad(center_vals)
    ball.center_payload = space.make_payload(center_vals)
    ball.center_logs = space.vals_logs_of(ball.center_payload)[1]
    block = space.stack([r.payload for r in records])
    dists = space._batch_distance(block, ball.center_payload)
    ball.radius = float(dists.max())
    return ball


def _build(space: BregmanSpace, records: list[ObjectRecord], duals: np.ndarray,
           bucket_size: int, chunk_bucket: bool,
           rng: np.random.Generator) -> _Ball:
    ball = _make_ball(space, records, duals)
    if len(records) <= bucket_size:
        ball.bucket = records
        if chunk_bucket:
            ball.block = space.stack([r.payload for r in records])
        return ball
    # two-means split in gradient (dual) space
    seeds = rng.choice(len(records), size=2, replace=False)
    centers = duals[seeds].copy()
    assign = np.zeros(len(records), dtype=np.int64)
    for it in range(LLOYD_ITERATIONS):
        d0 = ((duals - centers[0]) ** 2).sum(axis=1)
        d1 = ((duals - centers[1]) ** 2).sum(axis=1)
        new_assign = (d1 < d0).astype(np.int64)
        if it > 0 and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for c in (0, 1):
            mask = assign == c
            if mask.any():
                centers[c] = duals[mask].mean(axis=0)
    left_mask = assign == 0
    if not left_mask.any() or left_mask.all():
        # degenerate split: fall back to a leaf
        ball.bucket = records
        if chunk_bucket:
            ball.block = space.stack([r.payload for r in records])
        return ball
    left_idx = np.flatnonzero(left_mask)
    right_idx = np.flatnonzero(~left_mask)
    ball.left = _build(space, [records[i] for i in left_idx], duals[left_idx],
                       bucket_size, chunk_bucket, rng)
    ball.right = _build(space, [records[i] for i in right_idx], duals[right_idx],
                        bucket_size, chunk_bucket, rng)
    return ball


def _min_div_to_ball(space: BregmanSpace, ball: _Ball, query: Query,
                     qv: np.ndarray, ql: np.ndarray, query_dual: np.ndarray,
                     d_center: float, pruning_radius: float) -> float:
    """Certified lower bound for min div(x, query) over the ball's members.

    Exits early once the bound provably exceeds ``pruning_radius`` (prune) or
    a point inside the ball is provably close enough (must visit).  Every
    divergence evaluation is added to the query's distance counter.
    ``d_center`` is div(query, center): when the query itself satisfies the
    ball constraint, it is a feasible point and the bound is 0.
    """
    if d_center <= ball.radius:
        return 0.0
    lo, hi = 0.0, 1.0  # interpolation weight toward the center image
    lower_bound = 0.0
    div = space.div_vals
    for _ in range(BISECT_MAX_ITER):
        theta = 0.5 * (lo + hi)
        xv, xl = space.vals_logs_from_dual(
            (1.0 - theta) * query_dual + theta * ball.center_dual)
        query.dist_count += 1
        if div(xv, xl, ball.center_vals, ball.center_logs) > ball.radius:
            # still outside: divergence to the query lower-bounds the optimum
            lo = theta
            query.dist_count += 1
            lower_bound = div(xv, xl, qv, ql)
            if lower_bound > pruning_radius:
                return lower_bound
        else:
            hi = theta
            query.dist_count += 1
            if div(xv, xl, qv, ql) <= pruning_radius:
                return lower_bound  # inside and close: cannot prune
        if hi - lo <= BISECT_TOL:
            break
    return lower_bound


class BbTreeIndex(Index):
    """bbtree: Bregman-ball decomposition with bisection-based pruning."""

    def _create(self, params: ParamMap) -> None:
        if not isinstance(self.space, BregmanSpace) or not self.space.bregman_left:
            raise UnsupportedQueryError(
                "bbtree requires a left-oriented Bregman space "
                "(KL family or Itakura-Saito)")
        self.bucket_size = params.get("bucketSize", "int", default=DEFAULT_BUCKET_SIZE)
        self.chunk_bucket = params.get("chunkBucket", "bool", default=True)
        self.seed = params.get("seed", "int", default=0)
        rng = np.random.default_rng(self.seed)
        self.root = None
        if len(self.data):
            duals = np.stack([self.space.grad(_values_of(self.space, r.payload))
                              for r in self.data])
            self.root = _build(self.space, list(self.data.records), duals,
                               self.bucket_size, self.chunk_bucket, rng)

    def reset_query_time_params(self) -> None:
        self.max_leaves = MAX_LEAVES_UNBOUNDED

    def _apply_query_params(self, params: ParamMap) -> None:
        self.max_leaves = params.get("maxLeavesToVisit", "int",
                                     default=MAX_LEAVES_UNBOUNDED)

    def _run(self, query: Query) -> None:
        if self.root is None:
            return
        if query.orientation != "left":
            raise UnsupportedQueryError("bbtree answers left queries only")
        qv, ql = self.space.vals_logs_of(query.query_obj.payload)
        query_dual = self.space.grad(qv)
        budget = [self.max_leaves]
        self._visit(self.root, query, qv, ql, query_dual, budget)

    def _visit(self, ball: _Ball, query: Query, qv: np.ndarray, ql: np.ndarray,
               query_dual: np.ndarray, budget: list) -> None:
        if budget[0] <= 0:
            return
        if ball.bucket is not None:
            budget[0] -= 1
            scan_records(query, ball.bucket, ball.block)
            return
        div = self.space.div_vals
        children = [ball.left, ball.right]
        # divergence of the query from each child center: orders the descent
        # and certifies query-inside-ball (bound 0) in _min_div_to_ball
        query.dist_count += 2
        d = [div(qv, ql, c.center_vals, c.center_logs) for c in children]
        first = 0 if (d[0], 0) <= (d[1], 1) else 1
        for pos in (first, 1 - first):
            child = children[pos]
            if budget[0] <= 0:
                return
            bound = _min_div_to_ball(self.space, child, query, qv, ql,
                                     query_dual, d[pos], query.radius())
            if bound <= query.radius():
                self._visit(child, query, qv, ql, query_dual, budget)

    _search_knn = _run
    _search_range = _run

    def size_bytes(self) -> int:
        n = len(self.data)
        dim = 0
        if n:
            dim = len(_values_of(self.space, self.data[0].payload))
        nodes = 2 * max(1, n // max(1, self.bucket_size))
        return nodes * (64 + 3 * 8 * dim) + 8 * n

    def str_desc(self) -> str:
        return f"bbtree: bucketSize={self.bucket_size}"


register_method("bbtree", BbTreeIndex)
