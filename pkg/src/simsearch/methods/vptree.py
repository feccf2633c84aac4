"""Vantage-point tree with a tunable pruning oracle.

The tree recursively splits data by the median distance to a random pivot.
Search prunes the far child through a stretched triangle-inequality bound

    D(x) = alpha_left  * |x - R| ** exp_left    if x <= R
           alpha_right * |x - R| ** exp_right   if x >= R

where x is the query-pivot distance and R the node's median radius.  With
alpha = 1 and exp = 1 in a metric space the search is exact; larger alphas
trade recall for speed.  An auto-tuner picks the cheapest oracle parameters
that reach a desired recall on a bootstrapped sample.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import (Index, KnnQuery, Query, RangeQuery, register_method,
                    scan_records)
from ..data import DataSet, ObjectRecord
from ..params import ParamMap
from ..spaces.base import Space

MAX_LEAVES_UNBOUNDED = 2147483647
DEFAULT_BUCKET_SIZE = 50
DEFAULT_TUNE_QTY = 5000
MIN_TUNABLE_DATA = 2000


@dataclass(frozen=True)
class VpOracleParams:
    alpha_left: float = 1.0
    alpha_right: float = 1.0
    exp_left: float = 1.0
    exp_right: float = 1.0

    def decision(self, x: float, radius: float) -> float:
        """The pruning bound D(x) for a node of median radius ``radius``."""
        if x <= radius:
            return self.alpha_left * (radius - x) ** self.exp_left
        return self.alpha_right * (x - radius) ** self.exp_right


class TuningError(RuntimeError):
    """Auto-tuning could not run or could not reach the desired recall."""


class _Node:
    __slots__ = ("pivot", "radius", "inner", "outer", "bucket", "block")

    def __init__(self):
        self.pivot: ObjectRecord | None = None
        self.radius = 0.0
        self.inner: _Node | None = None
        self.outer: _Node | None = None
        self.bucket: list[ObjectRecord] | None = None
        self.block = None


def _build_node(space: Space, records: list[ObjectRecord], bucket_size: int,
                chunk_bucket: bool, rng: np.random.Generator) -> _Node | None:
    if not records:
        return None
    node = _Node()
    if len(records) <= bucket_size:
        node.bucket = records
        if chunk_bucket and space.supports_batch():
            node.block = space.stack([r.payload for r in records])
        return node
    pivot_pos = int(rng.integers(len(records)))
    node.pivot = records[pivot_pos]
    rest = records[:pivot_pos] + records[pivot_pos + 1:]
    if space.supports_batch():
        block = space.stack([r.payload for r in rest])
        dists = space._batch_distance(block, node.pivot.payload)
    else:
        dists = np.asarray([
            space.index_time_distance(node.pivot.payload, r.payload) for r in rest])
    node.radius = float(np.sort(dists, kind="stable")[(len(rest) - 1) // 2])
    inner = [r for r, d in zip(rest, dists) if d <= node.radius]
    outer = [r for r, d in zip(rest, dists) if d > node.radius]
    if not inner or not outer:
        # duplicate-heavy data: the median cannot separate, stop splitting
        node.pivot = None
        node.bucket = records
        if chunk_bucket and space.supports_batch():
            node.block = space.stack([r.payload for r in records])
        return node
    node.inner = _build_node(space, inner, bucket_size, chunk_bucket, rng)
    node.outer = _build_node(space, outer, bucket_size, chunk_bucket, rng)
    return node


def _search_node(node: _Node | None, query: Query, oracle: VpOracleParams,
                 budget: list, trace: list | None) -> None:
    """Depth-first descent; ``budget[0]`` counts remaining leaf visits."""
    if node is None or budget[0] <= 0:
        return
    if node.bucket is not None:
        budget[0] -= 1
        scan_records(query, node.bucket, node.block)
        return
    pivot = node.pivot
    x = query.distance_to(pivot.payload)
    query.check_and_add(pivot.id, x, pivot.label)
    near, far = ((node.inner, node.outer) if x <= node.radius
                 else (node.outer, node.inner))
    _search_node(near, query, oracle, budget, trace)
    if budget[0] <= 0:
        return
    bound = oracle.decision(x, node.radius)
    if query.radius() > bound:
        if trace is not None:
            trace.append(("visit", pivot.id))
        _search_node(far, query, oracle, budget, trace)
    elif trace is not None:
        trace.append(("prune", pivot.id))


def _count_leaves(node: _Node | None) -> int:
    if node is None:
        return 0
    if node.bucket is not None:
        return 1
    return _count_leaves(node.inner) + _count_leaves(node.outer)


class VpTreeIndex(Index):
    """vptree: median-split ball tree with the stretched pruning oracle."""

    def _create(self, params: ParamMap) -> None:
        self.bucket_size = params.get("bucketSize", "int", default=DEFAULT_BUCKET_SIZE)
        self.chunk_bucket = params.get("chunkBucket", "bool", default=True)
        self.seed = params.get("seed", "int", default=0)
        if self.bucket_size < 1:
            raise ValueError("bucketSize must be >= 1")
        self._tuned: VpOracleParams | None = None
        if "tuneK" in params or "tuneR" in params:
            tune_k = params.get("tuneK", "int", default=None)
            tune_r = params.get("tuneR", "real", default=None)
            desired_recall = params.get("desiredRecall", "real", required=True)
            tune_qty = params.get("tuneQty", "int", default=DEFAULT_TUNE_QTY)
            min_exp = params.get("minExp", "real", default=1.0)
            max_exp = params.get("maxExp", "real", default=1.0)
            self._tuned = tune_vptree(
                self.space, self.data, tune_k=tune_k, tune_r=tune_r,
                desired_recall=desired_recall, tune_qty=tune_qty,
                bucket_size=self.bucket_size, min_exp=min_exp,
                max_exp=max_exp, seed=self.seed)
        rng = np.random.default_rng(self.seed)
        self.root = _build_node(self.space, list(self.data.records),
                                self.bucket_size, self.chunk_bucket, rng)
        self._trace = None

    def reset_query_time_params(self) -> None:
        self.oracle = self._tuned or VpOracleParams()
        self.max_leaves = MAX_LEAVES_UNBOUNDED

    def _apply_query_params(self, params: ParamMap) -> None:
        base = self.oracle
        self.oracle = VpOracleParams(
            alpha_left=params.get("alphaLeft", "real", default=base.alpha_left),
            alpha_right=params.get("alphaRight", "real", default=base.alpha_right),
            exp_left=params.get("expLeft", "real", default=base.exp_left),
            exp_right=params.get("expRight", "real", default=base.exp_right))
        self.max_leaves = params.get("maxLeavesToVisit", "int",
                                     default=MAX_LEAVES_UNBOUNDED)

    def _search(self, query: Query) -> None:
        _search_node(self.root, query, self.oracle, [self.max_leaves], self._trace)

    _search_knn = _search
    _search_range = _search

    def size_bytes(self) -> int:
        leaves = _count_leaves(self.root)
        n = len(self.data)
        per_node = 64
        chunk = 0
        if self.chunk_bucket and self.space.supports_batch() and n:
            sample = self.space.stack([self.data[0].payload])
            if isinstance(sample, tuple):
                chunk = sum(getattr(b, "nbytes", 0) for b in sample if b is not None) * n
            else:
                chunk = sample.nbytes * n
        return (2 * leaves - 1) * per_node + 8 * n + chunk

    def str_desc(self) -> str:
        o = self.oracle
        return (f"vptree: bucketSize={self.bucket_size} alphaLeft={o.alpha_left} "
                f"alphaRight={o.alpha_right} expLeft={o.exp_left} expRight={o.exp_right}")


def _brute_force_knn(space: Space, data: DataSet, query_rec: ObjectRecord,
                     k: int, block=None) -> list[tuple[float, int]]:
    q = KnnQuery(space, query_rec, k)
    scan_records(q, data.records, block)
    return [(d, i) for d, i, _ in q.results()]


def tune_vptree(space: Space, data: DataSet, desired_recall: float,
                tune_k: int | None = None, tune_r: float | None = None,
                tune_qty: int = DEFAULT_TUNE_QTY, bucket_size: int = DEFAULT_BUCKET_SIZE,
                min_exp: float = 1.0, max_exp: float = 1.0, seed: int = 0,
                n_splits: int = 2, n_queries: int = 100,
                restarts: int = 8) -> VpOracleParams:
    """Grid search with random restarts for the cheapest oracle parameters
    reaching ``desired_recall`` on a bootstrapped sample.

    Cost is the measured number of distance computations, which is
    deterministic across machines.  Exactly one of ``tune_k``/``tune_r``
    must be given.
    """
    if (tune_k is None) == (tune_r is None):
        raise TuningError("specify exactly one of tuneK / tuneR")
    if len(data) < MIN_TUNABLE_DATA:
        raise TuningError(
            f"auto-tuning needs at least {MIN_TUNABLE_DATA} records, got {len(data)}")
    if desired_recall >= 1.0:
        # only the unstretched triangle bound provably reaches full recall
        return VpOracleParams()

    rng = np.random.default_rng(seed)
    sample_ids = rng.choice(len(data), size=min(tune_qty, len(data)), replace=False)
    sample = data.subset(sorted(int(i) for i in sample_ids))

    # bootstrap splits of the tuning sample
    splits = []
    for _ in range(n_splits):
        qty = min(n_queries, max(1, len(sample) // 10))
        picked = rng.choice(len(sample), size=qty, replace=False)
        q_ids = set(int(i) for i in picked)
        indexable = sample.subset([i for i in range(len(sample)) if i not in q_ids])
        queries = [sample[i] for i in sorted(q_ids)]
        tree = VpTreeIndex(space, indexable)
        tree.create_index(ParamMap({"bucketSize": str(bucket_size),
                                    "seed": str(int(rng.integers(2 ** 31)))}))
        block = (space.stack([r.payload for r in indexable])
                 if space.supports_batch() else None)
        gold = []
        for q in queries:
            if tune_k is not None:
                gold.append({i for _, i in _brute_force_knn(
                    space, indexable, q, tune_k, block)})
            else:
                rq = RangeQuery(space, q, tune_r)
                scan_records(rq, indexable.records, block)
                gold.append({i for _, i, _ in rq.results()})
        splits.append((indexable, queries, tree, gold))

    def evaluate(oracle: VpOracleParams) -> tuple[float, float]:
        recalls, costs = [], []
        for indexable, queries, tree, gold in splits:
            tree.oracle = oracle
            tree.max_leaves = MAX_LEAVES_UNBOUNDED
            hit = total = cost = 0
            for q, truth in zip(queries, gold):
                query = (KnnQuery(space, q, tune_k) if tune_k is not None
                         else RangeQuery(space, q, tune_r))
                tree.search(query)
                found = {i for _, i, _ in query.results()}
                hit += len(found & truth)
                total += len(truth)
                cost += query.dist_count
            recalls.append(hit / total if total else 1.0)
            costs.append(cost)
        return float(np.mean(recalls)), float(np.mean(costs))

    if min_exp > max_exp:
        raise TuningError("minExp must not exceed maxExp")
    exps = np.arange(min_exp, max_exp + 1e-9, 0.5) if max_exp > min_exp else [min_exp]
    alphas = [2.0 ** e for e in range(-4, 7)]

    best: tuple[float, VpOracleParams] | None = None
    for exp in exps:
        diag_results = []
        for alpha in alphas:
            oracle = VpOracleParams(alpha, alpha, exp, exp)
            recall, cost = evaluate(oracle)
            diag_results.append((alpha, recall, cost))
            if recall >= desired_recall and (best is None or cost < best[0]):
                best = (cost, oracle)
        # random restarts around the best qualifying diagonal point
        qualifying = [a for a, r, _ in diag_results if r >= desired_recall]
        center = max(qualifying) if qualifying else 1.0
        for _ in range(restarts):
            a_l = center * 2.0 ** rng.uniform(-1.0, 1.0)
            a_r = center * 2.0 ** rng.uniform(-1.0, 1.0)
            oracle = VpOracleParams(a_l, a_r, exp, exp)
            recall, cost = evaluate(oracle)
            if recall >= desired_recall and (best is None or cost < best[0]):
                best = (cost, oracle)

    if best is None:
        raise TuningError(
            f"no oracle parameters reached recall {desired_recall} on the sample")
    return best[1]


register_method("vptree", VpTreeIndex)
