"""Projection-based filter-and-refine methods.

proj_incsort scans projected vectors exhaustively; proj_vptree indexes them
with a VP-tree; perm_bin_vptree indexes binarized permutations under the
Hamming distance; omedrank aggregates per-coordinate rankings with expanding
pointer windows.
"""
from __future__ import annotations

import heapq

import numpy as np

from ..core import Index, KnnQuery, Query, register_method
from ..data import DataSet, ObjectRecord
from ..params import ParamMap
from ..projection import compute_permutation, make_projection, project_query
from ..spaces.base import create_space
from .permutation import (DEFAULT_DB_SCAN_FRAC, binarize_permutation,
                          object_permutation, query_pivot_distances, refine,
                          sample_pivots, scan_cap, select_by_value)
from .vptree import MAX_LEAVES_UNBOUNDED, VpOracleParams, VpTreeIndex, _search_node

DEFAULT_CHUNK_INDEX_SIZE = 65536


def _projected_l2(matrix: np.ndarray, q: np.ndarray) -> np.ndarray:
    diff = matrix - q
    return np.sqrt((diff * diff).sum(axis=1))


def _projected_cosine(matrix: np.ndarray, q: np.ndarray) -> np.ndarray:
    norms = np.sqrt((matrix * matrix).sum(axis=1))
    qnorm = float(np.sqrt((q * q).sum()))
    denom = norms * qnorm
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(denom > 0, (matrix * q).sum(axis=1) / denom, 0.0)
    return 1.0 - np.clip(ratio, -1.0, 1.0)


def _queue_select(values: np.ndarray, m: int) -> np.ndarray:
    """Bounded priority-queue selection; same candidate set as select_by_value."""
    if m <= 0 or len(values) == 0:
        return np.empty(0, dtype=np.int64)
    heap: list[tuple[float, int]] = []  # max-heap via negation
    for i, v in enumerate(values):
        item = (-float(v), -i)
        if len(heap) < m:
            heapq.heappush(heap, item)
        elif item > heap[0]:
            heapq.heapreplace(heap, item)
    ranked = sorted((-v, -i) for v, i in heap)
    return np.asarray([i for _, i in ranked], dtype=np.int64)


class _ProjectionMethod(Index):
    """Common projection construction for the filter-and-refine family."""

    def _init_projection(self, params: ParamMap, dim_param: str = "projDim") -> None:
        self.proj_type = params.get("projType", "text", required=True)
        self.proj_dim = params.get(dim_param, "int", required=True)
        self.interm_dim = params.get("intermDim", "int", default=0)
        self.seed = params.get("seed", "int", default=0)
        self.projection = make_projection(self.proj_type, self.space, self.data,
                                          self.proj_dim, self.interm_dim, self.seed)
        self.proj_matrix = np.stack(
            [self.projection.project(rec.payload) for rec in self.data]
        ) if len(self.data) else np.zeros((0, self.proj_dim))

    def _project_query(self, query: Query) -> np.ndarray:
        return project_query(self.projection, query)


class ProjIncSort(_ProjectionMethod):
    """proj_incsort: brute-force scan in the projected space, then refine."""

    def _create(self, params: ParamMap) -> None:
        self._init_projection(params)

    def reset_query_time_params(self) -> None:
        self.db_scan_frac = DEFAULT_DB_SCAN_FRAC
        self.use_cosine = False
        self.use_queue = False

    def _apply_query_params(self, params: ParamMap) -> None:
        self.db_scan_frac = params.get("dbScanFrac", "real", default=self.db_scan_frac)
        self.use_cosine = params.get("useCosine", "bool", default=self.use_cosine)
        self.use_queue = params.get("useQueue", "bool", default=self.use_queue)

    def _run(self, query: Query) -> None:
        q = self._project_query(query)
        surrogate = (_projected_cosine if self.use_cosine else _projected_l2)(
            self.proj_matrix, q)
        cap = scan_cap(self.db_scan_frac, len(self.data))
        chosen = (_queue_select(surrogate, cap) if self.use_queue
                  else select_by_value(surrogate, cap))
        refine(query, self.data.records, chosen)

    _search_knn = _run
    _search_range = _run

    def size_bytes(self) -> int:
        return self.proj_matrix.nbytes

    def str_desc(self) -> str:
        return f"proj_incsort: projType={self.proj_type} projDim={self.proj_dim}"


class _FilterRefineVpTree(Index):
    """Shared machinery: VP-tree over surrogate payloads, refine winners."""

    surrogate_space_descr = "l2"
    surrogate_dist_type = "float"

    def _surrogate_payload(self, rec: ObjectRecord):
        raise NotImplementedError

    def _surrogate_query_payload(self, query: Query):
        raise NotImplementedError

    def _build_surrogate_tree(self, params: ParamMap) -> None:
        self.surrogate_space = create_space(self.surrogate_space_descr,
                                            self.surrogate_dist_type)
        payloads = [self._surrogate_payload(rec) for rec in self.data]
        records = [ObjectRecord(i, p) for i, p in enumerate(payloads)]
        surrogate_data = DataSet(records, self.surrogate_space.name)
        self.tree = VpTreeIndex(self.surrogate_space, surrogate_data)
        tree_params = {"bucketSize": str(params.get("bucketSize", "int", default=50)),
                       "chunkBucket": "1" if params.get("chunkBucket", "bool",
                                                        default=True) else "0",
                       "seed": str(params.get("seed", "int", default=0))}
        self.tree.create_index(ParamMap(tree_params))

    def reset_query_time_params(self) -> None:
        self.db_scan_frac = DEFAULT_DB_SCAN_FRAC
        self.oracle = VpOracleParams()
        self.max_leaves = MAX_LEAVES_UNBOUNDED

    def _apply_query_params(self, params: ParamMap) -> None:
        self.db_scan_frac = params.get("dbScanFrac", "real", default=self.db_scan_frac)
        self.oracle = VpOracleParams(
            alpha_left=params.get("alphaLeft", "real", default=self.oracle.alpha_left),
            alpha_right=params.get("alphaRight", "real", default=self.oracle.alpha_right),
            exp_left=params.get("expLeft", "real", default=self.oracle.exp_left),
            exp_right=params.get("expRight", "real", default=self.oracle.exp_right))
        self.max_leaves = params.get("maxLeavesToVisit", "int", default=self.max_leaves)

    def _run(self, query: Query) -> None:
        cap = scan_cap(self.db_scan_frac, len(self.data))
        if cap == 0:
            return
        inner_query = KnnQuery(self.surrogate_space,
                               ObjectRecord(-1, self._surrogate_query_payload(query)),
                               k=cap)
        _search_node(self.tree.root, inner_query, self.oracle,
                     [self.max_leaves], None)
        winners = sorted(i for _, i, _ in inner_query.results())
        refine(query, self.data.records, winners)

    _search_knn = _run
    _search_range = _run

    def size_bytes(self) -> int:
        return self.tree.size_bytes()


class ProjVpTree(_ProjectionMethod, _FilterRefineVpTree):
    """proj_vptree: VP-tree over projections in a configurable space."""

    def _create(self, params: ParamMap) -> None:
        self._init_projection(params)
        self.surrogate_space_descr = params.get("projSpaceType", "text", default="l2")
        self._build_surrogate_tree(params)

    def _surrogate_payload(self, rec: ObjectRecord):
        return self.surrogate_space.make_payload(
            self.projection.project(rec.payload))

    def _surrogate_query_payload(self, query: Query):
        return self.surrogate_space.make_payload(self._project_query(query))

    def str_desc(self) -> str:
        return (f"proj_vptree: projType={self.proj_type} projDim={self.proj_dim} "
                f"projSpaceType={self.surrogate_space_descr}")


class PermBinVpTree(_FilterRefineVpTree):
    """perm_bin_vptree: VP-tree over binarized permutations under Hamming."""

    surrogate_space_descr = "bit_hamming"
    surrogate_dist_type = "int"

    def _create(self, params: ParamMap) -> None:
        self.num_pivot = params.get("numPivot", "int", required=True)
        self.bin_threshold = params.get("binThreshold", "int",
                                        default=self.num_pivot // 2)
        self.seed = params.get("seed", "int", default=0)
        self.pivots = sample_pivots(self.space, self.data, self.num_pivot, self.seed)
        self._perm_cache = {
            rec.id: object_permutation(self.space, rec.payload, self.pivots)
            for rec in self.data}
        self._build_surrogate_tree(params)

    def _surrogate_payload(self, rec: ObjectRecord):
        bits = binarize_permutation(self._perm_cache[rec.id], self.bin_threshold)
        return self.surrogate_space.make_payload(bits)

    def _surrogate_query_payload(self, query: Query):
        dists = query_pivot_distances(query, self.pivots)
        bits = binarize_permutation(compute_permutation(dists), self.bin_threshold)
        return self.surrogate_space.make_payload(bits)

    def str_desc(self) -> str:
        return (f"perm_bin_vptree: numPivot={self.num_pivot} "
                f"binThreshold={self.bin_threshold}")


class Omedrank(_ProjectionMethod):
    """omedrank: rank aggregation over per-coordinate sorted lists.

    Each projection coordinate votes by expanding a window around the query's
    coordinate; objects whose vote count crosses numPivotSearch*minFreq become
    candidates in crossing order.
    """

    def _create(self, params: ParamMap) -> None:
        self._init_projection(params, dim_param="numPivot")
        self.num_pivot = self.proj_dim
        self.chunk_index_size = params.get("chunkIndexSize", "int",
                                           default=DEFAULT_CHUNK_INDEX_SIZE)
        self.chunks = []
        n = len(self.data)
        for lo in range(0, n, self.chunk_index_size):
            hi = min(lo + self.chunk_index_size, n)
            coords = self.proj_matrix[lo:hi]
            dims = []
            for i in range(self.num_pivot):
                order = np.lexsort((np.arange(hi - lo), coords[:, i]))
                dims.append((coords[order, i], order.astype(np.int64)))
            self.chunks.append((lo, hi - lo, dims))

    def reset_query_time_params(self) -> None:
        self.num_pivot_search = self.num_pivot
        self.min_freq = 0.5
        self.db_scan_frac = DEFAULT_DB_SCAN_FRAC

    def _apply_query_params(self, params: ParamMap) -> None:
        self.num_pivot_search = params.get("numPivotSearch", "int",
                                           default=self.num_pivot_search)
        self.min_freq = params.get("minFreq", "real", default=self.min_freq)
        self.db_scan_frac = params.get("dbScanFrac", "real", default=self.db_scan_frac)
        if self.num_pivot_search > self.num_pivot:
            raise ValueError("numPivotSearch cannot exceed numPivot")
        if not (0 < self.min_freq <= 1):
            raise ValueError("minFreq must be in (0, 1]")

    def candidates(self, query: Query) -> list[int]:
        q = self._project_query(query)
        # lists with the smallest absolute query coordinates participate;
        # the sweep then walks them in ascending list order
        selected = np.sort(np.argsort(np.abs(q), kind="stable")[: self.num_pivot_search])
        threshold = self.num_pivot_search * self.min_freq
        cap = scan_cap(self.db_scan_frac, len(self.data))
        out: list[int] = []
        for lo, size, dims in self.chunks:
            if len(out) >= cap:
                break
            counters = np.zeros(size, dtype=np.int32)
            crossed = np.zeros(size, dtype=bool)
            low: list[int] = []
            high: list[int] = []
            lists = [dims[int(i)] for i in selected]
            qvals = [float(q[int(i)]) for i in selected]

            def bump(local_id: int) -> bool:
                counters[local_id] += 1
                if not crossed[local_id] and counters[local_id] >= threshold:
                    crossed[local_id] = True
                    out.append(lo + local_id)
                return len(out) >= cap

            done = False
            for (coords, ids), qv in zip(lists, qvals):
                pos = int(np.searchsorted(coords, qv, side="left"))
                if pos >= len(coords):
                    pos = len(coords) - 1
                elif pos > 0 and qv - coords[pos - 1] <= coords[pos] - qv:
                    pos -= 1  # nearest coordinate, ties toward the lower index
                low.append(pos)
                high.append(pos)
                if bump(int(ids[pos])):
                    done = True
                    break
            while not done:
                moved = False
                for j, (coords, ids) in enumerate(lists):
                    if high[j] + 1 < len(ids):
                        high[j] += 1
                        moved = True
                        if bump(int(ids[high[j]])):
                            done = True
                            break
                    if low[j] - 1 >= 0:
                        low[j] -= 1
                        moved = True
                        if bump(int(ids[low[j]])):
                            done = True
                            break
                if done or not moved:
                    break
        return out

    def _run(self, query: Query) -> None:
        refine(query, self.data.records, self.candidates(query))

    _search_knn = _run
    _search_range = _run

    def size_bytes(self) -> int:
        return 2 * self.proj_matrix.nbytes

    def str_desc(self) -> str:
        return f"omedrank: projType={self.proj_type} numPivot={self.num_pivot}"


register_method("proj_incsort", ProjIncSort)
register_method("proj_vptree", ProjVpTree)
register_method("perm_bin_vptree", PermBinVpTree)
register_method("omedrank", Omedrank)
