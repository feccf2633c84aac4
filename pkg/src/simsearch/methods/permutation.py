"""Permutation-based filtering: NAPP, PP-index, MI-file, binarized scan.

All four map objects to pivot rankings and filter candidates through cheap
surrogate structures; survivors are re-ranked with the true distance, so
approximation only ever affects which objects get compared, never the
reported distances.
"""
from __future__ import annotations

import math

import numpy as np

from ..core import Index, Query, register_method
from ..data import ObjectRecord, read_dataset
from ..params import ParamMap
from ..projection import compute_permutation
from ..spaces.base import Space
from ._io import load_index_file, save_index_file

DEFAULT_DB_SCAN_FRAC = 0.05
DEFAULT_CHUNK_INDEX_SIZE = 65536


def scan_cap(frac: float, n: int) -> int:
    """Candidate count for a dbScanFrac value: ceil(frac*n), at least 1."""
    if frac <= 0:
        return 0
    return max(1, math.ceil(frac * n))


def sample_pivots(space: Space, data, num_pivot: int, seed: int,
                  pivot_file: str | None = None) -> list:
    """Pivot payloads: sampled from the data without replacement, or read
    verbatim from a data-format file."""
    if pivot_file:
        pivots = read_dataset(pivot_file, space)
        if len(pivots) < num_pivot:
            raise ValueError(
                f"pivot file holds {len(pivots)} objects, need {num_pivot}")
        return [r.payload for r in pivots.records[:num_pivot]]
    if num_pivot > len(data):
        raise ValueError(
            f"cannot draw {num_pivot} distinct pivots from {len(data)} objects")
    rng = np.random.default_rng(seed)
    picked = rng.choice(len(data), size=num_pivot, replace=False)
    return [data[int(i)].payload for i in picked]


def pivot_distances(space: Space, payload, pivots) -> np.ndarray:
    """Index-time distances from every pivot (left slot) to the object."""
    return np.asarray(
        [space.index_time_distance(piv, payload) for piv in pivots], dtype=np.float64)


def query_pivot_distances(query: Query, pivots) -> np.ndarray:
    """Query-side pivot distances through the counting proxy."""
    return np.asarray([query.distance_to(piv) for piv in pivots], dtype=np.float64)


def object_permutation(space: Space, payload, pivots) -> np.ndarray:
    return compute_permutation(pivot_distances(space, payload, pivots))


def binarize_permutation(perm: np.ndarray, threshold: int) -> np.ndarray:
    """Ranks below the threshold become 0 bits, the rest become 1."""
    return (np.asarray(perm) >= threshold).astype(np.uint8)


def closest_pivot_ids(dists: np.ndarray, count: int) -> np.ndarray:
    """Indices of the ``count`` nearest pivots, ties toward the smaller index."""
    order = np.argsort(dists, kind="stable")
    return order[:count]


def select_by_value(values: np.ndarray, m: int) -> np.ndarray:
    """Ids of the m smallest entries under (value, id) ordering, sorted the
    same way; equivalent to a full sort followed by a cut."""
    n = len(values)
    m = min(m, n)
    if m == 0:
        return np.empty(0, dtype=np.int64)
    if m < n:
        kth = np.partition(values, m - 1)[m - 1]
        pool = np.flatnonzero(values <= kth)
    else:
        pool = np.arange(n)
    order = pool[np.lexsort((pool, values[pool]))]
    return order[:m]


def refine(query: Query, records: list[ObjectRecord], candidate_ids) -> None:
    """Compare candidates directly against the query with the true distance."""
    for i in candidate_ids:
        rec = records[int(i)]
        query.check_and_add(rec.id, query.distance_to(rec.payload), rec.label)


class NappIndex(Index):
    """napp: inverted file over each object's nearest-pivot neighborhood.

    An object is posted to the lists of its numPivotIndex closest pivots; a
    candidate must share at least numPivotSearch of the query's closest
    pivots.  Posting lists are chunked so per-chunk counters stay small.
    """

    def _create(self, params: ParamMap) -> None:
        self.num_pivot = params.get("numPivot", "int", required=True)
        self.num_pivot_index = params.get("numPivotIndex", "int",
                                          default=min(self.num_pivot, 8))
        self.chunk_index_size = params.get("chunkIndexSize", "int",
                                           default=DEFAULT_CHUNK_INDEX_SIZE)
        self.index_thread_qty = params.get("indexThreadQty", "int", default=1)
        inv_proc_alg = params.get("invProcAlg", "text", default="scan")
        if inv_proc_alg != "scan":
            raise ValueError(
                f"only the scan posting-merging algorithm is implemented, "
                f"got invProcAlg={inv_proc_alg!r}")
        pivot_file = params.get("pivotFile", "text", default=None)
        self.seed = params.get("seed", "int", default=0)
        if self.num_pivot_index > self.num_pivot:
            raise ValueError("numPivotIndex cannot exceed numPivot")
        self.pivots = sample_pivots(self.space, self.data, self.num_pivot,
                                    self.seed, pivot_file)
        closest = np.empty((len(self.data), self.num_pivot_index), dtype=np.int64)
        for rec in self.data:
            dists = pivot_distances(self.space, rec.payload, self.pivots)
            closest[rec.id] = closest_pivot_ids(dists, self.num_pivot_index)
        self._build_postings(closest)

    def _build_postings(self, closest: np.ndarray) -> None:
        """Chunked posting lists from each object's closest-pivot sets."""
        n = len(self.data)
        self.chunks = []
        for lo in range(0, n, self.chunk_index_size):
            hi = min(lo + self.chunk_index_size, n)
            lists: list[list[int]] = [[] for _ in range(self.num_pivot)]
            for obj in range(lo, hi):
                for piv in closest[obj]:
                    lists[int(piv)].append(obj - lo)
            self.chunks.append((lo, [np.asarray(l, dtype=np.int64) for l in lists]))
        self._closest = closest

    def reset_query_time_params(self) -> None:
        # the tuning guideline: about sqrt(numPivotIndex) shared pivots
        self.num_pivot_search = max(1, int(math.isqrt(self.num_pivot_index)))
        self.use_sort = False
        self.db_scan_frac = DEFAULT_DB_SCAN_FRAC

    def _apply_query_params(self, params: ParamMap) -> None:
        self.num_pivot_search = params.get("numPivotSearch", "int",
                                           default=self.num_pivot_search)
        self.use_sort = params.get("useSort", "bool", default=self.use_sort)
        self.db_scan_frac = params.get("dbScanFrac", "real", default=self.db_scan_frac)
        if self.num_pivot_search > self.num_pivot_index:
            raise ValueError("numPivotSearch cannot exceed numPivotIndex")

    def candidates(self, query: Query) -> np.ndarray:
        """Filtering stage only: global candidate ids (sorted ascending)."""
        dists = query_pivot_distances(query, self.pivots)
        q_closest = closest_pivot_ids(dists, self.num_pivot_index)
        found: list[np.ndarray] = []
        counters_all: list[np.ndarray] = []
        for lo, lists in self.chunks:
            size = min(self.chunk_index_size, len(self.data) - lo)
            counters = np.zeros(size, dtype=np.int32)
            for piv in q_closest:
                counters[lists[int(piv)]] += 1
            local = np.flatnonzero(counters >= self.num_pivot_search)
            found.append(local + lo)
            counters_all.append(counters[local])
        ids = np.concatenate(found) if found else np.empty(0, dtype=np.int64)
        self._last_counters = (np.concatenate(counters_all)
                               if counters_all else np.empty(0, dtype=np.int32))
        return ids

    def _run(self, query: Query) -> None:
        ids = self.candidates(query)
        if self.use_sort and len(ids):
            cap = scan_cap(self.db_scan_frac, len(self.data))
            # priority to candidates sharing more pivots; ties by smaller id
            order = np.lexsort((ids, -self._last_counters))
            ids = ids[order][:cap]
            ids = np.sort(ids)
        refine(query, self.data.records, ids)

    _search_knn = _run
    _search_range = _run

    def _save(self, path: str) -> None:
        meta = {
            "num_pivot": self.num_pivot,
            "num_pivot_index": self.num_pivot_index,
            "chunk_index_size": self.chunk_index_size,
            "seed": self.seed,
            "n": len(self.data),
            "pivot_lines": [self.space.format_payload(p) for p in self.pivots],
        }
        save_index_file(path, self.method_name, meta,
                        {"closest": self._closest})

    def _load(self, path: str) -> None:
        meta, arrays = load_index_file(path, self.method_name)
        if meta["n"] != len(self.data):
            raise ValueError(
                f"index was built over {meta['n']} objects, data set has {len(self.data)}")
        self.num_pivot = meta["num_pivot"]
        self.num_pivot_index = meta["num_pivot_index"]
        self.chunk_index_size = meta["chunk_index_size"]
        self.index_thread_qty = 1
        self.seed = meta["seed"]
        self.pivots = [self.space.parse_line(line)[1] for line in meta["pivot_lines"]]
        self._build_postings(arrays["closest"])

    def size_bytes(self) -> int:
        return 8 * self.num_pivot_index * len(self.data)

    def str_desc(self) -> str:
        return (f"napp: numPivot={self.num_pivot} "
                f"numPivotIndex={self.num_pivot_index}")


class _PrefixNode:
    __slots__ = ("children", "ids")

    def __init__(self):
        self.children: dict[int, _PrefixNode] = {}
        self.ids: list[int] = []


class PpIndex(Index):
    """pp-index: permutation prefixes in a tree; shorter prefixes widen the
    candidate pool until minCandidate objects are collected."""

    def _create(self, params: ParamMap) -> None:
        self.num_pivot = params.get("numPivot", "int", required=True)
        self.chunk_bucket = params.get("chunkBucket", "bool", default=True)
        self.seed = params.get("seed", "int", default=0)
        self.pivots = sample_pivots(self.space, self.data, self.num_pivot, self.seed)
        self.root = _PrefixNode()
        for rec in self.data:
            dists = pivot_distances(self.space, rec.payload, self.pivots)
            order = closest_pivot_ids(dists, self.num_pivot)
            node = self.root
            node.ids.append(rec.id)
            for piv in order:
                node = node.children.setdefault(int(piv), _PrefixNode())
                node.ids.append(rec.id)

    def reset_query_time_params(self) -> None:
        self.prefix_length = self.num_pivot
        self.min_candidate = 1

    def _apply_query_params(self, params: ParamMap) -> None:
        self.prefix_length = params.get("prefixLength", "int", default=self.prefix_length)
        self.min_candidate = params.get("minCandidate", "int", default=self.min_candidate)
        if self.prefix_length > self.num_pivot:
            raise ValueError("prefixLength cannot exceed numPivot")

    def candidates(self, query: Query) -> list[int]:
        dists = query_pivot_distances(query, self.pivots)
        order = closest_pivot_ids(dists, self.num_pivot)
        depth = self.prefix_length
        while True:
            node = self.root
            ok = True
            for piv in order[:depth]:
                child = node.children.get(int(piv))
                if child is None:
                    ok = False
                    break
                node = child
            if ok and (len(node.ids) >= self.min_candidate or depth == 0):
                return node.ids
            if depth == 0:
                return node.ids
            depth -= 1

    def _run(self, query: Query) -> None:
        refine(query, self.data.records, self.candidates(query))

    _search_knn = _run
    _search_range = _run

    def size_bytes(self) -> int:
        return 8 * self.num_pivot * len(self.data)

    def str_desc(self) -> str:
        return f"pp-index: numPivot={self.num_pivot}"


class MiFileIndex(Index):
    """mi-file: inverted file keyed by pivot with (position, id) postings.

    Searching accumulates partial L1 estimates between query and object
    permutations over position-bounded posting slices; the best estimates
    are refined with the true distance.
    """

    def _create(self, params: ParamMap) -> None:
        self.num_pivot = params.get("numPivot", "int", required=True)
        self.num_pivot_index = params.get("numPivotIndex", "int",
                                          default=min(self.num_pivot, 16))
        self.seed = params.get("seed", "int", default=0)
        if self.num_pivot_index > self.num_pivot:
            raise ValueError("numPivotIndex cannot exceed numPivot")
        self.pivots = sample_pivots(self.space, self.data, self.num_pivot, self.seed)
        postings: list[list[tuple[int, int]]] = [[] for _ in range(self.num_pivot)]
        for rec in self.data:
            dists = pivot_distances(self.space, rec.payload, self.pivots)
            perm = compute_permutation(dists)
            for piv in closest_pivot_ids(dists, self.num_pivot_index):
                postings[int(piv)].append((int(perm[piv]), rec.id))
        self.postings = []
        for lst in postings:
            lst.sort()
            pos = np.asarray([p for p, _ in lst], dtype=np.int64)
            ids = np.asarray([i for _, i in lst], dtype=np.int64)
            self.postings.append((pos, ids))

    def reset_query_time_params(self) -> None:
        self.num_pivot_search = min(self.num_pivot_index, 4)
        self.max_pos_diff = self.num_pivot
        self.db_scan_frac = DEFAULT_DB_SCAN_FRAC

    def _apply_query_params(self, params: ParamMap) -> None:
        self.num_pivot_search = params.get("numPivotSearch", "int",
                                           default=self.num_pivot_search)
        self.max_pos_diff = params.get("maxPosDiff", "int", default=self.max_pos_diff)
        self.db_scan_frac = params.get("dbScanFrac", "real", default=self.db_scan_frac)
        if self.num_pivot_search > self.num_pivot_index:
            raise ValueError("numPivotSearch cannot exceed numPivotIndex")

    def estimates(self, query: Query) -> dict[int, int]:
        """Partial L1 estimates, lazily initialized on first encounter."""
        dists = query_pivot_distances(query, self.pivots)
        perm = compute_permutation(dists)
        est: dict[int, int] = {}
        for piv in closest_pivot_ids(dists, self.num_pivot_search):
            pos_arr, ids_arr = self.postings[int(piv)]
            q_pos = int(perm[piv])
            lo = np.searchsorted(pos_arr, q_pos - self.max_pos_diff, side="left")
            hi = np.searchsorted(pos_arr, q_pos + self.max_pos_diff, side="right")
            for pos, obj in zip(pos_arr[lo:hi], ids_arr[lo:hi]):
                est[int(obj)] = est.get(int(obj), 0) + abs(int(pos) - q_pos)
        return est

    def _run(self, query: Query) -> None:
        est = self.estimates(query)
        if not est:
            return
        cap = scan_cap(self.db_scan_frac, len(self.data))
        ranked = sorted(est.items(), key=lambda kv: (kv[1], kv[0]))[:cap]
        refine(query, self.data.records, [obj for obj, _ in ranked])

    _search_knn = _run
    _search_range = _run

    def size_bytes(self) -> int:
        return 16 * self.num_pivot_index * len(self.data)

    def str_desc(self) -> str:
        return (f"mi-file: numPivot={self.num_pivot} "
                f"numPivotIndex={self.num_pivot_index}")


class PermIncSortBin(Index):
    """perm_incsort_bin: Hamming scan over binarized permutations with
    partial selection of the most promising fraction."""

    def _create(self, params: ParamMap) -> None:
        self.num_pivot = params.get("numPivot", "int", required=True)
        self.bin_threshold = params.get("binThreshold", "int",
                                        default=self.num_pivot // 2)
        self.seed = params.get("seed", "int", default=0)
        self.pivots = sample_pivots(self.space, self.data, self.num_pivot, self.seed)
        bits = np.empty((len(self.data), self.num_pivot), dtype=np.uint8)
        for rec in self.data:
            perm = object_permutation(self.space, rec.payload, self.pivots)
            bits[rec.id] = binarize_permutation(perm, self.bin_threshold)
        self.packed = np.packbits(bits, axis=1)

    def reset_query_time_params(self) -> None:
        self.db_scan_frac = DEFAULT_DB_SCAN_FRAC

    def _apply_query_params(self, params: ParamMap) -> None:
        self.db_scan_frac = params.get("dbScanFrac", "real", default=self.db_scan_frac)

    def _run(self, query: Query) -> None:
        dists = query_pivot_distances(query, self.pivots)
        q_bits = binarize_permutation(compute_permutation(dists), self.bin_threshold)
        q_packed = np.packbits(q_bits)
        hamming = np.bitwise_count(
            np.bitwise_xor(self.packed, q_packed)).sum(axis=1)
        cap = scan_cap(self.db_scan_frac, len(self.data))
        refine(query, self.data.records, select_by_value(hamming, cap))

    _search_knn = _run
    _search_range = _run

    def size_bytes(self) -> int:
        return self.packed.nbytes

    def str_desc(self) -> str:
        return (f"perm_incsort_bin: numPivot={self.num_pivot} "
                f"binThreshold={self.bin_threshold}")


register_method("napp", NappIndex)
register_method("pp-index", PpIndex)
register_method("mi-file", MiFileIndex)
register_method("perm_incsort_bin", PermIncSortBin)
