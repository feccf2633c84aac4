"""Query objects, the index lifecycle contract, and the method factory.

Queries proxy every distance evaluation so that the exact number of space
distance computations triggered by a search is observable.  Index
construction uses the space's index-time entry point instead; search-phase
code receives only the query object.
"""
from __future__ import annotations

import heapq

import numpy as np

from .data import DataSet, ObjectRecord
from .params import ParamMap
from .spaces.base import Space

INF = float("inf")


class UnsupportedQueryError(RuntimeError):
    """The method does not answer this query type."""


class UnsupportedPersistenceError(RuntimeError):
    """The method does not implement save/load."""


class IndexFormatError(RuntimeError):
    """A saved index file is damaged or belongs to a different method."""


class Query:
    """Distance-proxying evaluation context shared by kNN and range queries.

    ``orientation`` selects the argument slot of the data object in a
    non-symmetric distance: ``left`` evaluates d(data, query), ``right``
    evaluates d(query, data).
    """

    def __init__(self, space: Space, query_obj: ObjectRecord,
                 orientation: str = "left"):
        if orientation not in ("left", "right"):
            raise ValueError(f"orientation must be left or right, got {orientation!r}")
        self.space = space
        self.query_obj = query_obj
        self.orientation = orientation
        self.dist_count = 0

    # -- proxied evaluations -------------------------------------------------
    def distance(self, a, b) -> float:
        """Free-form distance between two payloads; counts one evaluation."""
        self.dist_count += 1
        return self.space._distance(a, b)

    def distance_to(self, data_payload) -> float:
        """Distance between a data payload and the query, honoring orientation."""
        self.dist_count += 1
        if self.orientation == "left":
            return self.space._distance(data_payload, self.query_obj.payload)
        return self.space._distance(self.query_obj.payload, data_payload)

    def batch_distance_to(self, block) -> np.ndarray:
        """Batch variant of ``distance_to`` over a space-stacked block.

        Counts one evaluation per row.  Only valid for left orientation;
        right-oriented batch scans go through ``rq`` space variants whose
        kernels already swap arguments.
        """
        if self.orientation != "left":
            raise RuntimeError("batch evaluation is defined for left queries only")
        out = self.space._batch_distance(block, self.query_obj.payload)
        self.dist_count += len(out)
        return out

    def radius(self) -> float:
        raise NotImplementedError

    def check_and_add(self, obj_id: int, dist: float, label: int = -1) -> bool:
        raise NotImplementedError


class KnnQuery(Query):
    """k nearest neighbors; the current radius shrinks as results accumulate.

    Ties in distance are broken toward the smaller object id: the heap orders
    candidates by (distance, id) and the k-th such pair defines the radius.
    """

    def __init__(self, space: Space, query_obj: ObjectRecord, k: int,
                 orientation: str = "left"):
        super().__init__(space, query_obj, orientation)
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        self.k = k
        self._heap: list[tuple[float, int, int]] = []  # (-dist, -id, label)
        self._members: set[int] = set()

    def radius(self) -> float:
        if len(self._heap) < self.k:
            return INF
        return -self._heap[0][0]

    def check_and_add(self, obj_id: int, dist: float, label: int = -1) -> bool:
        if obj_id in self._members:
            return False
        if len(self._heap) < self.k:
            heapq.heappush(self._heap, (-dist, -obj_id, label))
            self._members.add(obj_id)
            return True
        worst_dist, worst_negid, _ = self._heap[0]
        if (dist, obj_id) < (-worst_dist, -worst_negid):
            self._members.discard(-worst_negid)
            heapq.heapreplace(self._heap, (-dist, -obj_id, label))
            self._members.add(obj_id)
            return True
        return False

    def results(self) -> list[tuple[float, int, int]]:
        """(distance, id, label) triples sorted by (distance, id)."""
        return sorted((-d, -i, lab) for d, i, lab in self._heap)


class RangeQuery(Query):
    """All objects within a fixed radius r (boundary inclusive)."""

    def __init__(self, space: Space, query_obj: ObjectRecord, r: float,
                 orientation: str = "left"):
        super().__init__(space, query_obj, orientation)
        self.r = r
        self._results: list[tuple[float, int, int]] = []
        self._members: set[int] = set()

    def radius(self) -> float:
        return self.r

    def check_and_add(self, obj_id: int, dist: float, label: int = -1) -> bool:
        if dist <= self.r and obj_id not in self._members:
            self._results.append((dist, obj_id, label))
            self._members.add(obj_id)
            return True
        return False

    def results(self) -> list[tuple[float, int, int]]:
        return sorted(self._results)


def scan_records(query: Query, records: list[ObjectRecord],
                 block=None) -> None:
    """Compare every record against the query, batched when possible.

    ``block`` is an optional pre-stacked payload block matching ``records``
    element-wise (see ``Space.stack``).  The batched path pre-filters
    candidates that provably cannot enter the result (distance above the
    current radius, or outside the k smallest (distance, id) pairs for a
    fresh kNN query) before handing them to ``check_and_add``; the final
    result is identical to the sequential feed.
    """
    if block is not None and query.orientation == "left":
        dists = query.batch_distance_to(block)
        n = len(records)
        if isinstance(query, KnnQuery) and not query._heap and n > query.k:
            ids = np.fromiter((r.id for r in records), dtype=np.int64, count=n)
            for pos in np.lexsort((ids, dists))[: query.k]:
                rec = records[pos]
                query.check_and_add(rec.id, float(dists[pos]), rec.label)
            return
        radius = query.radius()
        if radius != INF:
            for pos in np.flatnonzero(dists <= radius):
                rec = records[pos]
                query.check_and_add(rec.id, float(dists[pos]), rec.label)
            return
        for rec, dist in zip(records, dists):
            query.check_and_add(rec.id, float(dist), rec.label)
        return
    for rec in records:
        query.check_and_add(rec.id, query.distance_to(rec.payload), rec.label)


class Index:
    """Built search structure bound to one space and one data set."""

    method_name: str = ""
    supports_range = True

    def __init__(self, space: Space, data: DataSet):
        self.space = space
        self.data = data
        self._built = False

    # -- lifecycle ------------------------------------------------------------
    def create_index(self, params: ParamMap | None = None) -> None:
        params = params if params is not None else ParamMap()
        self._create(params)
        params.check_unused()
        self._built = True
        self.reset_query_time_params()

    def load_index(self, path: str) -> None:
        self._load(path)
        self._built = True
        self.reset_query_time_params()

    def save_index(self, path: str) -> None:
        self._require_built()
        self._save(path)

    def set_query_time_params(self, params: ParamMap | None = None) -> None:
        """Reset all query-time parameters to defaults, then apply ``params``."""
        self.reset_query_time_params()
        if params is not None:
            self._apply_query_params(params)
            params.check_unused()

    # -- hooks ----------------------------------------------------------------
    def _create(self, params: ParamMap) -> None:
        raise NotImplementedError

    def _save(self, path: str) -> None:
        raise UnsupportedPersistenceError(
            f"method {self.method_name!r} does not support saving")

    def _load(self, path: str) -> None:
        raise UnsupportedPersistenceError(
            f"method {self.method_name!r} does not support loading")

    def reset_query_time_params(self) -> None:
        pass

    def _apply_query_params(self, params: ParamMap) -> None:
        pass

    # -- search ---------------------------------------------------------------
    def search(self, query: Query) -> Query:
        self._require_built()
        if isinstance(query, KnnQuery):
            self._search_knn(query)
        elif isinstance(query, RangeQuery):
            if not self.supports_range:
                raise UnsupportedQueryError(
                    f"method {self.method_name!r} supports only the nearest-neighbor search")
            self._search_range(query)
        else:
            raise TypeError(f"unknown query type {type(query).__name__}")
        return query

    def _search_knn(self, query: KnnQuery) -> None:
        raise NotImplementedError

    def _search_range(self, query: RangeQuery) -> None:
        raise NotImplementedError

    def _require_built(self) -> None:
        if not self._built:
            raise RuntimeError("index used before create_index/load_index")

    # -- reporting -------------------------------------------------------------
    def size_bytes(self) -> int:
        """Rough memory footprint of the index structure (data excluded)."""
        return 0

    def str_desc(self) -> str:
        return self.method_name


_METHOD_REGISTRY: dict[str, type[Index]] = {}


def register_method(name: str, cls: type[Index]) -> None:
    if name in _METHOD_REGISTRY:
        raise ValueError(f"method {name!r} already registered")
    cls.method_name = name
    _METHOD_REGISTRY[name] = cls


def registered_methods() -> list[str]:
    return sorted(_METHOD_REGISTRY)


def create_method(name: str, space: Space, data: DataSet) -> Index:
    if name not in _METHOD_REGISTRY:
        raise ValueError(f"unknown method {name!r}; known: {registered_methods()}")
    return _METHOD_REGISTRY[name](space, data)
