"""Reference sequential search and the multi-copy meta method."""
from __future__ import annotations

from ..core import Index, Query, create_method, register_method, scan_records
from ..params import ParamMap


class SeqSearch(Index):
    """Exact brute force: every object is compared against the query.

    Serves as the effectiveness gold standard and the efficiency baseline.
    """

    def _create(self, params: ParamMap) -> None:
        self._block = None
        if self.space.supports_batch() and len(self.data):
            self._block = self.space.stack([r.payload for r in self.data])

    def _search(self, query: Query) -> None:
        scan_records(query, self.data.records, self._block)

    _search_knn = _search
    _search_range = _search


class MultIndex(Index):
    """Several independently seeded copies of one method, results merged.

    Useful for randomized indexes: searching all copies and merging raises
    recall at proportional cost.  Results are de-duplicated by object id.
    """

    def _create(self, params: ParamMap) -> None:
        method_name = params.get("methodName", "text", required=True)
        index_qty = params.get("indexQty", "int", default=1)
        seed = params.get("seed", "int", default=0)
        if index_qty < 1:
            raise ValueError(f"indexQty must be >= 1, got {index_qty}")
        inner = params.remaining_dict()
        self.copies = []
        for i in range(index_qty):
            copy_params = dict(inner)
            copy_params["seed"] = str(seed + i)
            idx = create_method(method_name, self.space, self.data)
            idx.create_index(ParamMap(copy_params))
            self.copies.append(idx)
        params.claim_all()
        self.supports_range = all(c.supports_range for c in self.copies)

    def reset_query_time_params(self) -> None:
        for idx in getattr(self, "copies", []):
            idx.reset_query_time_params()

    def _apply_query_params(self, params: ParamMap) -> None:
        for idx in self.copies:
            idx._apply_query_params(params)

    def _search(self, query: Query) -> None:
        for idx in self.copies:
            idx.search(query)

    _search_knn = _search
    _search_range = _search

    def size_bytes(self) -> int:
        return sum(idx.size_bytes() for idx in self.copies)

    def str_desc(self) -> str:
        inner = self.copies[0].method_name if self.copies else "?"
        return f"mult_index over {len(self.copies)} x {inner}"


register_method("seq_search", SeqSearch)
register_method("mult_index", MultIndex)
