"""Gold-standard answers: exact rankings, their disk cache, and sanity checks.

Per query we keep the ``resultSize * maxCacheGSRelativeQty`` closest entries
(ids, distances, labels), enough depth for rank-approximation metrics.  The
cache is a text meta file (key=value lines) plus a little-endian binary
entries file; the meta must match the current run or the cache is rejected.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from ..core import KnnQuery, scan_records
from ..data import DataSet, ObjectRecord
from ..spaces.base import Space

ENTRY_DTYPE = np.dtype([("id", "<u4"), ("dist", "<f8"), ("label", "<i4")])
META_SUFFIX = ".gold_meta"
BIN_SUFFIX = ".gold_bin"
SANITY_REL_TOL = 1e-6


class GoldCacheMismatchError(RuntimeError):
    """Cache file belongs to a different experimental setup."""


class SanityCheckError(RuntimeError):
    """An approximate result is closer than the exact one at the same rank."""


@dataclass(frozen=True)
class QueryType:
    kind: str   # "knn" | "range"
    value: float

    @property
    def suffix(self) -> str:
        if self.kind == "knn":
            return f"K={int(self.value)}"
        return f"R={self.value:g}"

    def __str__(self) -> str:
        return self.suffix


@dataclass
class GoldStandard:
    """Exact ranked answers for one (split, query type) pair."""

    query_type: QueryType
    entries: list[np.ndarray] = field(default_factory=list)  # ENTRY_DTYPE arrays

    def result_size(self, qi: int) -> int:
        """Size of the exact answer set for query ``qi``."""
        arr = self.entries[qi]
        if self.query_type.kind == "knn":
            return min(int(self.query_type.value), len(arr))
        return int(np.searchsorted(arr["dist"], self.query_type.value, side="right"))


def exact_ranking(space: Space, data: DataSet, query_rec: ObjectRecord,
                  depth: int, orientation: str = "left",
                  block=None) -> np.ndarray:
    """Brute-force top-``depth`` ranking as an ENTRY_DTYPE array."""
    q = KnnQuery(space, query_rec, max(1, depth), orientation)
    if block is None and space.supports_batch() and len(data):
        block = space.stack([r.payload for r in data])
    scan_records(q, data.records, block)
    rows = q.results()
    out = np.empty(len(rows), dtype=ENTRY_DTYPE)
    for i, (d, obj_id, label) in enumerate(rows):
        out[i] = (obj_id, d, label)
    return out


def compute_gold_standard(space: Space, indexable: DataSet,
                          queries: list[ObjectRecord], query_type: QueryType,
                          coef: int = 10, workers: int = 1,
                          orientation: str = "left") -> GoldStandard:
    """Exact scans for every query; entry depth is resultSize * coef."""
    block = (space.stack([r.payload for r in indexable])
             if space.supports_batch() and len(indexable) else None)

    def one(query_rec: ObjectRecord) -> np.ndarray:
        if query_type.kind == "knn":
            depth = int(query_type.value) * coef
        else:
            if block is not None and orientation == "left":
                dists = np.asarray(space._batch_distance(block, query_rec.payload))
            else:
                dists = np.asarray([space._distance(r.payload, query_rec.payload)
                                    if orientation == "left" else
                                    space._distance(query_rec.payload, r.payload)
                                    for r in indexable])
            result_size = int((dists <= query_type.value).sum())
            depth = max(1, result_size) * coef
        depth = min(depth, len(indexable))
        return exact_ranking(space, indexable, query_rec, depth, orientation,
                             block=block)

    gs = GoldStandard(query_type)
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            gs.entries = list(pool.map(one, queries))
    else:
        gs.entries = [one(q) for q in queries]
    return gs


def sanity_check(approx_results: list[tuple[float, int, int]],
                 gold: np.ndarray) -> None:
    """Rank-aligned comparison: an approximate method must not return points
    closer than the exact answers (a distance-function or cache mismatch)."""
    depth = min(len(approx_results), len(gold))
    for rank in range(depth):
        apr_dist, apr_id, _ = approx_results[rank]
        exact_dist = float(gold["dist"][rank])
        slack = SANITY_REL_TOL * max(abs(exact_dist), abs(apr_dist), 1e-30)
        if apr_dist < exact_dist - slack:
            raise SanityCheckError(
                "the approximate query should not return objects that are "
                "closer to the query than objects returned by (exact) "
                "sequential searching! "
                f"Approx: {apr_dist:.6g} id = {apr_id} "
                f"Exact: {exact_dist:.6g} id = {int(gold['id'][rank])}")


# -- cache ---------------------------------------------------------------------

def _query_types_key(query_types: list[QueryType]) -> str:
    return ",".join(qt.suffix for qt in query_types)


def save_gold_cache(prefix: str, meta: dict, splits_queries: list[list[int]],
                    gold: dict[tuple[int, str], GoldStandard]) -> None:
    """Persist meta (text) and the per-query entry arrays (binary)."""
    lines = [f"{k}={v}" for k, v in meta.items()]
    for si, qids in enumerate(splits_queries):
        lines.append(f"split{si}_queries={','.join(map(str, qids))}")
    with open(prefix + META_SUFFIX, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    with open(prefix + BIN_SUFFIX, "wb") as fh:
        for si in range(len(splits_queries)):
            for qt_suffix in meta["queryTypes"].split(","):
                gs = gold[(si, qt_suffix)]
                fh.write(struct.pack("<I", len(gs.entries)))
                for arr in gs.entries:
                    fh.write(struct.pack("<I", len(arr)))
                    fh.write(arr.tobytes())


def load_gold_cache(prefix: str, expected_meta: dict,
                    query_types: list[QueryType]
                    ) -> tuple[list[list[int]], dict[tuple[int, str], GoldStandard]]:
    """Load and validate a cache; raises GoldCacheMismatchError on meta drift."""
    meta: dict[str, str] = {}
    with open(prefix + META_SUFFIX, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line:
                key, _, value = line.partition("=")
                meta[key] = value
    for key, expected in expected_meta.items():
        got = meta.get(key)
        if got != str(expected):
            raise GoldCacheMismatchError(
                f"gold standard cache mismatch for {key!r}: cache has {got!r}, "
                f"the current run expects {expected!r}")
    n_splits = int(meta["testSetQty"]) if int(meta["testSetQty"]) > 0 else 1
    splits_queries = []
    for si in range(n_splits):
        raw = meta.get(f"split{si}_queries", "")
        splits_queries.append([int(x) for x in raw.split(",") if x != ""])
    by_suffix = {qt.suffix: qt for qt in query_types}
    gold: dict[tuple[int, str], GoldStandard] = {}
    with open(prefix + BIN_SUFFIX, "rb") as fh:
        for si in range(n_splits):
            for suffix in meta["queryTypes"].split(","):
                (nq,) = struct.unpack("<I", fh.read(4))
                gs = GoldStandard(by_suffix[suffix])
                for _ in range(nq):
                    (cnt,) = struct.unpack("<I", fh.read(4))
                    buf = fh.read(cnt * ENTRY_DTYPE.itemsize)
                    gs.entries.append(np.frombuffer(buf, dtype=ENTRY_DTYPE))
                gold[(si, suffix)] = gs
    return splits_queries, gold
