"""The benchmarking workflow: bootstrap splits, gold standards, timed query
execution, metric aggregation, and report emission."""
from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..core import Index, KnnQuery, RangeQuery, create_method
from ..data import DataSet, ObjectRecord, read_dataset
from ..params import ParamMap
from ..spaces.base import Space, create_space
from .gold import (GoldStandard, QueryType, compute_gold_standard,
                   load_gold_cache, sanity_check, save_gold_cache)
from .metrics import (aggregate_fixed_effect, aggregate_geometric,
                      aggregate_mean_of_means, effectiveness)
from .reports import ResultRow, emit_reports

log = logging.getLogger("simsearch.bench")

WARMUP_QUERIES = 5


@dataclass
class ExperimentConfig:
    space_type: str
    data_file: str
    method: str
    dist_type: str = "float"
    max_num_data: int = 0
    query_file: str | None = None
    max_num_query: int = 0
    test_set_qty: int = 0
    knn: list[int] = field(default_factory=list)
    range: list[float] = field(default_factory=list)
    create_index: str = ""
    query_time_params: list[str] = field(default_factory=list)
    thread_test_qty: int = 1
    cache_prefix_gs: str | None = None
    max_cache_gs_relative_qty: int = 10
    out_file_prefix: str | None = None
    append_to_res_file: bool = False
    load_index: str | None = None
    save_index: str | None = None
    log_file: str | None = None
    seed: int = 0

    def query_types(self) -> list[QueryType]:
        out = [QueryType("knn", float(k)) for k in self.knn]
        out += [QueryType("range", float(r)) for r in self.range]
        return out

    def validate(self) -> None:
        if not self.query_types():
            raise ValueError("specify at least one of --knn / --range")
        if self.query_file is None:
            if self.max_num_query <= 0:
                raise ValueError("bootstrapping requires a positive --maxNumQuery")
            if self.test_set_qty < 1:
                raise ValueError("bootstrapping requires --testSetQty >= 1")
            if (self.save_index or self.load_index) and not self.cache_prefix_gs:
                raise ValueError(
                    "saving/loading indices in bootstrap mode is possible only "
                    "if gold standard caching is used (--cachePrefixGS)")


def bootstrap_split(n: int, test_set_qty: int, max_num_query: int,
                    seed: int = 0) -> list[tuple[list[int], list[int]]]:
    """Random disjoint (indexable ids, query ids) pairs, one per split."""
    if max_num_query >= n:
        raise ValueError(f"maxNumQuery={max_num_query} must be below the "
                         f"data set size {n}")
    rng = np.random.default_rng(seed)
    splits = []
    for _ in range(test_set_qty):
        picked = rng.choice(n, size=max_num_query, replace=False)
        queries = sorted(int(i) for i in picked)
        q_set = set(queries)
        indexable = [i for i in range(n) if i not in q_set]
        splits.append((indexable, queries))
    return splits


@dataclass
class _SplitRun:
    indexable: DataSet
    queries: list[ObjectRecord]
    gold: dict[str, GoldStandard]          # query-type suffix -> gold
    baseline: dict[str, tuple[float, float]]  # suffix -> (mean time ms, mean dist)


def _make_query(space: Space, rec: ObjectRecord, qt: QueryType):
    if qt.kind == "knn":
        return KnnQuery(space, rec, int(qt.value))
    return RangeQuery(space, rec, qt.value)


def _run_queries(index: Index, space: Space, queries: list[ObjectRecord],
                 qt: QueryType, workers: int):
    """Timed pass over all queries; returns (results, times ms, dist counts)."""

    def one(rec: ObjectRecord):
        q = _make_query(space, rec, qt)
        t0 = time.perf_counter()
        index.search(q)
        elapsed = (time.perf_counter() - t0) * 1000.0
        return q.results(), elapsed, q.dist_count

    for rec in queries[:WARMUP_QUERIES]:
        index.search(_make_query(space, rec, qt))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(one, queries))
    else:
        out = [one(rec) for rec in queries]
    results = [r for r, _, _ in out]
    times = np.asarray([t for _, t, _ in out])
    dists = np.asarray([d for _, _, d in out], dtype=np.float64)
    return results, times, dists


def _index_path(base: str, split: int, many: bool) -> str:
    return f"{base}.split{split}" if many else base


def run_experiment(config: ExperimentConfig) -> dict[str, list[ResultRow]]:
    """Run the full benchmark; returns rows per query-type suffix and writes
    report files when an output prefix is configured."""
    config.validate()
    if config.log_file:
        logging.basicConfig(filename=config.log_file, level=logging.INFO,
                            force=True)
    space = create_space(config.space_type, config.dist_type)
    data = read_dataset(config.data_file, space, config.max_num_data)
    query_types = config.query_types()
    coef = config.max_cache_gs_relative_qty

    cache_meta = {
        "version": 1,
        "dataFile": config.data_file,
        "maxNumData": config.max_num_data,
        "spaceType": config.space_type,
        "distType": config.dist_type,
        "queryFile": config.query_file or "-",
        "maxNumQuery": config.max_num_query,
        "testSetQty": config.test_set_qty,
        "dataQty": len(data),
        "coef": coef,
        "queryTypes": ",".join(qt.suffix for qt in query_types),
    }

    # -- splits and gold standards (possibly cached) -------------------------
    gold_all: dict[tuple[int, str], GoldStandard] | None = None
    if config.query_file is not None:
        query_data = read_dataset(config.query_file, space, config.max_num_query)
        split_ids: list[tuple[list[int], list[int]] | None] = [None]
        n_splits = 1
    else:
        n_splits = config.test_set_qty
        split_ids = None

    cache_loaded = False
    if config.cache_prefix_gs:
        meta_path = config.cache_prefix_gs + ".gold_meta"
        if os.path.exists(meta_path):
            log.info("loading gold standard cache %s", config.cache_prefix_gs)
            splits_queries, gold_all = load_gold_cache(
                config.cache_prefix_gs, cache_meta, query_types)
            cache_loaded = True
            if config.query_file is None:
                split_ids = []
                for qids in splits_queries:
                    q_set = set(qids)
                    split_ids.append(([i for i in range(len(data))
                                       if i not in q_set], qids))

    if config.query_file is None and split_ids is None:
        split_ids = bootstrap_split(len(data), n_splits,
                                    config.max_num_query, config.seed)

    runs: list[_SplitRun] = []
    gold_to_save: dict[tuple[int, str], GoldStandard] = {}
    for si in range(n_splits):
        if config.query_file is not None:
            indexable = data
            queries = [ObjectRecord(i, r.payload, r.label)
                       for i, r in enumerate(query_data)]
            query_orig_ids: list[int] = []
        else:
            idx_ids, q_ids = split_ids[si]
            indexable = data.subset(idx_ids)
            queries = [ObjectRecord(qi, data[i].payload, data[i].label)
                       for qi, i in enumerate(q_ids)]
            query_orig_ids = list(q_ids)
        gold: dict[str, GoldStandard] = {}
        for qt in query_types:
            if cache_loaded:
                gold[qt.suffix] = gold_all[(si, qt.suffix)]
            else:
                log.info("computing gold standard split=%d %s", si, qt.suffix)
                gs = compute_gold_standard(space, indexable, queries, qt,
                                           coef, config.thread_test_qty)
                gold[qt.suffix] = gs
                gold_to_save[(si, qt.suffix)] = gs
        runs.append(_SplitRun(indexable, queries, gold, baseline={}))

    if config.cache_prefix_gs and not cache_loaded:
        queries_per_split = ([[]] if config.query_file is not None
                             else [list(split_ids[si][1]) for si in range(n_splits)])
        save_gold_cache(config.cache_prefix_gs, cache_meta,
                        queries_per_split, gold_to_save)
        log.info("saved gold standard cache %s", config.cache_prefix_gs)

    # -- brute-force baseline (same thread count) -----------------------------
    for run in runs:
        baseline_index = create_method("seq_search", space, run.indexable)
        baseline_index.create_index()
        for qt in query_types:
            _, times, dists = _run_queries(baseline_index, space, run.queries,
                                           qt, config.thread_test_qty)
            run.baseline[qt.suffix] = (float(times.mean()), float(dists.mean()))

    # -- build or load the method under test ----------------------------------
    indexes: list[Index] = []
    many = n_splits > 1
    for si, run in enumerate(runs):
        index = create_method(config.method, space, run.indexable)
        load_path = (_index_path(config.load_index, si, many)
                     if config.load_index else None)
        if load_path and os.path.exists(load_path):
            log.info("loading index from %s", load_path)
            index.load_index(load_path)
        else:
            index.create_index(ParamMap.parse(config.create_index))
        if config.save_index:
            save_path = _index_path(config.save_index, si, many)
            if os.path.exists(save_path):
                log.info("index file %s already exists; not overwritten", save_path)
            else:
                index.save_index(save_path)
        indexes.append(index)

    # -- timed runs per query type and query-time parameter set ---------------
    param_sets = config.query_time_params or [""]
    out: dict[str, list[ResultRow]] = {qt.suffix: [] for qt in query_types}
    for qt in query_types:
        for param_text in param_sets:
            split_metrics = {
                "Recall": [], "ClassAccuracy": [], "RelPosError": [],
                "NumCloser": [], "ImprEfficiency": [], "ImprDistComp": [],
            }
            time_samples, dist_samples = [], []
            clamped = False
            for si, (run, index) in enumerate(zip(runs, indexes)):
                index.set_query_time_params(ParamMap.parse(param_text))
                results, times, dists = _run_queries(
                    index, space, run.queries, qt, config.thread_test_qty)
                gs = run.gold[qt.suffix]
                per_query = []
                for qi, res in enumerate(results):
                    sanity_check(res, gs.entries[qi])
                    eff = effectiveness(res, gs.entries[qi], qt,
                                        run.queries[qi].label)
                    per_query.append(eff)
                    clamped = clamped or eff.clamped
                split_metrics["Recall"].append(
                    float(np.mean([e.recall for e in per_query])))
                split_metrics["ClassAccuracy"].append(
                    float(np.mean([e.class_accuracy for e in per_query])))
                closer = [e.num_closer for e in per_query if e.num_closer is not None]
                split_metrics["NumCloser"].append(
                    float(np.mean(closer)) if closer else 0.0)
                rel = [e.rel_pos_error for e in per_query
                       if e.rel_pos_error is not None]
                split_metrics["RelPosError"].append(
                    float(np.exp(np.mean(np.log(rel)))) if rel else 1.0)
                base_time, base_dist = run.baseline[qt.suffix]
                split_metrics["ImprEfficiency"].append(
                    base_time / float(times.mean()) if times.mean() > 0 else 0.0)
                split_metrics["ImprDistComp"].append(
                    base_dist / float(dists.mean()) if dists.mean() > 0 else 0.0)
                time_samples.append(times)
                dist_samples.append(dists)

            data_bytes = _payload_bytes(runs[0].indexable)
            mem_mb = (data_bytes + indexes[0].size_bytes()) / (1024.0 * 1024.0)
            row = ResultRow(
                method_name=config.method,
                method_desc=indexes[0].str_desc(),
                index_params=config.create_index,
                query_params=param_text,
                num_data=len(runs[0].indexable),
                query_qty=len(runs[0].queries),
                mem_mb=mem_mb,
                clamped_positions=clamped,
                metrics={
                    "Recall": aggregate_mean_of_means(split_metrics["Recall"]),
                    "ClassAccuracy": aggregate_mean_of_means(
                        split_metrics["ClassAccuracy"]),
                    "RelPosError": aggregate_geometric(
                        split_metrics["RelPosError"]),
                    "NumCloser": aggregate_mean_of_means(
                        split_metrics["NumCloser"]),
                    "QueryTime": aggregate_fixed_effect(time_samples),
                    "DistComp": aggregate_fixed_effect(dist_samples),
                    "ImprEfficiency": aggregate_mean_of_means(
                        split_metrics["ImprEfficiency"]),
                    "ImprDistComp": aggregate_mean_of_means(
                        split_metrics["ImprDistComp"]),
                })
            out[qt.suffix].append(row)

    if config.out_file_prefix:
        for qt in query_types:
            emit_reports(config.out_file_prefix, qt.suffix, out[qt.suffix],
                         config.append_to_res_file)
    return out


def _payload_bytes(data: DataSet) -> int:
    total = 0
    for rec in data:
        payload = rec.payload
        nbytes = getattr(payload, "nbytes", None)
        if nbytes is not None:
            total += int(nbytes)
        elif isinstance(payload, str):
            total += len(payload)
        else:
            for attr in ("values", "ids", "packed", "centroids", "weights", "logs"):
                part = getattr(payload, attr, None)
                if part is not None:
                    total += int(getattr(part, "nbytes", 0))
    return total
