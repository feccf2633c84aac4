"""Proximity-graph methods: SW-graph and its layered successor HNSW.

Search is a best-first expansion over neighbor links: the frontier admits
only points closer than the ef-th closest point discovered so far, and stops
when the best queued point is farther than that.  Construction inserts
points one at a time, wiring each to the closest points found by searching
the partially built graph.

Neighbor distance evaluations are batched through the space kernel whenever
the space supports it; the ``skip_optimized_index`` parameter forces the
plain per-pair path, which returns identical results.
"""
from __future__ import annotations

import heapq
import math
import threading

import numpy as np

from ..core import Index, KnnQuery, Query, register_method
from ..params import ParamMap
from ._io import load_index_file, save_index_file

DEFAULT_EF_SEARCH = 100
DEFAULT_EF_CONSTRUCTION = 100


def sample_level(mult: float, rng: np.random.Generator) -> int:
    """Geometric level draw: floor(-ln(U) * mult) with U uniform on (0, 1]."""
    u = 1.0 - rng.random()
    return int(math.floor(-math.log(u) * mult))


def greedy_subsearch(eval_ids, adj, start: int, ef: int,
                     visited: bytearray) -> list[tuple[float, int]]:
    """Best-first expansion from ``start``; returns the ef closest discovered
    points as (distance, id) pairs sorted ascending, ties by id.

    ``eval_ids(ids) -> distances`` evaluates a batch of node ids;
    ``adj(v) -> iterable`` lists v's neighbors.
    """
    visited[start] = 1
    d0 = float(eval_ids([start])[0])
    results = [(-d0, -start)]          # max-heap over (dist, id)
    candidates = [(d0, start)]         # min-heap
    while candidates:
        d, v = heapq.heappop(candidates)
        if len(results) >= ef and (d, v) > (-results[0][0], -results[0][1]):
            break
        fresh = [u for u in adj(v) if not visited[u]]
        if not fresh:
            continue
        for u in fresh:
            visited[u] = 1
        dists = eval_ids(fresh)
        for u, du in zip(fresh, dists):
            du = float(du)
            if len(results) < ef:
                heapq.heappush(results, (-du, -u))
                heapq.heappush(candidates, (du, u))
            else:
                worst = (-results[0][0], -results[0][1])
                if (du, u) < worst:
                    heapq.heapreplace(results, (-du, -u))
                    heapq.heappush(candidates, (du, u))
    return sorted((-d, -i) for d, i in results)


class _GraphMethod(Index):
    """Shared plumbing: payload access, batch evaluators, per-node locks."""

    supports_range = False  # nearest-neighbor queries only

    def _init_common(self, params: ParamMap) -> None:
        self.seed = params.get("seed", "int", default=0)
        self.index_thread_qty = params.get("indexThreadQty", "int", default=1)
        self.skip_optimized = params.get("skip_optimized_index", "bool", default=False)
        self._payloads = [rec.payload for rec in self.data]
        self._labels = [rec.label for rec in self.data]
        self._block = None
        if self.space.supports_batch() and not self.skip_optimized and len(self.data):
            self._block = self.space.stack(self._payloads)

    # -- evaluators -----------------------------------------------------------
    def _index_eval(self, target_payload):
        """Batch distances from graph nodes to a new point (index time)."""
        if self._block is not None:
            take = self.space.take
            block = self._block
            batch = self.space._batch_distance
            return lambda ids: batch(take(block, ids), target_payload)
        dist = self.space.index_time_distance
        payloads = self._payloads
        return lambda ids: [dist(payloads[i], target_payload) for i in ids]

    def _query_eval(self, query: Query):
        """Batch distances from graph nodes to the query (counted)."""
        if self._block is not None and query.orientation == "left":
            take = self.space.take
            block = self._block
            return lambda ids: query.batch_distance_to(take(block, ids))
        payloads = self._payloads
        return lambda ids: [query.distance_to(payloads[i]) for i in ids]

    def _merge_into(self, query: Query, found: list[tuple[float, int]]) -> None:
        for d, i in found:
            query.check_and_add(i, d, self._labels[i])

    def _greedy_descent(self, eval_ids, adj, start: int) -> tuple[int, float]:
        """Pure hill descent to a local minimum (the ef=1 special case)."""
        cur = start
        cur_d = float(eval_ids([start])[0])
        while True:
            nbrs = list(adj(cur))
            if not nbrs:
                return cur, cur_d
            dists = eval_ids(nbrs)
            best, best_d = cur, cur_d
            for u, du in zip(nbrs, dists):
                du = float(du)
                if (du, u) < (best_d, best):
                    best, best_d = u, du
            if best == cur:
                return cur, cur_d
            cur, cur_d = best, best_d


class SwGraphIndex(_GraphMethod):
    """sw-graph: flat navigable small-world graph with undirected edges."""

    def _create(self, params: ParamMap) -> None:
        self._init_common(params)
        self.nn = params.get("NN", "int", default=10)
        self.ef_construction = params.get("efConstruction", "int",
                                          default=DEFAULT_EF_CONSTRUCTION)
        self.init_index_attempts = params.get("initIndexAttempts", "int", default=1)
        if self.nn < 1:
            raise ValueError("NN must be >= 1")
        n = len(self.data)
        self.adjacency: list[list[int]] = [[] for _ in range(n)]
        self._node_locks = [threading.Lock() for _ in range(n)]
        rng = np.random.default_rng(self.seed)
        if n <= 1:
            return
        if self.index_thread_qty <= 1:
            for i in range(1, n):
                starts = [int(rng.integers(i)) for _ in range(self.init_index_attempts)]
                self._insert(i, starts, locked=False)
        else:
            self._parallel_insert(rng)

    def _parallel_insert(self, rng: np.random.Generator) -> None:
        n = len(self.data)
        counter_lock = threading.Lock()
        next_id = [1]

        def worker():
            while True:
                with counter_lock:
                    i = next_id[0]
                    if i >= n:
                        return
                    next_id[0] += 1
                    starts = [int(rng.integers(i))
                              for _ in range(self.init_index_attempts)]
                self._insert(i, starts, locked=True)

        threads = [threading.Thread(target=worker)
                   for _ in range(self.index_thread_qty)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()

    def _adj_reader(self, locked: bool):
        if not locked:
            return lambda v: self.adjacency[v]

        def read(v):
            with self._node_locks[v]:
                return list(self.adjacency[v])
        return read

    def _insert(self, new_id: int, starts: list[int], locked: bool) -> None:
        eval_ids = self._index_eval(self._payloads[new_id])
        adj = self._adj_reader(locked)
        merged: dict[int, float] = {}
        for start in starts:
            visited = bytearray(len(self.data))
            for d, i in greedy_subsearch(eval_ids, adj, start,
                                         self.ef_construction, visited):
                merged[i] = d
        closest = sorted((d, i) for i, d in merged.items())[: self.nn]
        for _, u in closest:
            self._add_edge(new_id, u, locked)

    def _add_edge(self, a: int, b: int, locked: bool) -> None:
        for u, v in ((a, b), (b, a)):
            if locked:
                with self._node_locks[u]:
                    if v not in self.adjacency[u]:
                        self.adjacency[u].append(v)
            elif v not in self.adjacency[u]:
                self.adjacency[u].append(v)

    def reset_query_time_params(self) -> None:
        self.ef_search = DEFAULT_EF_SEARCH
        self.init_search_attempts = 1

    def _apply_query_params(self, params: ParamMap) -> None:
        self.ef_search = params.get("efSearch", "int", default=self.ef_search)
        self.init_search_attempts = params.get("initSearchAttempts", "int",
                                               default=self.init_search_attempts)

    def _search_knn(self, query: KnnQuery) -> None:
        n = len(self.data)
        if n == 0:
            return
        eval_ids = self._query_eval(query)
        adj = lambda v: self.adjacency[v]
        rng = np.random.default_rng((self.seed, max(query.query_obj.id, 0)))
        for _ in range(self.init_search_attempts):
            start = int(rng.integers(n))
            visited = bytearray(n)
            self._merge_into(query, greedy_subsearch(
                eval_ids, adj, start, self.ef_search, visited))

    def _save(self, path: str) -> None:
        counts = np.asarray([len(a) for a in self.adjacency], dtype=np.int64)
        flat = (np.concatenate([np.asarray(a, dtype=np.int64)
                                for a in self.adjacency if a])
                if counts.sum() else np.empty(0, dtype=np.int64))
        meta = {"n": len(self.data), "NN": self.nn,
                "efConstruction": self.ef_construction, "seed": self.seed}
        save_index_file(path, self.method_name, meta,
                        {"counts": counts, "flat": flat})

    def _load(self, path: str) -> None:
        meta, arrays = load_index_file(path, self.method_name)
        if meta["n"] != len(self.data):
            raise ValueError(
                f"index was built over {meta['n']} objects, data set has {len(self.data)}")
        self._init_common(ParamMap())
        self.nn = meta["NN"]
        self.ef_construction = meta["efConstruction"]
        self.seed = meta["seed"]
        self.init_index_attempts = 1
        bounds = np.cumsum(arrays["counts"])
        flat = arrays["flat"]
        self.adjacency = [list(map(int, part))
                          for part in np.split(flat, bounds[:-1])] if len(bounds) else []
        self._node_locks = [threading.Lock() for _ in range(len(self.data))]

    def size_bytes(self) -> int:
        return 8 * sum(len(a) for a in self.adjacency) + 16 * len(self.data)

    def str_desc(self) -> str:
        return f"sw-graph: NN={self.nn} efConstruction={self.ef_construction}"


def select_neighbors(candidates: list[tuple[float, int]], m: int,
                     heuristic: bool, pair_dist=None) -> list[tuple[float, int]]:
    """Neighbor pruning for graph wiring.

    ``candidates`` are (distance-to-base, id) sorted ascending.  Plain mode
    keeps the m closest.  The heuristic keeps a candidate only if it is
    closer to the base than to every neighbor already kept, then fills any
    remaining slots from the rejects in order.  ``pair_dist(a, b)`` supplies
    candidate-to-candidate distances.
    """
    if not heuristic or len(candidates) <= m:
        return candidates[:m]
    kept: list[tuple[float, int]] = []
    rejected: list[tuple[float, int]] = []
    for d, c in candidates:
        if len(kept) >= m:
            break
        if all(pair_dist(c, s) > d for _, s in kept):
            kept.append((d, c))
        else:
            rejected.append((d, c))
    for item in rejected:
        if len(kept) >= m:
            break
        kept.append(item)
    return kept


class HnswIndex(_GraphMethod):
    """hnsw: layered small-world graph with capped neighbor lists."""

    def _create(self, params: ParamMap) -> None:
        self._init_common(params)
        self.m = params.get("M", "int", default=16)
        self.max_m = params.get("maxM", "int", default=self.m)
        self.max_m0 = params.get("maxM0", "int", default=2 * self.m)
        self.ef_construction = params.get("efConstruction", "int",
                                          default=DEFAULT_EF_CONSTRUCTION)
        self.mult = params.get("mult", "real", default=1.0 / math.log(self.m))
        self.delaunay_type = params.get("delaunay_type", "int", default=1)
        # implementation selector accepted for command compatibility; the
        # generic algorithm answers every configuration identically
        params.get("searchMethod", "int", default=0)
        if self.delaunay_type not in (0, 1):
            raise ValueError("delaunay_type must be 0 or 1")
        n = len(self.data)
        self.levels = np.zeros(n, dtype=np.int64)
        self.layers: list[list[list[int]]] = [[] for _ in range(n)]
        self.entry_point = -1
        self.max_level = -1
        self._node_locks = [threading.Lock() for _ in range(n)]
        self._registry_lock = threading.Lock()
        rng = np.random.default_rng(self.seed)
        if n == 0:
            return
        if self.index_thread_qty <= 1:
            for i in range(n):
                self._insert(i, sample_level(self.mult, rng), locked=False)
        else:
            self._parallel_insert(rng)

    def _parallel_insert(self, rng: np.random.Generator) -> None:
        n = len(self.data)
        counter_lock = threading.Lock()
        next_id = [0]

        def worker():
            while True:
                with counter_lock:
                    i = next_id[0]
                    if i >= n:
                        return
                    next_id[0] += 1
                    level = sample_level(self.mult, rng)
                self._insert(i, level, locked=True)

        threads = [threading.Thread(target=worker)
                   for _ in range(self.index_thread_qty)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()

    def _adj_reader(self, level: int, locked: bool):
        layers = self.layers

        def read_plain(v):
            node = layers[v]
            return node[level] if level < len(node) else ()

        if not locked:
            return read_plain

        def read_locked(v):
            with self._node_locks[v]:
                node = layers[v]
                return list(node[level]) if level < len(node) else ()
        return read_locked

    def _pair_dist(self, a: int, b: int) -> float:
        return self.space.index_time_distance(self._payloads[a], self._payloads[b])

    def _pair_dists(self, ids: list[int], target: int) -> list[float]:
        """d(node_i, target) for several nodes, batched when possible."""
        if not ids:
            return []
        if self._block is not None:
            return [float(d) for d in self.space._batch_distance(
                self.space.take(self._block, ids), self._payloads[target])]
        return [self._pair_dist(i, target) for i in ids]

    def _select(self, candidates: list[tuple[float, int]], m: int,
                heuristic: bool) -> list[tuple[float, int]]:
        """select_neighbors with candidate-to-kept distances batched."""
        if not heuristic or len(candidates) <= m or self._block is None:
            return select_neighbors(candidates, m, heuristic, self._pair_dist)
        blocked = [False] * len(candidates)
        kept: list[tuple[float, int]] = []
        rejected: list[tuple[float, int]] = []
        ids = [c for _, c in candidates]
        dists = [d for d, _ in candidates]
        for pos in range(len(candidates)):
            if len(kept) >= m:
                break
            if blocked[pos]:
                rejected.append(candidates[pos])
                continue
            kept.append(candidates[pos])
            # one batch marks every remaining candidate the new point blocks
            rest = list(range(pos + 1, len(candidates)))
            if rest:
                to_s = self._pair_dists([ids[i] for i in rest], ids[pos])
                for i, d_cs in zip(rest, to_s):
                    if d_cs <= dists[i]:
                        blocked[i] = True
        for item in rejected:
            if len(kept) >= m:
                break
            kept.append(item)
        # rejects beyond the scanned prefix (loop ended early on m kept)
        return kept[:m]

    def _insert(self, new_id: int, level: int, locked: bool) -> None:
        with self._registry_lock:
            self.layers[new_id] = [[] for _ in range(level + 1)]
            self.levels[new_id] = level
            if self.entry_point < 0:
                self.entry_point = new_id
                self.max_level = level
                return
            entry, top = self.entry_point, self.max_level

        eval_ids = self._index_eval(self._payloads[new_id])
        cur = entry
        for lev in range(top, level, -1):
            cur, _ = self._greedy_descent(eval_ids, self._adj_reader(lev, locked), cur)
        for lev in range(min(level, top), -1, -1):
            visited = bytearray(len(self.data))
            found = greedy_subsearch(eval_ids, self._adj_reader(lev, locked),
                                     cur, self.ef_construction, visited)
            found = [(d, i) for d, i in found if i != new_id]
            neighbors = self._select(found, self.m, self.delaunay_type == 1)
            cap = self.max_m0 if lev == 0 else self.max_m
            for _, u in neighbors:
                self._link(new_id, u, lev, cap, locked)
            if found:
                cur = found[0][1]
        with self._registry_lock:
            if level > self.max_level:
                self.max_level = level
                self.entry_point = new_id

    def _link(self, new_id: int, u: int, lev: int, cap: int, locked: bool) -> None:
        def append(v, w):
            node = self.layers[v]
            if lev < len(node) and w not in node[lev]:
                node[lev].append(w)
                if len(node[lev]) > cap:
                    self._shrink(v, lev, cap)

        if locked:
            with self._node_locks[new_id]:
                append(new_id, u)
            with self._node_locks[u]:
                append(u, new_id)
        else:
            append(new_id, u)
            append(u, new_id)

    def _shrink(self, v: int, lev: int, cap: int) -> None:
        nbrs = self.layers[v][lev]
        ranked = sorted(zip(self._pair_dists(nbrs, v), nbrs))
        kept = self._select(ranked, cap, self.delaunay_type == 1)
        self.layers[v][lev] = [u for _, u in kept]

    def reset_query_time_params(self) -> None:
        self.ef_search = DEFAULT_EF_SEARCH

    def _apply_query_params(self, params: ParamMap) -> None:
        self.ef_search = params.get("efSearch", "int", default=self.ef_search)

    def _search_knn(self, query: KnnQuery) -> None:
        if self.entry_point < 0:
            return
        eval_ids = self._query_eval(query)
        cur = self.entry_point
        for lev in range(self.max_level, 0, -1):
            cur, _ = self._greedy_descent(eval_ids, self._adj_reader(lev, False), cur)
        ef = max(self.ef_search, query.k)
        visited = bytearray(len(self.data))
        found = greedy_subsearch(eval_ids, self._adj_reader(0, False),
                                 cur, ef, visited)
        self._merge_into(query, found)

    def _save(self, path: str) -> None:
        counts = []
        chunks = []
        for node in self.layers:
            for lst in node:
                counts.append(len(lst))
                if lst:
                    chunks.append(np.asarray(lst, dtype=np.int64))
        meta = {"n": len(self.data), "M": self.m, "maxM": self.max_m,
                "maxM0": self.max_m0, "efConstruction": self.ef_construction,
                "mult": self.mult, "delaunay_type": self.delaunay_type,
                "entry_point": self.entry_point, "max_level": self.max_level,
                "seed": self.seed}
        save_index_file(path, self.method_name, meta, {
            "levels": self.levels,
            "counts": np.asarray(counts, dtype=np.int64),
            "flat": (np.concatenate(chunks) if chunks
                     else np.empty(0, dtype=np.int64)),
        })

    def _load(self, path: str) -> None:
        meta, arrays = load_index_file(path, self.method_name)
        if meta["n"] != len(self.data):
            raise ValueError(
                f"index was built over {meta['n']} objects, data set has {len(self.data)}")
        self._init_common(ParamMap())
        self.m = meta["M"]
        self.max_m = meta["maxM"]
        self.max_m0 = meta["maxM0"]
        self.ef_construction = meta["efConstruction"]
        self.mult = meta["mult"]
        self.delaunay_type = meta["delaunay_type"]
        self.entry_point = meta["entry_point"]
        self.max_level = meta["max_level"]
        self.seed = meta["seed"]
        self.levels = arrays["levels"]
        counts = arrays["counts"]
        flat = arrays["flat"]
        self.layers = []
        pos = 0
        ci = 0
        for node_id in range(meta["n"]):
            node = []
            for _ in range(int(self.levels[node_id]) + 1):
                c = int(counts[ci])
                ci += 1
                node.append(list(map(int, flat[pos:pos + c])))
                pos += c
            self.layers.append(node)
        self._node_locks = [threading.Lock() for _ in range(len(self.data))]
        self._registry_lock = threading.Lock()

    def size_bytes(self) -> int:
        edges = sum(len(lst) for node in self.layers for lst in node)
        return 8 * edges + 24 * len(self.data)

    def str_desc(self) -> str:
        return (f"hnsw: M={self.m} maxM0={self.max_m0} "
                f"efConstruction={self.ef_construction} "
                f"delaunay_type={self.delaunay_type}")


register_method("sw-graph", SwGraphIndex)
register_method("hnsw", HnswIndex)
