"""Proximity graphs: recall versus cost as the search frontier widens."""
import numpy as np

from simsearch import (DataSet, KnnQuery, ObjectRecord, ParamMap,
                       create_method, create_space)
from simsearch.core import scan_records

rng = np.random.default_rng(2)
space = create_space("l2")
rows = rng.uniform(size=(10_000, 8))
data = DataSet([ObjectRecord(i, space.make_payload(r))
                for i, r in enumerate(rows)], "l2")
queries = [ObjectRecord(-1, space.make_payload(rng.uniform(size=8)))
           for _ in range(50)]
block = space.stack([r.payload for r in data])


def truth(qr, k=10):
    q = KnnQuery(space, qr, k)
    scan_records(q, data.records, block)
    return set(i for _, i, _ in q.results())


truths = [truth(qr) for qr in queries]

for method, create in [("sw-graph", "NN=10,efConstruction=100"),
                       ("hnsw", "M=10,efConstruction=100")]:
    print(f"== {method} ({create}) ==")
    idx = create_method(method, space, data)
    idx.create_index(ParamMap.parse(create))
    for ef in (10, 50, 200, 800):
        idx.set_query_time_params(ParamMap.parse(f"efSearch={ef}"))
        hits = cost = 0
        for qr, t in zip(queries, truths):
            q = KnnQuery(space, qr, 10)
            idx.search(q)
            hits += len(set(i for _, i, _ in q.results()) & t)
            cost += q.dist_count
        print(f"  efSearch={ef:4d}: recall@10 {hits / (10 * len(queries)):.3f}  "
              f"mean distComp {cost / len(queries):6.0f} "
              f"({10_000 * len(queries) / cost:.1f}x fewer than brute force)")
    print()
