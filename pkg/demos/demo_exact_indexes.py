"""Exact tree indexes against brute force: same answers, fewer computations."""
import numpy as np

from simsearch import (DataSet, KnnQuery, ObjectRecord, ParamMap,
                       create_method, create_space)

rng = np.random.default_rng(1)
space = create_space("l2")
rows = rng.uniform(size=(20_000, 8))
data = DataSet([ObjectRecord(i, space.make_payload(r))
                for i, r in enumerate(rows)], "l2")
queries = [ObjectRecord(-1, space.make_payload(rng.uniform(size=8)))
           for _ in range(50)]

setups = [
    ("seq_search", ""),
    ("vptree", "bucketSize=10,chunkBucket=1"),
    ("ghtree", "bucketSize=10,chunkBucket=1"),
    ("list_clusters", "useBucketSize=1,bucketSize=100"),
]

baseline = None
print(f"{'method':14s} {'mean distComp':>14s} {'vs brute':>9s}  exact?")
for method, params in setups:
    idx = create_method(method, space, data)
    idx.create_index(ParamMap.parse(params))
    total = 0
    results = []
    for qr in queries:
        q = KnnQuery(space, qr, 10)
        idx.search(q)
        total += q.dist_count
        results.append(q.results())
    if baseline is None:
        baseline = results
        base_count = total
    exact = results == baseline
    print(f"{method:14s} {total / len(queries):14.0f} {base_count / total:8.1f}x  {exact}")

print("\nThe vptree oracle trades recall for speed once stretched:")
idx = create_method("vptree", space, data)
idx.create_index(ParamMap.parse("bucketSize=10,chunkBucket=1"))
for alpha in (1.0, 2.0, 4.0, 8.0):
    idx.set_query_time_params(ParamMap.parse(f"alphaLeft={alpha},alphaRight={alpha}"))
    hits = total = 0
    for qr, truth in zip(queries, baseline):
        q = KnnQuery(space, qr, 10)
        idx.search(q)
        hits += len(set(i for _, i, _ in q.results())
                    & set(i for _, i, _ in truth))
        total += q.dist_count
    print(f"  alpha={alpha:3.0f}: recall {hits / (10 * len(queries)):.3f}  "
          f"mean distComp {total / len(queries):6.0f}")
