"""Filter-and-refine: cheap surrogates pick candidates, true distances decide."""
import numpy as np

from simsearch import (DataSet, KnnQuery, ObjectRecord, ParamMap,
                       create_method, create_space)
from simsearch.core import scan_records

rng = np.random.default_rng(3)
space = create_space("l2")
rows = rng.uniform(size=(5_000, 16))
data = DataSet([ObjectRecord(i, space.make_payload(r))
                for i, r in enumerate(rows)], "l2")
queries = [ObjectRecord(-1, space.make_payload(rng.uniform(size=16)))
           for _ in range(50)]
block = space.stack([r.payload for r in data])


def true_nn(qr):
    q = KnnQuery(space, qr, 1)
    scan_records(q, data.records, block)
    return [i for _, i, _ in q.results()]


truths = [true_nn(qr) for qr in queries]


def measure(idx, qparams):
    idx.set_query_time_params(ParamMap.parse(qparams))
    hits = cost = 0
    for qr, t in zip(queries, truths):
        q = KnnQuery(space, qr, 1)
        idx.search(q)
        hits += int([i for _, i, _ in q.results()] == t)
        cost += q.dist_count
    return hits / len(queries), cost / len(queries)


print("== NAPP: shared-pivot filtering ==")
napp = create_method("napp", space, data)
napp.create_index(ParamMap.parse("numPivot=128,numPivotIndex=16"))
for nps in (2, 4, 8):
    recall, cost = measure(napp, f"numPivotSearch={nps}")
    print(f"  numPivotSearch={nps}: 1-NN recall {recall:.2f}, mean distComp {cost:6.0f}")

print("\n== Projection scan: candidate fraction drives recall ==")
proj = create_method("proj_incsort", space, data)
proj.create_index(ParamMap.parse("projType=rand,projDim=8"))
for frac in (0.01, 0.05, 0.2):
    recall, cost = measure(proj, f"dbScanFrac={frac}")
    print(f"  dbScanFrac={frac:5.2f}: 1-NN recall {recall:.2f}, mean distComp {cost:6.0f}")

print("\n== Binarized permutations under Hamming ==")
binperm = create_method("perm_incsort_bin", space, data)
binperm.create_index(ParamMap.parse("numPivot=64"))
for frac in (0.02, 0.1):
    recall, cost = measure(binperm, f"dbScanFrac={frac}")
    print(f"  dbScanFrac={frac:5.2f}: 1-NN recall {recall:.2f}, mean distComp {cost:6.0f}")

print("\n== OMEDRANK: rank aggregation over coordinates ==")
om = create_method("omedrank", space, data)
om.create_index(ParamMap.parse("projType=rand,numPivot=8"))
for frac in (0.02, 0.1):
    recall, cost = measure(om, f"minFreq=0.5,dbScanFrac={frac}")
    print(f"  dbScanFrac={frac:5.2f}: 1-NN recall {recall:.2f}, mean distComp {cost:6.0f}")
