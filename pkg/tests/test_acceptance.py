"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s``.  Every tolerance is
asserted at its stated value; runtime budgets are enforced in-test.
"""
import math
import random
import time

import numpy as np
import pytest

from simsearch import (KnnQuery, ParamMap, create_method, create_space)
from simsearch.bench import SanityCheckError, sanity_check
from simsearch.bench.cli import build_parser, config_from_args
from simsearch.bench.runner import run_experiment
from simsearch.spaces import levenshtein_dp

from conftest import make_dataset, make_query_record
from test_metric_axioms import (find_lp_half_witness, find_normleven_witness,
                                random_string, triangle_holds)

N_POINTS = 10_000
DIM = 8


def report(name: str, ok: bool, detail: str) -> None:
    print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def simplex_file(tmp_path_factory):
    """10K x 8 strictly positive rows: usable both under l2 and under the KL
    family like the sample benchmark data, with r=0.1 returning small sets."""
    rng = np.random.default_rng(2024)
    rows = rng.uniform(0.05, 1.0, size=(N_POINTS, DIM))
    path = tmp_path_factory.mktemp("acc") / "final8_10K.txt"
    with open(path, "w") as fh:
        for r in rows:
            fh.write(" ".join(repr(float(v)) for v in r) + "\n")
    return str(path)


def run_cli(argv):
    args = build_parser().parse_args(argv)
    return run_experiment(config_from_args(args))


class TestAcceptance:
    def test_01_exactness(self, simplex_file, tmp_path):
        """vptree/ghtree/list_clusters/bbtree/seq_search: recall 1.0 and
        numCloser 0 on 5 bootstrap splits x 100 queries, k in {1,10}, r=0.1."""
        t0 = time.perf_counter()
        common = ["--distType", "float", "--testSetQty", "5",
                  "--maxNumQuery", "100", "--knn", "1,10", "--range", "0.1",
                  "--dataFile", simplex_file]
        setups = [
            ("seq_search", "l2", "", str(tmp_path / "gs_l2")),
            ("vptree", "l2", "bucketSize=10,chunkBucket=1", str(tmp_path / "gs_l2")),
            ("ghtree", "l2", "bucketSize=10,chunkBucket=1", str(tmp_path / "gs_l2")),
            ("list_clusters", "l2", "useBucketSize=1,bucketSize=100",
             str(tmp_path / "gs_l2")),
            # bucketSize=100 keeps the bisection-bound searches within the
            # runtime budget; exactness does not depend on the bucket size
            ("bbtree", "kldivgenfast", "bucketSize=100,chunkBucket=1",
             str(tmp_path / "gs_kl")),
        ]
        failures = []
        for method, space_type, create, cache in setups:
            argv = common + ["--spaceType", space_type, "--method", method,
                             "--cachePrefixGS", cache]
            if create:
                argv += ["--createIndex", create]
            rows = run_cli(argv)
            for suffix, result_rows in rows.items():
                row = result_rows[0]
                if row.metric("Recall") != 1.0 or row.metric("NumCloser") != 0.0:
                    failures.append(
                        f"{method}/{suffix}: recall={row.metric('Recall')} "
                        f"numCloser={row.metric('NumCloser')}")
        elapsed = time.perf_counter() - t0
        ok = not failures and elapsed < 120.0
        report("exactness", ok,
               f"5 exact methods, recall=1.0/numCloser=0 on 15 runs, "
               f"{elapsed:.0f}s (budget 120s)"
               + (f"; failures: {failures}" if failures else ""))

    def test_02_js_and_kl_approximations(self):
        """JS approx vs slow: mean rel err <= 1e-5, max <= 1e-4 over 1e5
        stochastic 128-dim pairs; KL/IS fast vs slow <= 1e-9 relative."""
        t0 = time.perf_counter()
        rng = np.random.default_rng(7)
        slow = create_space("jsdivslow", "float")
        approx = create_space("jsdivfastapprox", "float")
        n_pairs = 100_000
        x = rng.uniform(size=(n_pairs, 128))
        x[rng.random(size=x.shape) < 0.5] = 0.0
        x[x.sum(axis=1) == 0, 0] = 1.0
        y = rng.uniform(size=(n_pairs, 128))
        y[rng.random(size=y.shape) < 0.5] = 0.0
        y[y.sum(axis=1) == 0, 0] = 1.0
        x = x / x.sum(axis=1, keepdims=True)
        y = y / y.sum(axis=1, keepdims=True)
        rel = np.empty(n_pairs)
        for i in range(n_pairs):
            s = slow._distance(slow.make_payload(x[i]), slow.make_payload(y[i]))
            a = approx._distance(approx.make_payload(x[i]), approx.make_payload(y[i]))
            rel[i] = abs(a - s) / s if s > 0 else 0.0
        js_mean, js_max = float(rel.mean()), float(rel.max())

        kl_max = 0.0
        for slow_name, fast_name in [("kldivgenslow", "kldivgenfast"),
                                     ("itakurasaitoslow", "itakurasaitofast")]:
            sp_s = create_space(slow_name, "double")
            sp_f = create_space(fast_name, "double")
            for _ in range(10_000):
                xv = rng.uniform(0.01, 1.0, size=32)
                yv = rng.uniform(0.01, 1.0, size=32)
                s = sp_s._distance(sp_s.make_payload(xv), sp_s.make_payload(yv))
                f = sp_f._distance(sp_f.make_payload(xv), sp_f.make_payload(yv))
                kl_max = max(kl_max, abs(f - s) / max(abs(s), 1.0))
        elapsed = time.perf_counter() - t0
        ok = js_mean <= 1e-5 and js_max <= 1e-4 and kl_max <= 1e-9 and elapsed < 30.0
        report("js-kl-approximation", ok,
               f"JS mean rel err {js_mean:.2e} (<=1e-5), max {js_max:.2e} "
               f"(<=1e-4); KL/IS fast-vs-slow max {kl_max:.2e} (<=1e-9); "
               f"{elapsed:.0f}s (budget 30s)")

    def test_03_graph_methods(self, simplex_file, tmp_path):
        """hnsw and sw-graph reach recall >= 0.95 (tolerance -0.03) at 10-NN
        with efSearch=200 and imprDistComp >= 2."""
        t0 = time.perf_counter()
        outcomes = {}
        for method, create in [("hnsw", "M=10,efConstruction=200"),
                               ("sw-graph", "NN=10,efConstruction=200")]:
            rows = run_cli([
                "--distType", "float", "--spaceType", "l2",
                "--testSetQty", "1", "--maxNumQuery", "100",
                "--knn", "10", "--dataFile", simplex_file,
                "--method", method, "--createIndex", create,
                "--queryTimeParams", "efSearch=200",
                "--cachePrefixGS", str(tmp_path / f"gs_{method}"),
            ])
            row = rows["K=10"][0]
            outcomes[method] = (row.metric("Recall"), row.metric("ImprDistComp"))
        elapsed = time.perf_counter() - t0
        ok = all(r >= 0.92 and i >= 2.0 for r, i in outcomes.values()) \
            and elapsed < 180.0
        report("graph-methods", ok,
               "; ".join(f"{m}: recall {r:.3f} (>=0.95 tol 0.03), "
                         f"imprDistComp {i:.1f} (>=2)"
                         for m, (r, i) in outcomes.items())
               + f"; {elapsed:.0f}s (budget 180s)")

    def test_04_napp_oracle_equivalence(self):
        """NAPP candidate sets equal the set-intersection-count oracle on
        1K points / 100 queries, numPivotSearch in {1,4,8}."""
        t0 = time.perf_counter()
        space = create_space("l2", "double")
        rng = np.random.default_rng(11)
        data = make_dataset(space, rng.uniform(size=(1000, DIM)))
        queries = [make_query_record(space, rng.uniform(size=DIM))
                   for _ in range(100)]
        idx = create_method("napp", space, data)
        idx.create_index(ParamMap.parse(
            "numPivot=32,numPivotIndex=8,chunkIndexSize=256"))
        from simsearch.methods.permutation import (closest_pivot_ids,
                                                   query_pivot_distances)

        mismatches = 0
        for nps in (1, 4, 8):
            idx.set_query_time_params(ParamMap.parse(f"numPivotSearch={nps}"))
            for qr in queries:
                got = sorted(int(i) for i in idx.candidates(KnnQuery(space, qr, 1)))
                probe = KnnQuery(space, qr, 1)
                q_closest = set(int(i) for i in closest_pivot_ids(
                    query_pivot_distances(probe, idx.pivots), 8))
                expected = [rec.id for rec in data
                            if len(set(int(p) for p in idx._closest[rec.id])
                                   & q_closest) >= nps]
                mismatches += int(got != expected)
        elapsed = time.perf_counter() - t0
        ok = mismatches == 0 and elapsed < 30.0
        report("napp-oracle", ok,
               f"300 query evaluations, {mismatches} mismatches; "
               f"{elapsed:.0f}s (budget 30s)")

    def test_05_metric_axiom_suite(self):
        """Triangle inequality on 1e4 random triples for every metric-tagged
        space; violation witnesses for lp(p=0.5) and normleven."""
        t0 = time.perf_counter()
        triples = 10_000
        rng = np.random.default_rng(13)
        bad = []

        def audit_vectors(descr, positive):
            space = create_space(descr, "double")
            for _ in range(triples):
                vecs = (rng.uniform(0.05, 1.0, size=6) if positive
                        else rng.normal(size=6) for _ in range(3))
                a, b, c = (space.make_payload(v) for v in vecs)
                if not triangle_holds(space, a, b, c):
                    bad.append(descr)
                    return

        for descr, positive in [("l1", False), ("l2", False), ("linf", False),
                                ("lp:p=2.5", False), ("angulardist", False),
                                ("jsmetrfastapprox", True)]:
            audit_vectors(descr, positive)

        leven = create_space("leven", "int")
        srng = random.Random(14)
        for _ in range(triples):
            a, b, c = (random_string(srng, max_len=10) for _ in range(3))
            if leven._distance(a, c) > leven._distance(a, b) + leven._distance(b, c):
                bad.append("leven")
                break
        bits = create_space("bit_hamming", "int")
        for _ in range(triples):
            a, b, c = (bits.make_payload(rng.integers(0, 2, size=32))
                       for _ in range(3))
            if bits._distance(a, c) > bits._distance(a, b) + bits._distance(b, c):
                bad.append("bit_hamming")
                break
        sqfd = create_space("sqfd_gaussian_func:alpha=1")
        for _ in range(triples):
            sigs = []
            for _ in range(3):
                n = int(rng.integers(1, 4))
                w = rng.uniform(0.2, 1.0, size=n)
                sigs.append(sqfd.make_payload(rng.normal(size=(n, 7)), w / w.sum()))
            if not triangle_holds(sqfd, *sigs, slack=1e-7):
                bad.append("sqfd")
                break

        lp_witness = find_lp_half_witness(trials=100_000)
        nl_witness = find_normleven_witness(trials=100_000)
        elapsed = time.perf_counter() - t0
        ok = not bad and lp_witness is not None and nl_witness is not None
        report("metric-axioms", ok,
               f"9 metric spaces clean over {triples} triples"
               + (f" (violations: {bad})" if bad else "")
               + f"; lp(0.5) witness {'found' if lp_witness else 'MISSING'}, "
               f"normleven witness {'found' if nl_witness else 'MISSING'}; "
               f"{elapsed:.0f}s")

    def test_06_gold_standard_machinery(self, simplex_file, tmp_path):
        """Cache round-trip reproduces metrics bit-identically; a corrupted
        distance trips the sanity check; meta mismatch rejects the cache."""
        t0 = time.perf_counter()
        argv = ["-s", "l2", "-i", simplex_file, "-D", "2000", "-b", "2",
                "-Q", "50", "-k", "10", "-m", "vptree", "-c", "bucketSize=20",
                "-g", str(tmp_path / "gold")]
        first = run_cli(argv)
        second = run_cli(argv)  # loads the cache
        identical = all(
            first["K=10"][0].metrics[m][0] == second["K=10"][0].metrics[m][0]
            for m in ("Recall", "RelPosError", "NumCloser", "ClassAccuracy",
                      "DistComp"))

        from simsearch.bench.gold import ENTRY_DTYPE

        gold = np.zeros(3, dtype=ENTRY_DTYPE)
        gold["id"] = [5, 6, 7]
        gold["dist"] = [0.5, 0.6, 0.7]
        tripped = False
        try:
            sanity_check([(0.4, 9, -1)], gold)
        except SanityCheckError:
            tripped = True

        rejected = False
        try:
            run_cli(["-s", "l2", "-i", simplex_file, "-D", "2000", "-b", "2",
                     "-Q", "60", "-k", "10", "-m", "seq_search",
                     "-g", str(tmp_path / "gold")])
        except Exception as exc:
            rejected = "mismatch" in str(exc)
        elapsed = time.perf_counter() - t0
        ok = identical and tripped and rejected
        report("gold-standard-machinery", ok,
               f"cache round-trip identical={identical}, corrupted fixture "
               f"tripped={tripped}, meta mismatch rejected={rejected}; "
               f"{elapsed:.0f}s")

    def test_07_persistence_roundtrips(self, tmp_path):
        """Save/load for hnsw, sw-graph, napp: identical results over 100
        queries."""
        t0 = time.perf_counter()
        space = create_space("l2", "double")
        rng = np.random.default_rng(17)
        data = make_dataset(space, rng.uniform(size=(2000, DIM)))
        queries = [make_query_record(space, rng.uniform(size=DIM))
                   for _ in range(100)]
        setups = [("hnsw", "M=8,efConstruction=100", "efSearch=100"),
                  ("sw-graph", "NN=8,efConstruction=100", "efSearch=100"),
                  ("napp", "numPivot=64,numPivotIndex=8", "numPivotSearch=2")]
        failures = []
        for method, create, qparams in setups:
            idx = create_method(method, space, data)
            idx.create_index(ParamMap.parse(create))
            path = str(tmp_path / f"{method}.idx")
            idx.save_index(path)
            loaded = create_method(method, space, data)
            loaded.load_index(path)
            idx.set_query_time_params(ParamMap.parse(qparams))
            loaded.set_query_time_params(ParamMap.parse(qparams))
            for qr in queries:
                q1, q2 = KnnQuery(space, qr, 10), KnnQuery(space, qr, 10)
                idx.search(q1)
                loaded.search(q2)
                if q1.results() != q2.results():
                    failures.append(method)
                    break
        elapsed = time.perf_counter() - t0
        ok = not failures
        report("persistence", ok,
               f"hnsw/sw-graph/napp round-trips identical over 100 queries"
               + (f" (failures: {failures})" if failures else "")
               + f"; {elapsed:.0f}s")

    def test_08_vptree_autotune(self, simplex_file, tmp_path):
        """Auto-tuned vptree (tuneK=1, desiredRecall=0.9) reaches measured
        recall in [0.85, 1.0] on held-out queries."""
        t0 = time.perf_counter()
        rows = run_cli([
            "--distType", "float", "--spaceType", "l2",
            "--testSetQty", "5", "--maxNumQuery", "100",
            "--knn", "1", "--range", "0.1",
            "--dataFile", simplex_file,
            "--method", "vptree",
            "--createIndex", "tuneK=1,desiredRecall=0.9,bucketSize=10,chunkBucket=1",
            "--cachePrefixGS", str(tmp_path / "gs_tune"),
        ])
        recall = rows["K=1"][0].metric("Recall")
        elapsed = time.perf_counter() - t0
        ok = 0.85 <= recall <= 1.0 and elapsed < 180.0
        report("vptree-autotune", ok,
               f"held-out 1-NN recall {recall:.3f} in [0.85, 1.0]; "
               f"{elapsed:.0f}s (budget 180s)")

    def test_09_levenshtein_oracle(self):
        """DP equals the exponential-recursion oracle on 1e4 sampled pairs of
        length <= 8 over a 3-symbol alphabet."""
        t0 = time.perf_counter()

        def oracle(a, b):
            if not a:
                return len(b)
            if not b:
                return len(a)
            return min(oracle(a[:-1], b) + 1,
                       oracle(a, b[:-1]) + 1,
                       oracle(a[:-1], b[:-1]) + (a[-1] != b[-1]))

        rng = random.Random(19)
        mismatches = 0
        for _ in range(10_000):
            a = "".join(rng.choice("abc") for _ in range(rng.randrange(0, 9)))
            b = "".join(rng.choice("abc") for _ in range(rng.randrange(0, 9)))
            if levenshtein_dp(a, b) != oracle(a, b):
                mismatches += 1
        elapsed = time.perf_counter() - t0
        ok = mismatches == 0
        report("levenshtein-oracle", ok,
               f"10000 pairs, {mismatches} mismatches; {elapsed:.0f}s")
