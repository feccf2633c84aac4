#!/usr/bin/env python3
"""Equivalence fixtures: data plus expected k-NN results from the core engine.

Prints JSON with the exact payload text rows both sides consume, so the
wrapper's answers can be compared field by field against the engine's.
"""
import argparse
import json
import sys

import numpy as np

from simsearch import (DataSet, KnnQuery, ObjectRecord, ParamMap,
                       create_method, create_space)


def dense_fixture():
    rng = np.random.default_rng(42)
    points = [" ".join(repr(float(v)) for v in rng.uniform(size=8))
              for _ in range(1000)]
    queries = [" ".join(repr(float(v)) for v in rng.uniform(size=8))
               for _ in range(20)]
    return {
        "spaceType": "l2", "distType": "float", "method": "hnsw",
        "createParams": "M=10,efConstruction=200,seed=0",
        "queryParams": "efSearch=200", "k": 10,
        "points": points, "queries": queries,
    }


def string_fixture():
    rng = np.random.default_rng(7)
    alphabet = np.array(list("acgt"))
    def word():
        return "".join(rng.choice(alphabet, size=rng.integers(5, 16)))
    return {
        "spaceType": "leven", "distType": "int", "method": "sw-graph",
        "createParams": "NN=10,efConstruction=100,seed=0",
        "queryParams": "efSearch=300", "k": 5,
        "points": [word() for _ in range(300)],
        "queries": [word() for _ in range(15)],
    }


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("kind", choices=["l2", "leven"])
    args = parser.parse_args()
    fixture = dense_fixture() if args.kind == "l2" else string_fixture()

    space = create_space(fixture["spaceType"], fixture["distType"])
    records = []
    for i, text in enumerate(fixture["points"]):
        label, payload = space.parse_line(text)
        records.append(ObjectRecord(i, payload, label))
    data = DataSet(records, space.name)
    index = create_method(fixture["method"], space, data)
    index.create_index(ParamMap.parse(fixture["createParams"]))
    index.set_query_time_params(ParamMap.parse(fixture["queryParams"]))

    expected = []
    for text in fixture["queries"]:
        _, payload = space.parse_line(text)
        q = KnnQuery(space, ObjectRecord(-1, payload), fixture["k"])
        index.search(q)
        rows = q.results()
        expected.append({"ids": [i for _, i, _ in rows],
                         "distances": [d for d, _, _ in rows]})
    fixture["expected"] = expected
    json.dump(fixture, sys.stdout)


if __name__ == "__main__":
    main()
