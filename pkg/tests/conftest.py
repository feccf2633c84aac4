import numpy as np
import pytest

from simsearch import DataSet, KnnQuery, ObjectRecord, RangeQuery
from simsearch.core import scan_records


def make_dataset(space, rows, labels=None):
    recs = []
    for i, row in enumerate(rows):
        label = int(labels[i]) if labels is not None else -1
        recs.append(ObjectRecord(i, space.make_payload(row), label))
    return DataSet(recs, space.name)


def make_query_record(space, row):
    return ObjectRecord(-1, space.make_payload(row))


def brute_knn(space, data, query_rec, k, orientation="left"):
    """Reference exact search: ids are fed in ascending order, so ties follow
    the smaller-id rule by construction."""
    q = KnnQuery(space, query_rec, k, orientation)
    scan_records(q, data.records, None)
    return q.results()


def brute_range(space, data, query_rec, r, orientation="left"):
    q = RangeQuery(space, query_rec, r, orientation)
    scan_records(q, data.records, None)
    return q.results()


def result_ids(query):
    return [i for _, i, _ in query.results()]


@pytest.fixture(scope="session")
def uniform_cloud():
    rng = np.random.default_rng(100)
    return rng.uniform(size=(600, 4))


@pytest.fixture(scope="session")
def simplex_cloud():
    rng = np.random.default_rng(101)
    v = rng.uniform(0.05, 1.0, size=(500, 5))
    return v / v.sum(axis=1, keepdims=True)
