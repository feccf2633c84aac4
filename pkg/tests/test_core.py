import numpy as np
import pytest

from simsearch import (DataSet, KnnQuery, ObjectRecord, ParamError, ParamMap,
                       RangeQuery, UnsupportedPersistenceError, create_method,
                       create_space)
from simsearch.core import scan_records


def make_data(space, rows, labels=None):
    recs = []
    for i, row in enumerate(rows):
        label = labels[i] if labels is not None else -1
        recs.append(ObjectRecord(i, space.make_payload(row), label))
    return DataSet(recs, space.name)


@pytest.fixture
def l2():
    return create_space("l2", "double")


class TestQueryProxy:
    def test_counter_increments(self, l2):
        q = KnnQuery(l2, ObjectRecord(-1, l2.make_payload([0.0, 0.0])), k=1)
        a = l2.make_payload([1.0, 0.0])
        q.distance_to(a)
        q.distance_to(a)
        assert q.dist_count == 2

    def test_left_right_orientation(self):
        space = create_space("kldivgenfast", "double")
        data = space.make_payload([0.2, 0.8])
        query_payload = space.make_payload([0.6, 0.4])
        left = KnnQuery(space, ObjectRecord(-1, query_payload), k=1, orientation="left")
        right = KnnQuery(space, ObjectRecord(-1, query_payload), k=1, orientation="right")
        assert left.distance_to(data) == space._distance(data, query_payload)
        assert right.distance_to(data) == space._distance(query_payload, data)

    def test_symmetric_space_orientation_equal(self, l2):
        payload = l2.make_payload([1.0, 2.0])
        data = l2.make_payload([3.0, 4.0])
        left = KnnQuery(l2, ObjectRecord(-1, payload), k=1, orientation="left")
        right = KnnQuery(l2, ObjectRecord(-1, payload), k=1, orientation="right")
        assert left.distance_to(data) == right.distance_to(data)

    def test_batch_counts_per_row(self, l2):
        q = KnnQuery(l2, ObjectRecord(-1, l2.make_payload([0.0, 0.0])), k=1)
        block = l2.stack([l2.make_payload([float(i), 0.0]) for i in range(5)])
        q.batch_distance_to(block)
        assert q.dist_count == 5


class TestCheckAndAdd:
    def test_knn_heap_simulation(self, l2):
        q = KnnQuery(l2, ObjectRecord(-1, l2.make_payload([0.0])), k=2)
        q.check_and_add(0, 5.0)
        q.check_and_add(1, 3.0)
        q.check_and_add(2, 4.0)
        assert [d for d, _, _ in q.results()] == [3.0, 4.0]
        assert q.radius() == 4.0

    def test_radius_infinite_until_full(self, l2):
        q = KnnQuery(l2, ObjectRecord(-1, l2.make_payload([0.0])), k=3)
        q.check_and_add(0, 1.0)
        assert q.radius() == float("inf")

    def test_range_boundary_inclusive(self, l2):
        q = RangeQuery(l2, ObjectRecord(-1, l2.make_payload([0.0])), r=1.0)
        assert q.check_and_add(0, 1.0) is True
        assert q.check_and_add(1, 1.0000001) is False

    def test_tie_breaks_toward_smaller_id(self, l2):
        q = KnnQuery(l2, ObjectRecord(-1, l2.make_payload([0.0])), k=1)
        q.check_and_add(9, 2.0)
        q.check_and_add(2, 2.0)
        assert [i for _, i, _ in q.results()] == [2]

    def test_duplicate_ids_ignored(self, l2):
        q = KnnQuery(l2, ObjectRecord(-1, l2.make_payload([0.0])), k=3)
        q.check_and_add(0, 1.0)
        assert q.check_and_add(0, 1.0) is False
        assert len(q.results()) == 1


class TestIndexContract:
    def test_seq_search_counts_all(self, l2):
        data = make_data(l2, np.random.default_rng(0).normal(size=(37, 3)))
        idx = create_method("seq_search", l2, data)
        idx.create_index()
        q = KnnQuery(l2, ObjectRecord(-1, l2.make_payload([0.0, 0.0, 0.0])), k=5)
        idx.search(q)
        assert q.dist_count == 37

    def test_search_before_create_raises(self, l2):
        idx = create_method("seq_search", l2, make_data(l2, [[0.0]]))
        q = KnnQuery(l2, ObjectRecord(-1, l2.make_payload([0.0])), k=1)
        with pytest.raises(RuntimeError):
            idx.search(q)

    def test_unsupported_save(self, l2):
        idx = create_method("seq_search", l2, make_data(l2, [[0.0]]))
        idx.create_index()
        with pytest.raises(UnsupportedPersistenceError):
            idx.save_index("/tmp/nope.bin")

    def test_unclaimed_create_param_rejected(self, l2):
        idx = create_method("vptree", l2, make_data(l2, [[0.0], [1.0]]))
        with pytest.raises(ParamError, match="bucketSz"):
            idx.create_index(ParamMap.parse("bucketSz=10"))

    def test_query_time_params_reset(self, l2):
        data = make_data(l2, np.random.default_rng(1).normal(size=(20, 2)))
        idx = create_method("vptree", l2, data)
        idx.create_index(ParamMap.parse("bucketSize=4"))
        idx.set_query_time_params(ParamMap.parse("alphaLeft=3.0,maxLeavesToVisit=2"))
        assert idx.oracle.alpha_left == 3.0
        assert idx.max_leaves == 2
        idx.set_query_time_params()
        assert idx.oracle.alpha_left == 1.0
        assert idx.max_leaves > 1_000_000

    def test_scan_records_batch_equals_loop(self, l2):
        rng = np.random.default_rng(2)
        data = make_data(l2, rng.normal(size=(30, 4)))
        block = l2.stack([r.payload for r in data])
        qp = ObjectRecord(-1, l2.make_payload(rng.normal(size=4)))
        q1 = KnnQuery(l2, qp, k=7)
        scan_records(q1, data.records, block)
        q2 = KnnQuery(l2, qp, k=7)
        scan_records(q2, data.records, None)
        assert q1.results() == q2.results()
        assert q1.dist_count == q2.dist_count == 30
