import numpy as np
import pytest

from simsearch import create_space
from simsearch.spaces import (make_sparse, sparse_dot_fast, sparse_dot_merge)


def random_sparse(rng, max_id=200, max_len=40):
    n = rng.integers(1, min(max_len, max_id))
    ids = np.sort(rng.choice(max_id, size=n, replace=False))
    return make_sparse(list(zip(ids, rng.normal(size=n))), dtype=np.float64)


class TestSparseDot:
    def test_disjoint(self):
        x = make_sparse([(1, 2.0)])
        y = make_sparse([(2, 3.0)])
        assert sparse_dot_merge(x, y) == 0.0

    def test_identical_single_pair(self):
        x = make_sparse([(7, 2.0)])
        assert sparse_dot_merge(x, x) == 4.0

    def test_partial_overlap(self):
        x = make_sparse([(1, 1.0), (3, 2.0)])
        y = make_sparse([(3, 5.0), (9, 1.0)])
        assert sparse_dot_merge(x, y) == 10.0

    def test_fast_agrees_with_merge_exactly(self):
        rng = np.random.default_rng(11)
        for _ in range(500):
            x, y = random_sparse(rng), random_sparse(rng)
            assert sparse_dot_fast(x, y) == sparse_dot_merge(x, y)


class TestSparseSpaces:
    def _densify(self, sv, dim):
        out = np.zeros(dim)
        out[sv.ids] = sv.values
        return out

    @pytest.mark.parametrize("sparse_descr,dense_descr", [
        ("l1_sparse", "l1"), ("l2_sparse", "l2"), ("linf_sparse", "linf"),
        ("lp_sparse:p=3", "lp:p=3"),
        ("cosinesimil_sparse", "cosinesimil"),
        ("angulardist_sparse", "angulardist"),
    ])
    def test_matches_densified(self, sparse_descr, dense_descr):
        sp = create_space(sparse_descr, "double")
        dn = create_space(dense_descr, "double")
        rng = np.random.default_rng(12)
        for _ in range(50):
            x, y = random_sparse(rng, max_id=30), random_sparse(rng, max_id=30)
            expected = dn._distance(dn.make_payload(self._densify(x, 30)),
                                    dn.make_payload(self._densify(y, 30)))
            assert sp._distance(x, y) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("plain,fast", [
        ("cosinesimil_sparse", "cosinesimil_sparse_fast"),
        ("angulardist_sparse", "angulardist_sparse_fast"),
    ])
    def test_fast_variant_matches_plain(self, plain, fast):
        p = create_space(plain, "double")
        f = create_space(fast, "double")
        rng = np.random.default_rng(13)
        for _ in range(200):
            x, y = random_sparse(rng), random_sparse(rng)
            assert f._distance(x, y) == p._distance(x, y)

    def test_parse_line(self):
        space = create_space("l2_sparse")
        label, payload = space.parse_line("label:2 4 1.0 1 2.0")
        assert label == 2
        assert list(payload.ids) == [1, 4]
