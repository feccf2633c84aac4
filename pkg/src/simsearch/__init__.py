"""simsearch: similarity search in metric and non-metric spaces.

The package bundles optimized distance kernels, exact and approximate index
structures (tree-, permutation-, projection-, and graph-based), and a
benchmarking harness that measures efficiency/effectiveness trade-offs
against brute-force gold standards.
"""
from .core import (Index, IndexFormatError, KnnQuery, Query, RangeQuery,
                   UnsupportedPersistenceError, UnsupportedQueryError,
                   create_method, register_method, registered_methods)
from .data import (NO_LABEL, DataFormatError, DataSet, ObjectRecord,
                   parse_dense_line, parse_sparse_line, read_dataset,
                   write_dataset)
from .params import ParamError, ParamMap
from .projection import (Projection, compute_permutation, hashing_trick,
                         make_projection)
from .spaces import Space, SpaceError, create_space, registered_spaces

from . import methods  # noqa: E402,F401  (method registration)

__version__ = "0.1.0"

__all__ = [
    "ParamMap", "ParamError",
    "DataSet", "ObjectRecord", "NO_LABEL", "DataFormatError",
    "parse_dense_line", "parse_sparse_line", "read_dataset", "write_dataset",
    "Space", "SpaceError", "create_space", "registered_spaces",
    "Query", "KnnQuery", "RangeQuery", "Index",
    "UnsupportedQueryError", "UnsupportedPersistenceError", "IndexFormatError",
    "create_method", "register_method", "registered_methods",
    "Projection", "make_projection", "compute_permutation", "hashing_trick",
]
