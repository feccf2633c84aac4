"""Distance spaces and the mnemonic-name factory."""
from .base import (DIST_DTYPES, Space, SpaceError, check_same_dim,
                   create_space, register_space, registered_spaces)
from . import dense, sparse, divergence, strings, bits, sqfd  # noqa: F401  (registration)
from .bits import BitVector, bit_hamming, make_bitvector
from .dense import AngularSpace, CosineSpace, LpSpace
from .divergence import (BregmanSpace, JsDivergenceSpace, JsMetricSpace,
                         LogLookupTable, PrecompLogVector, precompute_logs,
                         shared_log_table)
from .sparse import (SparseVector, make_sparse, sparse_dot_fast,
                     sparse_dot_merge)
from .sqfd import Signature, SqfdSpace, make_signature
from .strings import (StringSpace, levenshtein, levenshtein_dp,
                      normalized_levenshtein)

__all__ = [
    "Space", "SpaceError", "create_space", "register_space",
    "registered_spaces", "check_same_dim", "DIST_DTYPES",
    "LpSpace", "CosineSpace", "AngularSpace",
    "SparseVector", "make_sparse", "sparse_dot_merge", "sparse_dot_fast",
    "JsDivergenceSpace", "JsMetricSpace", "BregmanSpace",
    "LogLookupTable", "PrecompLogVector", "precompute_logs", "shared_log_table",
    "levenshtein", "levenshtein_dp", "normalized_levenshtein", "StringSpace",
    "BitVector", "make_bitvector", "bit_hamming",
    "Signature", "make_signature", "SqfdSpace",
]
