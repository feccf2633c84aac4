"""Search methods; importing this package registers every mnemonic."""
from . import brute, vptree, ghtree, listclust, bbtree  # noqa: F401
from . import permutation, projected, graphs  # noqa: F401

from .brute import MultIndex, SeqSearch
from .bbtree import BbTreeIndex
from .ghtree import GhTreeIndex
from .graphs import (HnswIndex, SwGraphIndex, greedy_subsearch, sample_level,
                     select_neighbors)
from .listclust import ListClustersIndex
from .permutation import (MiFileIndex, NappIndex, PermIncSortBin, PpIndex,
                          binarize_permutation, object_permutation)
from .projected import Omedrank, PermBinVpTree, ProjIncSort, ProjVpTree
from .vptree import TuningError, VpOracleParams, VpTreeIndex, tune_vptree

__all__ = [
    "SeqSearch", "MultIndex", "VpTreeIndex", "VpOracleParams", "tune_vptree",
    "TuningError", "GhTreeIndex", "ListClustersIndex", "BbTreeIndex",
    "NappIndex", "PpIndex", "MiFileIndex", "PermIncSortBin",
    "object_permutation", "binarize_permutation",
    "ProjIncSort", "ProjVpTree", "PermBinVpTree", "Omedrank",
    "SwGraphIndex", "HnswIndex", "greedy_subsearch", "sample_level",
    "select_neighbors",
]
