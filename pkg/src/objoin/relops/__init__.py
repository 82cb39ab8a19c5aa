"""Distributed oblivious operators."""

from .expand import FILL_OP, SUM_OP, expand
from .join import (OutputBound, compute_degrees, infer_output_size,
                   oblivious_join)
from .pkjoin import pk_join
from .scan import scan_distributed
from .shuffle import (FixedKeyHasher, KeyHasher, derive_hasher, shuffle,
                      shuffle_by_key, shuffle_random, size_matrix)
from .sort import column_rows, sort_distributed, sorted_sizes

__all__ = [
    "FILL_OP", "SUM_OP", "expand",
    "OutputBound", "compute_degrees", "infer_output_size", "oblivious_join",
    "pk_join", "scan_distributed",
    "FixedKeyHasher", "KeyHasher", "derive_hasher", "shuffle",
    "shuffle_by_key", "shuffle_random", "size_matrix",
    "column_rows", "sort_distributed", "sorted_sizes",
]
