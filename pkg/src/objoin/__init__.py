"""Oblivious distributed equi-join simulator.

A library plus simulator for data-oblivious relational operators on a
deterministic p-server cluster, with padding planners, an exact message
transcript, and audit machinery that checks communication and
computation obliviousness as equality of observables.
"""

__version__ = "0.1.0"

from .cluster import Cluster, ClusterConfig, CostReport, Transcript, run_rounds, simulate_transcript
from .oprims import (KEY_SENTINEL, OpCounters, Record, ScanOperator,
                     TracedBuffer, cmove, make_pad, ocompact, odistribute,
                     opartition_quick, opartition_sort, osort, scan_local)
from .padding import CHERNOFF_CONSTANT, PaddingPlan, pad_align, pad_expansion, pad_shuffle_by_key
from .tables import DatasetStats, DistTable, join_stats, left_table, right_table

__all__ = [
    "Cluster", "ClusterConfig", "CostReport", "Transcript", "run_rounds",
    "simulate_transcript",
    "KEY_SENTINEL", "OpCounters", "Record", "ScanOperator", "TracedBuffer",
    "cmove", "make_pad", "ocompact", "odistribute", "opartition_quick",
    "opartition_sort", "osort", "scan_local",
    "CHERNOFF_CONSTANT", "PaddingPlan", "pad_align", "pad_expansion",
    "pad_shuffle_by_key",
    "DatasetStats", "DistTable", "join_stats", "left_table", "right_table",
    "__version__",
]
