"""Operator execution with cost reporting against the closed-form bounds.

One entry point builds the cluster, runs the requested operator on
in-memory row lists, and returns the cost report with the evaluated
bound formulas and the output rows. Both the CLI and the HTTP service
call into here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .cluster import Cluster, ClusterConfig, CostReport
from .oprims import Record
from .relops import expand, oblivious_join, pk_join, sort_distributed
from .relops.sort import column_rows
from .tables import DistTable, deal_records, join_stats, left_table, right_table

EPSILON_FRACTION = 0.05  # allowed lower-order slack: 5% of the bound ...
EPSILON_FLAT_P2 = 4      # ... plus 4 p^2 elements


@dataclass
class RunSpec:
    """One operator invocation."""

    operator: str                  # join | pkjoin | sort | expand
    p: int
    sigma: int
    seed: int = 0
    padding: str = "infer"         # infer | given (join / expand bound)
    m_bound: Optional[int] = None
    element_width: int = 64

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be at least 1")
        if self.padding not in ("infer", "given"):
            raise ValueError("padding mode must be 'infer' or 'given'")
        if self.padding == "given" and (self.m_bound is None or self.m_bound < 1):
            raise ValueError("padding mode 'given' requires m_bound >= 1")


@dataclass
class RunResult:
    report: CostReport
    output_rows: List[tuple]
    info: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"report": self.report.to_dict(), "info": self.info,
                "output_rows": [list(r) for r in self.output_rows]}


def _slack(bound: float, p: int) -> float:
    return EPSILON_FRACTION * bound + EPSILON_FLAT_P2 * p * p


def _formula(name: str, bound: float, measured: int, p: int,
             exact: bool = False) -> dict:
    allowed = bound if exact else bound + _slack(bound, p)
    return {"name": name, "bound": bound, "measured": measured,
            "allowed": math.floor(allowed), "exact": exact,
            "ok": measured == bound if exact else measured <= allowed}


def execute(spec: RunSpec,
            left_rows: Sequence[tuple],
            right_rows: Optional[Sequence[tuple]] = None,
            degrees: Optional[Sequence[int]] = None) -> RunResult:
    """Run the operator and evaluate its communication bound.

    left_rows are (payload, key) pairs; right_rows are (key, payload)
    pairs; degrees accompany left_rows for the expand operator.
    """
    config = ClusterConfig(p=spec.p, sigma=spec.sigma,
                           element_width=spec.element_width,
                           master_seed=spec.seed)
    cluster = Cluster(config)
    p = spec.p

    if spec.operator == "sort":
        table = left_table(left_rows, p)
        n = table.total
        out = sort_distributed(cluster, table)
        r = column_rows(table.sizes(), p)
        formulas = [
            _formula("sort_comm_3n_padded", 3 * r * p,
                     cluster.transcript.total_elements, p, exact=True),
            {"name": "sort_comm_3n_input", "bound": 3 * n,
             "measured": cluster.transcript.total_elements,
             "note": "equals the padded bound when p divides r and no "
                     "geometry padding was needed"},
        ]
        rows = [(r_.a, r_.b) for r_ in out.records() if not r_.dummy]
        return RunResult(cluster.report(formulas), rows,
                         info={"n": n, "rows_per_column": r})

    if spec.operator == "pkjoin":
        if right_rows is None:
            raise ValueError("pkjoin needs a right table")
        left = left_table(left_rows, p)
        right = right_table(right_rows, p)
        n1, n2 = left.total, right.total
        out = pk_join(cluster, left, right, spec.sigma)
        bound = 2 * n1 + n2
        formulas = [_formula("pkjoin_comm_2n1_n2", bound,
                             cluster.transcript.total_elements, p)]
        rows = [(r_.a, r_.b, r_.c) for r_ in out.records() if not r_.dummy]
        return RunResult(cluster.report(formulas), rows,
                         info={"n1": n1, "n2": n2})

    if spec.operator == "expand":
        if degrees is None:
            raise ValueError("expand needs a degree per left row")
        table = left_table(left_rows, p)
        for rec, d in zip(table.records(), degrees):
            rec.deg = int(d)
        n = table.total
        total_deg = sum(int(d) for d in degrees)
        m_bound = spec.m_bound if spec.padding == "given" else total_deg
        out = expand(cluster, table, lambda r: r.deg, m_bound, spec.sigma)
        m_padded = out.total
        bound = n + min(m_padded, n * p)
        formulas = [_formula("expand_comm_n_plus_min", bound,
                             cluster.transcript.total_elements, p)]
        rows = [(r_.a, r_.b) for r_ in out.records() if not r_.dummy]
        return RunResult(cluster.report(formulas), rows,
                         info={"n": n, "m_bound": m_bound,
                               "slots": m_padded,
                               "real_rows": out.real_count()})

    if spec.operator == "join":
        if right_rows is None:
            raise ValueError("join needs a right table")
        left = left_table(left_rows, p)
        right = right_table(right_rows, p)
        n1, n2 = left.total, right.total
        n = n1 + n2
        m_arg = spec.m_bound if spec.padding == "given" else None
        out, bound_info = oblivious_join(cluster, left, right, spec.sigma,
                                         m_bound=m_arg)
        m_pub = bound_info.m_bound
        comm_bound = 7 * n + 2 * m_pub + min(2 * m_pub, n * p)
        formulas = [_formula("join_comm_table1", comm_bound,
                             cluster.transcript.total_elements, p)]
        stats = join_stats([int(b) for _, b in left_rows],
                           [int(b) for b, _ in right_rows])
        rows = [(r_.a, r_.b, r_.c) for r_ in out.records() if not r_.dummy]
        return RunResult(cluster.report(formulas), rows,
                         info={"n1": n1, "n2": n2,
                               "m_bound": m_pub,
                               "slots": bound_info.slots,
                               "real_rows": bound_info.real_rows,
                               "dataset_stats": stats.as_dict()})

    raise ValueError(f"unknown operator {spec.operator!r}")
