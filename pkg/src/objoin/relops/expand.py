"""Oblivious distributed expansion.

Replicates record x_i exactly d_i times into an output of public size
m_bound, laid out as repetition blocks in input order followed by the
slack dummies. The last copy of each record is routed to the server and
slot of its running degree total; a suffix fill then copies it backwards
over the dummy gap. A balancing random shuffle precedes the routed
shuffle so the routed bucket bounds stay near n_i * min(m/N, 1).
"""

from __future__ import annotations

import math
from typing import Callable, List

from ..cluster import Cluster
from ..errors import BoundExceeded
from ..oprims import Record, ScanOperator, make_pad, odistribute
from ..padding import pad_expansion
from ..tables import DistTable
from .scan import scan_distributed
from .shuffle import shuffle, shuffle_random

FILL_OP = ScanOperator(
    combine=lambda x, y: (y, x)[0 if x is None else 1], identity=None)

SUM_OP = ScanOperator(combine=lambda x, y: x + y, identity=0)


def expand(cluster: Cluster, table: DistTable,
           deg_of: Callable[[Record], int], m_bound: int,
           sigma: int) -> DistTable:
    """Expand each real record to deg_of(record) copies, PADDED to
    p * ceil(m_bound / p) slots. Raises BoundExceeded when the degree
    total overshoots m_bound."""
    p = cluster.p
    m = math.ceil(m_bound / p) if m_bound > 0 else 0
    n_total = table.total

    work = table.map_copy()
    sums = scan_distributed(
        cluster, work, "prefix", SUM_OP,
        value=lambda r: 0 if r.dummy else max(deg_of(r), 0),
        label="expand-prefix")

    overshoot = 0
    for i, part in enumerate(work.partitions):
        for rec, total in zip(part, sums[i]):
            d = 0 if rec.dummy else max(deg_of(rec), 0)
            overshoot |= 1 if (d > 0 and total > m_bound) else 0
            live = 1 if d > 0 else 0
            rec.gpos = live * total
            t = ((total + m - 1) // m) if m > 0 else 0
            rec.tgt = live * t
            rec.lpos = live * (total - (t - 1) * m)
            if not live:
                rec.dummy = True
        cluster.counters[i].cmoves += len(part)
    if overshoot:
        raise BoundExceeded(f"degree total exceeds output bound {m_bound}")

    balanced = shuffle_random(cluster, work, label="expand-balance")
    plans = [pad_expansion(n_i, n_total, m * p, p, sigma)
             for n_i in balanced.sizes()]
    routed = shuffle(cluster, balanced, plans, target_of=lambda r: r.tgt,
                     label="expand-route")

    placed_parts: List[List[Record]] = []
    for i, part in enumerate(routed.partitions):
        targets = [0 if r.dummy else r.lpos for r in part]
        placed = odistribute(part, targets, m, counters=cluster.counters[i])
        placed_parts.append(placed)
    placed_table = DistTable(placed_parts, table.columns)

    fills = scan_distributed(
        cluster, placed_table, "suffix", FILL_OP,
        value=lambda r: None if r.dummy else r, label="expand-fill")

    out_parts: List[List[Record]] = []
    for i in range(p):
        rows: List[Record] = []
        for src in fills[i]:
            if src is None:
                rows.append(make_pad())
            else:
                rec = src.copy()
                rec.tgt = 0
                rec.lpos = 0
                rec.gpos = 0
                rows.append(rec)
        cluster.counters[i].moves += len(rows)
        out_parts.append(rows)
    return DistTable(out_parts, table.columns)
