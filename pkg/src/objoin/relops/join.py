"""General oblivious equi-join and its degree machinery.

Pipeline: sort both tables by key; attach to every row its key's degree
in both tables (a prefix count, a suffix max, then a PK join against the
locally deduplicated other side); expand both tables to the public output
size; compute for every right-side copy the global slot where it must
meet its left-side partner; route there with a balancing random shuffle
plus a padded shuffle; sort locally and zip positionally.

The alignment slot of the q-th copy (0-based) within a key group whose
degrees are (dr, ds) and whose first global position is g:

    slot = floor(q / dr) + (q mod dr) * ds + g

which is a bijection of the group onto its own global range, so the two
expanded tables pair off exactly. Dummies carry their own slot index and
therefore stay in the shared tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

from ..cluster import Cluster
from ..errors import BoundExceeded
from ..oprims import KEY_SENTINEL, Record, ScanOperator, osort
from ..padding import pad_align
from ..tables import DistTable
from .expand import SUM_OP, expand
from .pkjoin import pk_join
from .scan import scan_distributed
from .shuffle import shuffle, shuffle_random

COUNT_OP = ScanOperator(combine=lambda x, y: x + y, identity=0)
MAX_OP = ScanOperator(combine=max, identity=0)
MIN_OP = ScanOperator(combine=min, identity=None)


@dataclass(frozen=True)
class OutputBound:
    """Public output size bound and its per-server layout."""

    m_bound: int      # requested bound M
    per_server: int   # m = ceil(M / p)
    slots: int        # p * m placed slots
    real_rows: int    # true join size carried by the slots

    @property
    def d_bot(self) -> int:
        return self.slots - self.real_rows

    def as_dict(self) -> dict:
        return {"m_bound": self.m_bound, "per_server": self.per_server,
                "slots": self.slots, "real_rows": self.real_rows,
                "d_bot": self.d_bot}


def _dummy_aware_key(r: Record):
    return (1,) if r.dummy else (0, r.b)


def compute_degrees(cluster: Cluster, first: DistTable, second: DistTable,
                    sigma: int, as_right: bool = False) -> DistTable:
    """Attach both key degrees to every row of `first`.

    Both inputs must be globally sorted by key. By default the self
    degree lands in deg_r and the other-table degree in deg_s, matching a
    left-table caller; as_right=True swaps the destinations so fields
    stay semantic (deg_r = degree in the left table) for a right-table
    caller. Keys absent from `second` get other-degree 0.
    """
    work = first.map_copy()
    if as_right:
        # The inner PK join transports the other side's degree through the
        # c slot, which holds this table's own payload; park it in a.
        for part in work.partitions:
            for r in part:
                r.a, r.c = r.c, None
    ranks = scan_distributed(cluster, work, "prefix", COUNT_OP,
                             key=_dummy_aware_key,
                             value=lambda r: 0 if r.dummy else 1,
                             label="deg-rank")
    for part, vals in zip(work.partitions, ranks):
        for rec, v in zip(part, vals):
            rec.deg = v
    degs = scan_distributed(cluster, work, "suffix", MAX_OP,
                            key=_dummy_aware_key,
                            value=lambda r: r.deg,
                            label="deg-selfmax")
    for part, vals in zip(work.partitions, degs):
        for rec, v in zip(part, vals):
            rec.deg = v

    other = second.map_copy()
    oranks = scan_distributed(cluster, other, "prefix", COUNT_OP,
                              key=_dummy_aware_key,
                              value=lambda r: 0 if r.dummy else 1,
                              label="deg-rank-other")
    for part, vals in zip(other.partitions, oranks):
        for rec, v in zip(part, vals):
            rec.deg = v
    odegs = scan_distributed(cluster, other, "suffix", MAX_OP,
                             key=_dummy_aware_key,
                             value=lambda r: r.deg,
                             label="deg-othermax")
    for i, (part, vals) in enumerate(zip(other.partitions, odegs)):
        # The degree value becomes the joined payload; duplicates collapse
        # locally to the last of each run so the keyed shuffle hypothesis
        # holds. Runs straddling servers keep one copy per server, all
        # carrying the same global degree, which the tolerant PK join
        # accepts.
        flags = []
        for j, rec in enumerate(part):
            nxt = part[j + 1] if j + 1 < len(part) else None
            same = 1 if (nxt is not None and not rec.dummy and not nxt.dummy
                         and rec.b == nxt.b) else 0
            flags.append(same)
        for rec, v, same in zip(part, vals, flags):
            rec.c = v
            rec.a = None
            if same:
                rec.dummy = True
                rec.b = KEY_SENTINEL
                rec.c = None
        cluster.counters[i].cmoves += len(part)

    joined = pk_join(cluster, work, DistTable(other.partitions, ("b", "c")),
                     sigma, strict=False)

    out_parts: List[List[Record]] = []
    for i, (src, got) in enumerate(zip(work.partitions, joined.partitions)):
        rows = []
        for rec in got:
            rc = rec.copy()
            matched = 1 if rc.c is not None else 0
            other_deg = rc.c if matched else 0
            self_deg = rc.deg
            if as_right:
                rc.deg_r, rc.deg_s = other_deg, self_deg
                rc.c, rc.a = rc.a, None
            else:
                rc.deg_r, rc.deg_s = self_deg, other_deg
                rc.c = None
            rc.deg = 0
            rows.append(rc)
        cluster.counters[i].cmoves += len(got)
        out_parts.append(rows)
    columns = tuple(first.columns) + ("deg_r", "deg_s")
    return DistTable(out_parts, columns)


def infer_output_size(cluster: Cluster, degreed: DistTable,
                      field: str = "deg_s") -> int:
    """Exact join size: the distributed sum of the other-table degrees.

    One gather and one broadcast of a single element each, so the size
    becomes public on every server.
    """
    p = cluster.p
    partials = []
    for part in degreed.partitions:
        partials.append(sum(getattr(r, field) for r in part if not r.dummy))
    outboxes = [[[] for _ in range(p)] for _ in range(p)]
    for i in range(1, p):
        outboxes[i][0] = [("size-partial", partials[i])]
    inboxes = cluster.exchange(outboxes, "infer-gather")
    total = partials[0] + sum(v for _, v in inboxes[0])
    outboxes = [[[] for _ in range(p)] for _ in range(p)]
    for j in range(1, p):
        outboxes[0][j] = [("size-total", total)]
    cluster.exchange(outboxes, "infer-broadcast")
    return total


def oblivious_join(cluster: Cluster, left: DistTable, right: DistTable,
                   sigma: int, m_bound: Optional[int] = None,
                   ) -> Tuple[DistTable, OutputBound]:
    """left(A, B) equi-joined with right(B, C) into exactly p * m slots.

    With m_bound=None the exact output size is inferred (and thereby
    published); a given m_bound must dominate the true join size or
    BoundExceeded is raised. Real output rows are the join result as a
    multiset; every server ends with exactly m = ceil(M / p) rows, the
    tail of the global slot range being dummies.
    """
    from .sort import sort_distributed

    p = cluster.p
    left_sorted = sort_distributed(cluster, left)
    right_sorted = sort_distributed(cluster, right)

    left_deg = compute_degrees(cluster, left_sorted, right_sorted, sigma)
    if m_bound is None:
        m_bound = infer_output_size(cluster, left_deg)
    for part in left_deg.partitions:
        for r in part:
            r.deg_r = 0
    right_deg = compute_degrees(cluster, right_sorted, left_sorted, sigma,
                                as_right=True)

    left_bar = expand(cluster, left_deg, lambda r: r.deg_s, m_bound, sigma)
    right_bar = expand(cluster, right_deg, lambda r: r.deg_r, m_bound, sigma)

    m = math.ceil(m_bound / p) if m_bound > 0 else 0
    slots = m * p

    ranks = scan_distributed(cluster, right_bar, "prefix", COUNT_OP,
                             key=_dummy_aware_key,
                             value=lambda r: 0 if r.dummy else 1,
                             label="align-rank")
    for part, vals in zip(right_bar.partitions, ranks):
        for rec, v in zip(part, vals):
            rec.deg = v

    def slot_of(i: int, idx: int) -> int:
        return i * m + idx + 1

    # Group start = prefix min over each record's own global position.
    for i, part in enumerate(right_bar.partitions):
        for idx, rec in enumerate(part):
            rec.grp = slot_of(i, idx)
    starts = scan_distributed(
        cluster, right_bar, "prefix", MIN_OP, key=_dummy_aware_key,
        value=lambda r: r.grp, label="align-start")
    for i, part in enumerate(right_bar.partitions):
        for idx, (rec, start) in enumerate(zip(part, starts[i])):
            own = slot_of(i, idx)
            q = rec.deg - 1
            dr = max(rec.deg_r, 1)
            real_l = (q // dr) + (q % dr) * rec.deg_s + start
            l = own if rec.dummy else real_l
            rec.gpos = l
            rec.tgt = (l + m - 1) // m if m > 0 else 0
        cluster.counters[i].cmoves += len(part)

    balanced = shuffle_random(cluster, right_bar, label="align-balance")
    plans = [pad_align(n_i, p, sigma) for n_i in balanced.sizes()]
    routed = shuffle(cluster, balanced, plans, target_of=lambda r: r.tgt,
                     label="align-route")

    out_parts: List[List[Record]] = []
    real_rows = 0
    for i in range(p):
        rows = routed.partitions[i]
        osort(rows, key=lambda r: (1, 0) if r.gpos == 0 else (0, r.gpos),
              counters=cluster.counters[i])
        aligned = rows[:m]
        part = []
        for lrec, rrec in zip(left_bar.partitions[i], aligned):
            dummy = lrec.dummy or rrec.dummy
            part.append(Record(b=lrec.b if not dummy else KEY_SENTINEL,
                               a=lrec.a if not dummy else None,
                               c=rrec.c if not dummy else None,
                               dummy=dummy))
            real_rows += 0 if dummy else 1
        out_parts.append(part)

    bound = OutputBound(m_bound=m_bound, per_server=m, slots=slots,
                        real_rows=real_rows)
    return DistTable(out_parts, ("a", "b", "c")), bound
