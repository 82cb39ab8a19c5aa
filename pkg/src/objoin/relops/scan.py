"""Distributed prefix and suffix scans.

Each server scans locally, ships one boundary aggregate to a coordinator
(server 1 for prefix, server p for suffix), and receives one offset back:
2(p-1) elements of communication total. Keyed scans assume equal keys are
globally contiguous, which holds for every use here because scanned
tables are sorted by the key.
"""

from __future__ import annotations

from typing import Any, Callable, List, Optional, Tuple

from ..cluster import Cluster
from ..oprims import Record, ScanOperator, scan_local
from ..tables import DistTable

Pair = Optional[Tuple[Any, Any]]  # (boundary key, aggregate value)


def _pair_combine(direction: str, op: ScanOperator, left: Pair, right: Pair) -> Pair:
    if left is None:
        return right
    if right is None:
        return left
    k1, v1 = left
    k2, v2 = right
    if direction == "prefix":
        return (k2, op.combine(v1, v2) if k1 == k2 else v2)
    return (k1, op.combine(v1, v2) if k1 == k2 else v1)


def scan_distributed(cluster: Cluster, table: DistTable, direction: str,
                     op: ScanOperator,
                     key: Optional[Callable[[Record], Any]] = None,
                     value: Optional[Callable[[Record], Any]] = None,
                     label: str = "scan") -> List[List[Any]]:
    """Global keyed scan across the partition order.

    Returns one value per record, grouped per partition. Both exchange
    rounds always carry exactly one element per non-coordinator server,
    so the transcript shape is fixed by p alone.
    """
    if direction not in ("prefix", "suffix"):
        raise ValueError("direction must be 'prefix' or 'suffix'")
    p = cluster.p
    coord = 0 if direction == "prefix" else p - 1

    local: List[List[Any]] = []
    partials: List[Pair] = []
    for i, part in enumerate(table.partitions):
        vals = scan_local(part, direction, op, key=key, value=value,
                          counters=cluster.counters[i])
        local.append(vals)
        if not part:
            partials.append(None)
        else:
            edge = -1 if direction == "prefix" else 0
            k = key(part[edge]) if key is not None else 0
            partials.append((k, vals[edge]))

    # Gather boundary aggregates at the coordinator.
    outboxes = [[[] for _ in range(p)] for _ in range(p)]
    for i in range(p):
        if i != coord:
            outboxes[i][coord] = [("scan-partial", i, partials[i])]
    inboxes = cluster.exchange(outboxes, f"{label}-gather")
    gathered: List[Pair] = [None] * p
    gathered[coord] = partials[coord]
    for tag, i, pr in inboxes[coord]:
        gathered[i] = pr

    # Offsets: combination of every partial strictly before (prefix) or
    # strictly after (suffix) each server.
    offsets: List[Pair] = [None] * p
    if direction == "prefix":
        running: Pair = None
        for i in range(1, p):
            running = _pair_combine(direction, op, running, gathered[i - 1])
            offsets[i] = running
    else:
        running = None
        for i in range(p - 2, -1, -1):
            running = _pair_combine(direction, op, gathered[i + 1], running)
            offsets[i] = running

    outboxes = [[[] for _ in range(p)] for _ in range(p)]
    for j in range(p):
        if j != coord:
            outboxes[coord][j] = [("scan-offset", offsets[j])]
    inboxes = cluster.exchange(outboxes, f"{label}-scatter")
    for j in range(p):
        if j != coord:
            offsets[j] = inboxes[j][0][1]

    out: List[List[Any]] = []
    for i, part in enumerate(table.partitions):
        off = offsets[i]
        vals = local[i]
        if off is None:
            out.append(vals)
            continue
        kz, vz = off
        fixed = []
        for rec, v in zip(part, vals):
            k = key(rec) if key is not None else 0
            if direction == "prefix":
                combined = op.combine(vz, v)
            else:
                combined = op.combine(v, vz)
            fixed.append((v, combined)[1 if k == kz else 0])
        cluster.counters[i].cmoves += len(vals)
        out.append(fixed)
    return out
