"""Distributed sorting via column sort.

Each server is one column of an r x p matrix with r a multiple of p, r
even, and r >= 2(p-1)^2. Four rounds of local bitonic sorts alternate
with transpose, untranspose, shift and unshift exchanges; the element
counts moved are rp, rp, rp/2, rp/2, i.e. exactly 3N when the input is
balanced and needs no geometry padding.
"""

from __future__ import annotations

from typing import Callable, List

from ..cluster import Cluster
from ..oprims import KEY_SENTINEL, Record, make_pad, osort
from ..tables import DistTable

NEG_KEY = -KEY_SENTINEL


def _neg_pad() -> Record:
    r = make_pad()
    r.b = NEG_KEY
    return r


def column_rows(sizes: List[int], p: int) -> int:
    """Rows per column: covers the largest partition, satisfies the
    2(p-1)^2 floor, and is an even multiple of p."""
    r = max(max(sizes, default=0), 2 * (p - 1) ** 2, 1)
    step = p if p % 2 == 0 else 2 * p
    return ((r + step - 1) // step) * step


def sorted_sizes(sizes: List[int], p: int) -> List[int]:
    """Public output sizes: reals pack into leading columns after the sort."""
    n = sum(sizes)
    r = column_rows(sizes, p)
    return [min(max(n - i * r, 0), r) for i in range(p)]


def sort_distributed(cluster: Cluster, table: DistTable,
                     key_of: Callable[[Record], object] = None) -> DistTable:
    """Globally sort the table by the extracted key.

    Caller dummies sort behind all real keys and survive; the geometry
    pads added here are stripped by public count before returning.
    """
    p = cluster.p
    key_of = key_of or (lambda r: r.b)
    n_in = table.total
    r = column_rows(table.sizes(), p)
    half = r // 2

    def kw(rec: Record):
        if rec.dummy:
            return (-1,) if rec.b == NEG_KEY else (1,)
        return (0, key_of(rec))

    cols = []
    for part in table.partitions:
        col = [rec.copy() for rec in part]
        col.extend(make_pad() for _ in range(r - len(col)))
        cols.append(col)

    # Round 1: sort columns, transpose (column-major -> row-major).
    outboxes = []
    for i in range(p):
        osort(cols[i], kw, counters=cluster.counters[i])
        buckets: List[List[Record]] = [[] for _ in range(p)]
        for idx in range(r):
            buckets[(i * r + idx) % p].append(cols[i][idx])
        outboxes.append(buckets)
    inboxes = cluster.exchange(outboxes, "sort-transpose")
    cols = [inboxes[j] for j in range(p)]

    # Round 2: sort columns, untranspose (row-major -> column-major).
    outboxes = []
    for i in range(p):
        osort(cols[i], kw, counters=cluster.counters[i])
        buckets = [[] for _ in range(p)]
        for q in range(r):
            buckets[(q * p + i) // r].append(cols[i][q])
        outboxes.append(buckets)
    inboxes = cluster.exchange(outboxes, "sort-untranspose")
    chunk = r // p
    ncols = []
    for d in range(p):
        col = [None] * r
        off = 0
        for c in range(p):
            for k in range(chunk):
                col[p * k + c] = inboxes[d][off]
                off += 1
        ncols.append(col)
    cols = ncols

    # Round 3: sort columns, shift bottom halves one column right (ring).
    outboxes = []
    kept = []
    for i in range(p):
        osort(cols[i], kw, counters=cluster.counters[i])
        kept.append(cols[i][:half])
        buckets = [[] for _ in range(p)]
        buckets[(i + 1) % p] = cols[i][half:]
        outboxes.append(buckets)
    inboxes = cluster.exchange(outboxes, "sort-shift")

    # Round 4: sort the shifted columns, unshift top halves back (ring).
    # Server 0 hosts both boundary columns: a -inf half before its own
    # top, and the wrapped bottom of the last column before a +inf half.
    mains = []
    extras = [None] * p
    for i in range(p):
        if i == 0:
            main = [_neg_pad() for _ in range(half)] + kept[0]
            extra = inboxes[0] + [make_pad() for _ in range(half)]
            osort(extra, kw, counters=cluster.counters[0])
            extras[0] = extra
        else:
            main = inboxes[i] + kept[i]
        osort(main, kw, counters=cluster.counters[i])
        mains.append(main)
    outboxes = []
    for i in range(p):
        buckets = [[] for _ in range(p)]
        if i == 0:
            buckets[p - 1] = extras[0][:half]
        else:
            buckets[i - 1] = mains[i][:half]
        outboxes.append(buckets)
    inboxes = cluster.exchange(outboxes, "sort-unshift")
    cols = [mains[i][half:] + inboxes[i] for i in range(p)]

    parts = []
    for i in range(p):
        keep = min(max(n_in - i * r, 0), r)
        parts.append(cols[i][:keep])
    return DistTable(parts, table.columns)
