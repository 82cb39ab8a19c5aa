"""Oblivious primary-key join.

Within each server, the first tuple of every equal-key run of R is the
representative and is routed by key; the rest become inactive tuples with
distinct positive ranks, so the composite (key, rank) is locally distinct
and the same keyed shuffle routes them pseudo-randomly. Representatives
pick up the matching S payload next to them after a local sort, travel
home through the exact mirror of the forward shuffle, and hand the
payload to their inactive peers. Unmatched rows keep an empty payload
(left outer), which the degree computation later maps to degree zero.

Communication: both forward shuffles plus the mirrored return trip cost
2 N1 + N2 up to the padding slack.
"""

from __future__ import annotations

from typing import Callable, List, Optional

from ..cluster import Cluster
from ..errors import DuplicateLocalKey, DuplicatePrimaryKey
from ..oprims import Record, ocompact, osort
from ..tables import DistTable
from .shuffle import derive_hasher, shuffle, shuffle_by_key


def pk_join(cluster: Cluster, left: DistTable, right: DistTable, sigma: int,
            hasher: Optional[Callable] = None,
            strict: bool = True) -> DistTable:
    """left(A, B) joined with right(B, C) where B is right's primary key.

    Output rows sit on left's original servers in their original counts:
    (a, b, c) for matched keys, (a, b, None) otherwise. strict=False
    tolerates equal-key right rows that carry equal payloads, which the
    degree computation relies on for runs that straddle servers.
    """
    p = cluster.p
    hasher = hasher or derive_hasher(cluster)
    home_sizes = left.sizes()

    r_parts = []
    for i, part in enumerate(left.partitions):
        rows = [r.copy() for r in part]
        for r in rows:
            r.z = 0
            r.origin = 0 if r.dummy else i + 1
        osort(rows, key=lambda r: (1,) if r.dummy else (0, r.b),
              counters=cluster.counters[i])
        prev_b = None
        for j in range(1, len(rows)):
            cur = rows[j]
            prev = rows[j - 1]
            same = 1 if (not cur.dummy and not prev.dummy and cur.b == prev.b) else 0
            cur.z = same * (j + 1)
        r_parts.append(rows)

    shuffled_r, r_plans = shuffle_by_key(
        cluster, DistTable(r_parts, left.columns), sigma,
        key_of=lambda r: (r.b, r.z), hasher=hasher,
        check_distinct=False, label="pkjoin-shuffle-left")

    try:
        shuffled_s, _ = shuffle_by_key(
            cluster, right, sigma, key_of=lambda r: (r.b, 0), hasher=hasher,
            check_distinct=strict, label="pkjoin-shuffle-right")
    except DuplicateLocalKey as exc:
        raise DuplicatePrimaryKey(str(exc)) from exc

    joined_parts: List[List[Record]] = []
    for i in range(p):
        r_recv = shuffled_r.partitions[i]
        s_recv = [r.copy() for r in shuffled_s.partitions[i]]
        for r in s_recv:
            r.z = -1
        n0 = len(r_recv)
        v = [r.copy() for r in r_recv] + s_recv
        osort(v, key=lambda r: (1,) if r.dummy else (0, r.b, r.z),
              counters=cluster.counters[i])
        dup = 0
        for j in range(1, len(v)):
            cur, prev = v[j], v[j - 1]
            same = 1 if (not cur.dummy and not prev.dummy and cur.b == prev.b) else 0
            dup |= same & (1 if (cur.z == -1 and prev.z == -1) else 0)
            take = same & (1 if cur.z == 0 else 0)
            cur.c = (cur.c, prev.c)[take]
        cluster.counters[i].cmoves += max(len(v) - 1, 0)
        if strict and dup:
            raise DuplicatePrimaryKey(f"key repeated in right table at server {i + 1}")
        marks = [1 if r.z >= 0 else 0 for r in v]
        ocompact(v, marks, counters=cluster.counters[i])
        joined_parts.append(v[:n0])

    # Return trip mirrors the forward left shuffle: the message i -> j is
    # sized like the forward message j -> i, which always suffices.
    back_sizes = [[r_plans[j].u for j in range(p)] for _ in range(p)]
    back = shuffle(cluster, DistTable(joined_parts, ("a", "b", "c")),
                   back_sizes, target_of=lambda r: r.origin,
                   label="pkjoin-shuffle-back")

    out_parts: List[List[Record]] = []
    for i in range(p):
        rows = [r.copy() for r in back.partitions[i]]
        osort(rows, key=lambda r: (1,) if r.dummy else (0, r.b, r.z),
              counters=cluster.counters[i])
        for j in range(1, len(rows)):
            cur, prev = rows[j], rows[j - 1]
            take = 1 if (not cur.dummy and not prev.dummy and cur.b == prev.b) else 0
            cur.c = (cur.c, prev.c)[take]
        cluster.counters[i].cmoves += max(len(rows) - 1, 0)
        marks = [0 if r.dummy else 1 for r in rows]
        ocompact(rows, marks, counters=cluster.counters[i])
        kept = rows[:home_sizes[i]]
        for r in kept:
            r.z = 0
            r.origin = 0
        out_parts.append(kept)
    return DistTable(out_parts, ("a", "b", "c"))
