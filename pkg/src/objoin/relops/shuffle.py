"""Shuffle family: plan-padded shuffle, random shuffle, shuffle by key.

A shuffle is the only way records move between servers. The padded
variants emit, for every (sender, receiver) pair, a bucket whose size is
fixed by the plan before any data is touched; the random variant needs no
padding because its targets are drawn independently of record values.
"""

from __future__ import annotations

import struct
from hashlib import blake2b
from typing import Callable, List, Optional, Sequence, Tuple, Union

from ..cluster import Cluster
from ..errors import DuplicateLocalKey
from ..oprims import Record, opartition_quick, osort
from ..padding import PaddingPlan, pad_shuffle_by_key
from ..tables import DistTable

TargetFn = Callable[[Record], int]
SizesLike = Union[Sequence[int], Sequence[PaddingPlan], Sequence[Sequence[int]]]


class KeyHasher:
    """Deterministic keyed hash onto [1, p], shared by all servers.

    Plays the role of the public random oracle: distinct keys map to
    near-independent uniform servers. Keys are ints or tuples of ints.
    """

    def __init__(self, seed: int, p: int):
        self.p = p
        self._key = struct.pack("<Q", seed & 0xFFFFFFFFFFFFFFFF)

    def __call__(self, key) -> int:
        digest = blake2b(repr(key).encode(), key=self._key, digest_size=8)
        return int.from_bytes(digest.digest(), "little") % self.p + 1


class FixedKeyHasher:
    """Stub hasher with an explicit key -> server table (tests)."""

    def __init__(self, mapping: dict, p: int):
        self.mapping = mapping
        self.p = p

    def __call__(self, key) -> int:
        base = key[0] if isinstance(key, tuple) else key
        return self.mapping[base]


def derive_hasher(cluster: Cluster) -> KeyHasher:
    """Fresh public hash function, fixed by (master seed, current round)."""
    seed = cluster.config.master_seed * 0x9E3779B97F4A7C15 + cluster.round_no
    return KeyHasher(seed, cluster.p)


def size_matrix(p: int, sizes: SizesLike) -> List[List[int]]:
    """Normalize a plan list / per-sender bounds / full matrix to p x p."""
    rows: List[List[int]] = []
    for entry in sizes:
        if isinstance(entry, PaddingPlan):
            rows.append([entry.u] * p)
        elif isinstance(entry, int):
            rows.append([entry] * p)
        else:
            rows.append(list(entry))
    if len(rows) != p or any(len(r) != p for r in rows):
        raise ValueError("need p bucket sizes per sender")
    return rows


def shuffle(cluster: Cluster, table: DistTable, sizes: SizesLike,
            target_of: Optional[TargetFn] = None,
            label: str = "shuffle") -> DistTable:
    """Route each record to its target server under fixed bucket sizes.

    sizes gives the padded bucket size per (sender, receiver); dummies
    carry target 0 and are dropped, buckets are refilled with fresh pads.
    Raises PaddingOverflow when any class exceeds its bucket.
    """
    p = cluster.p
    target_of = target_of or (lambda r: r.tgt)
    matrix = size_matrix(p, sizes)
    outboxes = []
    for i, part in enumerate(table.partitions):
        targets = [0 if r.dummy else target_of(r) for r in part]
        buckets = opartition_quick(part, targets, p, matrix[i],
                                   counters=cluster.counters[i])
        outboxes.append(buckets)
    inboxes = cluster.exchange(outboxes, label)
    return DistTable(inboxes, table.columns)


def shuffle_random(cluster: Cluster, table: DistTable,
                   label: str = "shuffle-random") -> DistTable:
    """Send every record to an independently uniform server.

    Targets are consumed positionally from the per-(server, round) stream,
    so two same-size inputs under one seed produce identical transcripts.
    Grouping is the natural non-oblivious bucketing; no padding.
    """
    p = cluster.p
    outboxes = []
    for i, part in enumerate(table.partitions):
        rng = cluster.rng("shuffle_random", i)
        targets = rng.integers(1, p + 1, size=len(part))
        buckets: List[List[Record]] = [[] for _ in range(p)]
        for r, t in zip(part, targets):
            buckets[int(t) - 1].append(r.copy())
        outboxes.append(buckets)
    inboxes = cluster.exchange(outboxes, label)
    return DistTable(inboxes, table.columns)


def shuffle_by_key(cluster: Cluster, table: DistTable, sigma: int,
                   key_of: Callable[[Record], object] = None,
                   hasher: Optional[Callable] = None,
                   check_distinct: bool = True,
                   label: str = "shuffle-by-key",
                   ) -> Tuple[DistTable, List[PaddingPlan]]:
    """Co-locate equal keys on the hashed server, with theorem-1 padding.

    Requires per-sender distinct real keys; when check_distinct is set, a
    sorted adjacent-equality pass accumulates a flag obliviously and
    raises DuplicateLocalKey once at the end.
    """
    p = cluster.p
    key_of = key_of or (lambda r: r.b)
    hasher = hasher or derive_hasher(cluster)
    if check_distinct:
        for i, part in enumerate(table.partitions):
            probe = [r.copy() for r in part]
            osort(probe, key=lambda r: (1,) if r.dummy else (0, key_of(r)),
                  counters=cluster.counters[i])
            dup = 0
            for a, b in zip(probe, probe[1:]):
                dup |= 1 if (not a.dummy and not b.dummy
                             and key_of(a) == key_of(b)) else 0
            if dup:
                raise DuplicateLocalKey(f"server {i + 1} holds a repeated key")
    plans = [pad_shuffle_by_key(len(part), p, sigma)
             for part in table.partitions]
    out = shuffle(cluster, table, plans,
                  target_of=lambda r: hasher(key_of(r)), label=label)
    return out, plans
