"""Executable security checks and correctness oracles.

Obliviousness is asserted as exact equality under seed control: with one
master seed, every transcript (and every primitive trace) must be
identical across same-size inputs, and must equal the size-only
simulation where a law exists. Oracles are centralized plaintext
implementations sharing no code with the oblivious paths. Negative
controls (a value-routed unpadded shuffle, a naive quicksort) guard the
checks against passing vacuously.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .cluster import Cluster, ClusterConfig, simulate_transcript
from .errors import PaddingOverflow, UnknownOperator
from .oprims import (Record, TracedBuffer, ocompact, odistribute,
                     opartition_quick, opartition_sort, osort)
from .padding import pad_shuffle_by_key
from .relops import (expand, oblivious_join, pk_join, scan_distributed,
                     shuffle_by_key, shuffle_random, sort_distributed)
from .relops.join import COUNT_OP
from .tables import DistTable, left_table, right_table


@dataclass
class AuditVerdict:
    check_id: str
    passed: bool
    trials: int
    witness: Optional[dict] = None

    def as_dict(self) -> dict:
        return {"check_id": self.check_id, "passed": self.passed,
                "trials": self.trials, "witness": self.witness}


# ---------------------------------------------------------------------------
# Plaintext oracles
# ---------------------------------------------------------------------------

def oracle_join(left_rows: Sequence[Tuple[object, int]],
                right_rows: Sequence[Tuple[int, object]]) -> List[tuple]:
    """Centralized nested-loop natural join; the ground truth."""
    by_key: Dict[int, list] = {}
    for b, c in right_rows:
        by_key.setdefault(b, []).append(c)
    out = []
    for a, b in left_rows:
        for c in by_key.get(b, ()):
            out.append((a, b, c))
    return sorted(out, key=repr)


# ---------------------------------------------------------------------------
# Communication obliviousness
# ---------------------------------------------------------------------------

def _leaky_shuffle(cluster: Cluster, table: DistTable) -> DistTable:
    # Negative control: value-dependent targets, natural grouping, no
    # padding. Message sizes follow the key distribution.
    p = cluster.p
    outboxes = []
    for part in table.partitions:
        buckets: List[List[Record]] = [[] for _ in range(p)]
        for r in part:
            buckets[r.b % p].append(r.copy())
        outboxes.append(buckets)
    inboxes = cluster.exchange(outboxes, "leaky-shuffle")
    return DistTable(inboxes, table.columns)


def _gen_left(rng: random.Random, n: int, p: int, distinct: bool) -> DistTable:
    if distinct:
        keys = rng.sample(range(1, max(10 * n, 10)), n)
    else:
        keys = [rng.randrange(1, max(n // 2, 2)) for _ in range(n)]
    return left_table([(f"a{i}", k) for i, k in enumerate(keys)], p)


def _gen_right(rng: random.Random, n: int, p: int, distinct: bool) -> DistTable:
    if distinct:
        keys = rng.sample(range(1, max(10 * n, 10)), n)
    else:
        keys = [rng.randrange(1, max(n // 2, 2)) for _ in range(n)]
    return right_table([(k, f"c{i}") for i, k in enumerate(keys)], p)


def _run_comm_operator(operator: str, cluster: Cluster, rng: random.Random,
                       profile: dict):
    n = profile.get("n", 64)
    n2 = profile.get("n2", n)
    p = cluster.p
    sigma = cluster.config.sigma
    if operator == "shuffle_by_key":
        shuffle_by_key(cluster, _gen_left(rng, n, p, distinct=True), sigma)
    elif operator == "shuffle_random":
        shuffle_random(cluster, _gen_left(rng, n, p, distinct=False))
    elif operator == "sort":
        sort_distributed(cluster, _gen_left(rng, n, p, distinct=False))
    elif operator == "scan":
        scan_distributed(cluster, _gen_left(rng, n, p, distinct=False),
                         "prefix", COUNT_OP, value=lambda r: 1, label="scan")
    elif operator == "pk_join":
        pk_join(cluster, _gen_left(rng, n, p, distinct=False),
                _gen_right(rng, n2, p, distinct=True), sigma)
    elif operator == "expand":
        table = _gen_left(rng, n, p, distinct=False)
        for part in table.partitions:
            for r in part:
                r.deg = rng.randrange(0, 5)
        expand(cluster, table, lambda r: r.deg, profile.get("m_bound", 4 * n),
               sigma)
    elif operator == "oblivious_join":
        left = _gen_left(rng, n, p, distinct=True)
        right = _gen_right(rng, n2, p, distinct=True)
        oblivious_join(cluster, left, right, sigma,
                       m_bound=profile.get("m_bound", min(n, n2)))
    elif operator == "shuffle_leaky":
        _leaky_shuffle(cluster, _gen_left(rng, n, p, distinct=False))
    else:
        raise UnknownOperator(operator)


def _comm_descriptor(operator: str, config: ClusterConfig,
                     profile: dict) -> Optional[Tuple[List[int], dict]]:
    n = profile.get("n", 64)
    n2 = profile.get("n2", n)
    p = config.p
    sizes = left_table([("x", 1)] * n, p).sizes()
    rsizes = right_table([(1, "y")] * n2, p).sizes()
    if operator == "shuffle_by_key":
        return sizes, {"operator": "shuffle_by_key", "sigma": config.sigma}
    if operator == "shuffle_random":
        return sizes, {"operator": "shuffle_random"}
    if operator == "sort":
        return sizes, {"operator": "sort"}
    if operator == "scan":
        return sizes, {"operator": "scan", "direction": "prefix"}
    if operator == "pk_join":
        return sizes, {"operator": "pk_join", "right_sizes": rsizes,
                       "sigma": config.sigma}
    if operator == "expand":
        return sizes, {"operator": "expand",
                       "m_bound": profile.get("m_bound", 4 * n),
                       "sigma": config.sigma}
    if operator == "oblivious_join":
        return sizes, {"operator": "oblivious_join", "right_sizes": rsizes,
                       "sigma": config.sigma,
                       "m_bound": profile.get("m_bound", min(n, n2)),
                       "inferred": False}
    return None


def check_comm_oblivious(operator: str, config: ClusterConfig,
                         profile: Optional[dict] = None,
                         trials: int = 20, seed: int = 0) -> AuditVerdict:
    """PASS iff all trial transcripts over same-size random inputs are
    pairwise identical and match the size-only simulation."""
    profile = profile or {}
    check_id = f"comm-oblivious/{operator}"
    transcripts = []
    for t in range(trials):
        rng = random.Random(seed * 1_000_003 + t)
        cluster = Cluster(config)
        try:
            _run_comm_operator(operator, cluster, rng, profile)
        except PaddingOverflow as exc:
            return AuditVerdict(check_id, False, t + 1,
                                witness={"trial": t, "error": str(exc)})
        transcripts.append(cluster.transcript)
    base = transcripts[0]
    for t, tr in enumerate(transcripts[1:], start=1):
        div = base.first_divergence(tr)
        if div is not None:
            return AuditVerdict(check_id, False, trials, witness={
                "trial": t, "round": div[0], "sender": div[1],
                "receiver": div[2], "baseline": div[3], "observed": div[4]})
    desc = _comm_descriptor(operator, config, profile)
    if desc is not None:
        sizes, descriptor = desc
        law = simulate_transcript(config, sizes, descriptor)
        div = base.first_divergence(law)
        if div is not None:
            return AuditVerdict(check_id, False, trials, witness={
                "trial": "simulation", "round": div[0], "sender": div[1],
                "receiver": div[2], "baseline": div[3], "simulated": div[4]})
    return AuditVerdict(check_id, True, trials)


# ---------------------------------------------------------------------------
# Computation obliviousness
# ---------------------------------------------------------------------------

def _naive_quicksort(buf: TracedBuffer, lo: int, hi: int) -> None:
    # Negative control: pivot walks depend on values.
    if hi - lo <= 1:
        return
    pivot = buf.read(hi - 1)
    store = lo
    for i in range(lo, hi - 1):
        if buf.read(i).b <= pivot.b:
            tmp = buf.read(store)
            buf.write(store, buf.read(i))
            buf.write(i, tmp)
            store += 1
    tmp = buf.read(store)
    buf.write(store, buf.read(hi - 1))
    buf.write(hi - 1, tmp)
    _naive_quicksort(buf, lo, store)
    _naive_quicksort(buf, store + 1, hi)


def _run_primitive(primitive: str, records: List[Record],
                   rng: random.Random) -> list:
    n = len(records)
    buf = TracedBuffer(records)
    if primitive == "osort":
        osort(buf, key=lambda r: r.b)
    elif primitive == "ocompact":
        ocompact(buf, [r.b & 1 for r in records])
    elif primitive == "odistribute":
        m = 2 * n if n else 1
        slots = rng.sample(range(1, m + 1), n)
        odistribute(buf, slots, m)
    elif primitive == "opartition_sort":
        p = 4
        u = max(2 * ((n + p - 1) // p), 1)
        opartition_sort(buf, [rng.randrange(1, p + 1) for _ in range(n)], p, u)
    elif primitive == "opartition_quick":
        p = 4
        u = max(2 * ((n + p - 1) // p), 1)
        opartition_quick(buf, [rng.randrange(1, p + 1) for _ in range(n)], p, u)
    elif primitive == "quicksort":
        _naive_quicksort(buf, 0, n)
    else:
        raise UnknownOperator(primitive)
    return buf.trace


def check_comp_oblivious(primitive: str, size: int, trials: int = 50,
                         seed: int = 0) -> AuditVerdict:
    """PASS iff access traces are identical across same-size inputs.

    The target-style inputs (marks, slots, classes) vary with the data,
    as they do inside the operators; the trace may depend only on size
    and the public parameters.
    """
    check_id = f"comp-oblivious/{primitive}@{size}"
    base = None
    for t in range(trials):
        rng = random.Random((seed * 1_000_003 + size) * 1_000_003 + t)
        records = [Record(b=rng.randrange(0, max(4 * size, 4)))
                   for _ in range(size)]
        trace = _run_primitive(primitive, records, rng)
        if base is None:
            base = trace
        elif trace != base:
            idx = next(i for i, (x, y) in enumerate(zip(base, trace))
                       if x != y) if len(base) == len(trace) else min(
                           len(base), len(trace))
            return AuditVerdict(check_id, False, t + 1, witness={
                "trial": t, "entry": idx,
                "baseline": base[idx] if idx < len(base) else None,
                "observed": trace[idx] if idx < len(trace) else None})
    return AuditVerdict(check_id, True, trials)


# ---------------------------------------------------------------------------
# Failure-probability probe
# ---------------------------------------------------------------------------

@dataclass
class ProbeResult:
    sigma: int
    n: int
    p: int
    trials: int
    overflows: int
    bound: float  # 2^-sigma

    @property
    def rate(self) -> float:
        return self.overflows / self.trials if self.trials else 0.0

    def as_dict(self) -> dict:
        return {"sigma": self.sigma, "n": self.n, "p": self.p,
                "trials": self.trials, "overflows": self.overflows,
                "rate": self.rate, "bound": self.bound}


def failure_probe(sigma: int, trials: int, n: int = 4096, p: int = 4,
                  seed: int = 0, mode: str = "counts",
                  force_u: Optional[int] = None) -> ProbeResult:
    """Count padding overflows of the keyed shuffle over Monte-Carlo trials.

    mode="counts" draws the per-sender bucket loads directly: under the
    theorem's hypothesis (distinct keys through a random oracle) the p
    loads of one sender are exactly multinomial(n, 1/p), so the overflow
    event is reproduced without moving records. mode="full" runs the real
    operator; use small trial counts there. force_u overrides the bound,
    e.g. n // p to remove all slack.
    """
    u = force_u if force_u is not None else pad_shuffle_by_key(n, p, sigma).u
    overflows = 0
    if mode == "counts":
        rng = np.random.default_rng(np.random.SeedSequence(
            entropy=seed, spawn_key=(3, sigma, n, p)))
        pvals = [1.0 / p] * p
        chunk = 2000
        done = 0
        while done < trials:
            take = min(chunk, trials - done)
            loads = rng.multinomial(n, pvals, size=(take, p))
            overflows += int((loads.max(axis=(1, 2)) > u).sum())
            done += take
    elif mode == "full":
        for t in range(trials):
            rng = random.Random(seed * 1_000_003 + t)
            table = _gen_left(rng, n * p, p, distinct=True)
            config = ClusterConfig(p=p, sigma=sigma, master_seed=seed + t)
            cluster = Cluster(config)
            try:
                if force_u is not None:
                    from .relops import shuffle
                    from .relops.shuffle import derive_hasher
                    hasher = derive_hasher(cluster)
                    shuffle(cluster, table, [force_u] * p,
                            target_of=lambda r: hasher(r.b))
                else:
                    shuffle_by_key(cluster, table, sigma, check_distinct=False)
            except PaddingOverflow:
                overflows += 1
    else:
        raise ValueError("mode must be 'counts' or 'full'")
    return ProbeResult(sigma=sigma, n=n, p=p, trials=trials,
                       overflows=overflows, bound=2.0 ** (-sigma))
