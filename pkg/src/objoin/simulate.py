"""Transcript laws: message sizes from public parameters only.

Every law rebuilds an operator's exact round sequence, matrix by matrix,
from the partition sizes, p, sigma and (where applicable) the public
output bound, without ever touching a record. Random-shuffle rounds are
reproduced bit-for-bit by drawing the same (seed, purpose, server, round)
streams the operator consumes, so a law's output equals the live
transcript on every round, not just the deterministically padded ones.
"""

from __future__ import annotations

import math
from typing import List, Optional, Sequence

import numpy as np

from .cluster import ClusterConfig, Transcript
from .errors import UnknownOperator
from .padding import pad_align, pad_expansion, pad_shuffle_by_key
from .relops.sort import column_rows, sorted_sizes


class _Sim:
    def __init__(self, config: ClusterConfig):
        self.config = config
        self.p = config.p
        self.t = Transcript(config.p, config.element_width)

    @property
    def round_no(self) -> int:
        return len(self.t.rounds)

    def zeros(self) -> List[List[int]]:
        return [[0] * self.p for _ in range(self.p)]

    def add(self, matrix: List[List[int]], label: str) -> None:
        self.t.add_round(matrix, label)

    def rng(self, server: int):
        seq = np.random.SeedSequence(entropy=self.config.master_seed,
                                     spawn_key=(1, server, self.round_no))
        return np.random.default_rng(seq)


def _uniform_rows(sim: _Sim, per_sender: Sequence[int], label: str) -> None:
    sim.add([[u] * sim.p for u in per_sender], label)


def _sim_scan(sim: _Sim, direction: str, label: str) -> None:
    coord = 0 if direction == "prefix" else sim.p - 1
    gather = sim.zeros()
    for i in range(sim.p):
        if i != coord:
            gather[i][coord] = 1
    sim.add(gather, f"{label}-gather")
    scatter = sim.zeros()
    for j in range(sim.p):
        if j != coord:
            scatter[coord][j] = 1
    sim.add(scatter, f"{label}-scatter")


def _sim_random_shuffle(sim: _Sim, sizes: Sequence[int],
                        label: str) -> List[int]:
    """Draw the per-pair counts the live operator will produce; returns
    the received partition sizes."""
    p = sim.p
    matrix = []
    for i in range(p):
        rng = sim.rng(i)
        targets = rng.integers(1, p + 1, size=sizes[i])
        row = [0] * p
        for t in targets:
            row[int(t) - 1] += 1
        matrix.append(row)
    sim.add(matrix, label)
    return [sum(matrix[i][j] for i in range(p)) for j in range(p)]


def _sim_shuffle_by_key(sim: _Sim, sizes: Sequence[int], sigma: int,
                        label: str) -> List[int]:
    plans = [pad_shuffle_by_key(n, sim.p, sigma) for n in sizes]
    _uniform_rows(sim, [pl.u for pl in plans], label)
    return [sum(pl.u for pl in plans)] * sim.p


def _sim_pk_join(sim: _Sim, left_sizes: Sequence[int],
                 right_sizes: Sequence[int], sigma: int,
                 prefix: str = "pkjoin") -> List[int]:
    """Three rounds: both keyed forward shuffles, then the mirrored
    return trip. Returns the output (home) sizes, which equal the left
    input sizes."""
    left_plans = [pad_shuffle_by_key(n, sim.p, sigma) for n in left_sizes]
    _uniform_rows(sim, [pl.u for pl in left_plans], f"{prefix}-shuffle-left")
    right_plans = [pad_shuffle_by_key(n, sim.p, sigma) for n in right_sizes]
    _uniform_rows(sim, [pl.u for pl in right_plans], f"{prefix}-shuffle-right")
    back = [[left_plans[j].u for j in range(sim.p)] for _ in range(sim.p)]
    sim.add(back, f"{prefix}-shuffle-back")
    return list(left_sizes)


def _sim_sort(sim: _Sim, sizes: Sequence[int]) -> List[int]:
    p = sim.p
    r = column_rows(list(sizes), p)
    half = r // 2
    chunk = r // p
    sim.add([[chunk] * p for _ in range(p)], "sort-transpose")
    sim.add([[chunk] * p for _ in range(p)], "sort-untranspose")
    shift = sim.zeros()
    for i in range(p):
        shift[i][(i + 1) % p] = half
    sim.add(shift, "sort-shift")
    unshift = sim.zeros()
    unshift[0][p - 1] = half
    for i in range(1, p):
        unshift[i][i - 1] = half
    sim.add(unshift, "sort-unshift")
    return sorted_sizes(list(sizes), p)


def _sim_degrees(sim: _Sim, first_sizes: Sequence[int],
                 second_sizes: Sequence[int], sigma: int) -> List[int]:
    _sim_scan(sim, "prefix", "deg-rank")
    _sim_scan(sim, "suffix", "deg-selfmax")
    _sim_scan(sim, "prefix", "deg-rank-other")
    _sim_scan(sim, "suffix", "deg-othermax")
    return _sim_pk_join(sim, first_sizes, second_sizes, sigma)


def _sim_infer(sim: _Sim) -> None:
    gather = sim.zeros()
    for i in range(1, sim.p):
        gather[i][0] = 1
    sim.add(gather, "infer-gather")
    bcast = sim.zeros()
    for j in range(1, sim.p):
        bcast[0][j] = 1
    sim.add(bcast, "infer-broadcast")


def _sim_expand(sim: _Sim, sizes: Sequence[int], m_bound: int,
                sigma: int) -> List[int]:
    p = sim.p
    m = math.ceil(m_bound / p) if m_bound > 0 else 0
    n_total = sum(sizes)
    _sim_scan(sim, "prefix", "expand-prefix")
    balanced = _sim_random_shuffle(sim, sizes, "expand-balance")
    plans = [pad_expansion(n_i, n_total, m * p, p, sigma) for n_i in balanced]
    _uniform_rows(sim, [pl.u for pl in plans], "expand-route")
    _sim_scan(sim, "suffix", "expand-fill")
    return [m] * p


def _sim_align(sim: _Sim, m: int, sigma: int) -> None:
    _sim_scan(sim, "prefix", "align-rank")
    _sim_scan(sim, "prefix", "align-start")
    balanced = _sim_random_shuffle(sim, [m] * sim.p, "align-balance")
    plans = [pad_align(n_i, sim.p, sigma) for n_i in balanced]
    _uniform_rows(sim, [pl.u for pl in plans], "align-route")


# ---------------------------------------------------------------------------
# Laws keyed by operator name
# ---------------------------------------------------------------------------

def _law_shuffle(config, sizes, desc) -> Transcript:
    sim = _Sim(config)
    given = desc["sizes"]
    rows = [([u] * sim.p if isinstance(u, int) else list(u)) for u in given]
    sim.add(rows, "shuffle")
    return sim.t


def _law_shuffle_random(config, sizes, desc) -> Transcript:
    sim = _Sim(config)
    _sim_random_shuffle(sim, sizes, "shuffle-random")
    return sim.t


def _law_shuffle_by_key(config, sizes, desc) -> Transcript:
    sim = _Sim(config)
    _sim_shuffle_by_key(sim, sizes, desc["sigma"], "shuffle-by-key")
    return sim.t


def _law_sort(config, sizes, desc) -> Transcript:
    sim = _Sim(config)
    _sim_sort(sim, sizes)
    return sim.t


def _law_scan(config, sizes, desc) -> Transcript:
    sim = _Sim(config)
    _sim_scan(sim, desc.get("direction", "prefix"), "scan")
    return sim.t


def _law_pk_join(config, sizes, desc) -> Transcript:
    sim = _Sim(config)
    _sim_pk_join(sim, sizes, desc["right_sizes"], desc["sigma"])
    return sim.t


def _law_expand(config, sizes, desc) -> Transcript:
    sim = _Sim(config)
    _sim_expand(sim, sizes, desc["m_bound"], desc["sigma"])
    return sim.t


def _law_degrees(config, sizes, desc) -> Transcript:
    sim = _Sim(config)
    _sim_degrees(sim, sizes, desc["second_sizes"], desc["sigma"])
    return sim.t


def _law_join(config, sizes, desc) -> Transcript:
    """Whole-join law. `sizes` are the left partition sizes; the public
    output bound must be supplied (for the no-padding mode it is the
    published exact join size)."""
    sim = _Sim(config)
    sigma = desc["sigma"]
    m_bound = desc["m_bound"]
    right_sizes = desc["right_sizes"]
    left_sorted = _sim_sort(sim, sizes)
    right_sorted = _sim_sort(sim, right_sizes)
    left_home = _sim_degrees(sim, left_sorted, right_sorted, sigma)
    if desc.get("inferred", False):
        _sim_infer(sim)
    _sim_degrees(sim, right_sorted, left_sorted, sigma)
    _sim_expand(sim, left_home, m_bound, sigma)
    right_m = _sim_expand(sim, right_sorted, m_bound, sigma)
    _sim_align(sim, right_m[0] if right_m else 0, sigma)
    return sim.t


LAWS = {
    "shuffle": _law_shuffle,
    "shuffle_random": _law_shuffle_random,
    "shuffle_by_key": _law_shuffle_by_key,
    "sort": _law_sort,
    "scan": _law_scan,
    "pk_join": _law_pk_join,
    "expand": _law_expand,
    "compute_degrees": _law_degrees,
    "oblivious_join": _law_join,
}
