"""Deterministic simulated p-server cluster.

Servers live in one process. A round is: every server runs a local phase,
then every ordered pair (i, j) exchanges a message, possibly empty. The
transcript records the element count of all p^2 messages of every round,
self-addressed ones included, because the all-to-all operators count the
elements they place in their own bucket as communication too. Retained
local state is not a message and costs nothing.

Randomness is drawn from counter-based streams keyed by (master seed,
purpose, server, round); consumption order depends only on public sizes,
which turns the obliviousness checks into exact equality tests.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import UnknownOperator
from .oprims import OpCounters, Record

_PURPOSE_CODES = {
    "shuffle_random": 1,
    "dataset": 2,
    "audit": 3,
}


@dataclass(frozen=True)
class ClusterConfig:
    """Public cluster parameters."""

    p: int
    sigma: int = 40
    element_width: int = 64
    master_seed: int = 0

    def __post_init__(self):
        if self.p < 1 or self.sigma < 1 or self.element_width < 1:
            raise ValueError("p, sigma and element_width must be positive")

    def as_dict(self) -> dict:
        return {"p": self.p, "sigma": self.sigma,
                "element_width": self.element_width,
                "master_seed": self.master_seed}


class Transcript:
    """Observable message sizes: one p x p element-count matrix per round."""

    def __init__(self, p: int, element_width: int):
        self.p = p
        self.element_width = element_width
        self.rounds: List[dict] = []

    def add_round(self, matrix: List[List[int]], label: str = "") -> None:
        self.rounds.append({"label": label, "matrix": matrix})

    def entries(self):
        """Yield (round, sender, receiver, elements, bytes), totally
        ordered by (round, sender, receiver). Indices are 1-based."""
        for k, rnd in enumerate(self.rounds):
            mat = rnd["matrix"]
            for i in range(self.p):
                for j in range(self.p):
                    n = mat[i][j]
                    yield (k + 1, i + 1, j + 1, n, n * self.element_width)

    @property
    def total_elements(self) -> int:
        return sum(sum(row) for rnd in self.rounds for row in rnd["matrix"])

    @property
    def total_bytes(self) -> int:
        return self.total_elements * self.element_width

    def matrices(self) -> List[List[List[int]]]:
        return [rnd["matrix"] for rnd in self.rounds]

    def __eq__(self, other) -> bool:
        return isinstance(other, Transcript) and self.matrices() == other.matrices()

    def first_divergence(self, other: "Transcript"):
        """(round, sender, receiver, self_size, other_size) of the first
        differing entry, or None when transcripts agree."""
        a, b = self.matrices(), other.matrices()
        for k in range(max(len(a), len(b))):
            if k >= len(a) or k >= len(b):
                return (k + 1, 0, 0,
                        None if k >= len(a) else "present",
                        None if k >= len(b) else "present")
            for i in range(self.p):
                for j in range(self.p):
                    if a[k][i][j] != b[k][i][j]:
                        return (k + 1, i + 1, j + 1, a[k][i][j], b[k][i][j])
        return None

    def to_dict(self) -> dict:
        return {"element_width": self.element_width, "p": self.p,
                "rounds": self.rounds}


@dataclass
class CostReport:
    """Communication and computation ledger for one run."""

    config: dict
    rounds: List[dict]
    totals: dict
    op_counters: List[dict]
    bound_formulas: List[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"config": self.config, "rounds": self.rounds,
                "totals": self.totals, "op_counters": self.op_counters,
                "bound_formulas": self.bound_formulas}

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)


class Cluster:
    """Round-structured execution harness with an exact transcript."""

    def __init__(self, config: ClusterConfig):
        self.config = config
        self.transcript = Transcript(config.p, config.element_width)
        self.counters = [OpCounters() for _ in range(config.p)]

    @property
    def p(self) -> int:
        return self.config.p

    @property
    def round_no(self) -> int:
        """Index the next exchange will get (0-based)."""
        return len(self.transcript.rounds)

    def rng(self, purpose: str, server: int, round_no: Optional[int] = None):
        """Stream keyed by (seed, purpose, server, round); consumption
        order must depend only on public sizes."""
        code = _PURPOSE_CODES[purpose]
        rnd = self.round_no if round_no is None else round_no
        seq = np.random.SeedSequence(entropy=self.config.master_seed,
                                     spawn_key=(code, server, rnd))
        return np.random.default_rng(seq)

    def exchange(self, outboxes: List[List[List[Record]]],
                 label: str = "") -> List[List[Record]]:
        """Deliver outboxes[i][j] from server i to server j.

        Returns inboxes: inbox[j] is the concatenation of the messages
        from senders 1..p in sender order. Every message size lands in
        the transcript, zero and self-addressed ones included.
        """
        p = self.p
        if len(outboxes) != p or any(len(row) != p for row in outboxes):
            raise ValueError("outboxes must be a p x p grid")
        matrix = [[len(outboxes[i][j]) for j in range(p)] for i in range(p)]
        self.transcript.add_round(matrix, label)
        inboxes: List[List[Record]] = [[] for _ in range(p)]
        for i in range(p):
            for j in range(p):
                inboxes[j].extend(outboxes[i][j])
        return inboxes

    def report(self, bound_formulas: Optional[List[dict]] = None) -> CostReport:
        return CostReport(
            config=self.config.as_dict(),
            rounds=self.transcript.rounds,
            totals={"comm_elements": self.transcript.total_elements,
                    "comm_bytes": self.transcript.total_bytes,
                    "rounds": len(self.transcript.rounds)},
            op_counters=[c.as_dict() for c in self.counters],
            bound_formulas=list(bound_formulas or []),
        )


# A program phase maps (server index, local records) to (kept records,
# outboxes to the p servers); the next local dataset is kept + inbox.
Phase = Callable[[int, List[Record]], Tuple[List[Record], List[List[Record]]]]


def run_rounds(cluster: Cluster, partitions: List[List[Record]],
               program: Sequence[Phase],
               labels: Optional[Sequence[str]] = None):
    """Run a round program over the partitions.

    Deterministic given (config, input, program): phases run in server
    order and the exchange is a barrier. Returns (partitions, transcript,
    report).
    """
    parts = [list(pt) for pt in partitions]
    for k, phase in enumerate(program):
        kept: List[List[Record]] = []
        outboxes: List[List[List[Record]]] = []
        for i in range(cluster.p):
            keep, out = phase(i, parts[i])
            kept.append(list(keep))
            outboxes.append([list(msg) for msg in out])
        label = labels[k] if labels else f"round-{k}"
        inboxes = cluster.exchange(outboxes, label)
        parts = [kept[j] + inboxes[j] for j in range(cluster.p)]
    return parts, cluster.transcript, cluster.report()


def simulate_transcript(config: ClusterConfig, sizes: Sequence[int],
                        descriptor: dict) -> Transcript:
    """Simulator for a padded operator's transcript.

    Produces the message-size matrices from the public partition sizes
    and the descriptor's public parameters alone, without touching any
    record. Random-shuffle rounds are reproduced by drawing the same
    seed-keyed streams the operator consumes. Raises UnknownOperator for
    descriptors without a registered law.
    """
    from . import simulate as _laws  # local import; laws live beside relops

    op = descriptor.get("operator")
    law = _laws.LAWS.get(op)
    if law is None:
        raise UnknownOperator(f"no transcript law for operator {op!r}")
    return law(config, list(sizes), descriptor)
