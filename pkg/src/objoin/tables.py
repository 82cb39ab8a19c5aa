"""Tables, dataset files and dataset statistics.

Storage boundary: plain CSV with a one-line header; join keys are
integers, payloads are kept as opaque strings. A distributed table is the
same rows dealt round-robin over the p partitions, which keeps initial
sizes balanced and loading deterministic.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ParseError
from .oprims import Record


@dataclass
class DistTable:
    """A logically single table split into p partitions with public sizes."""

    partitions: List[List[Record]]
    columns: Tuple[str, ...] = ("a", "b")

    @property
    def p(self) -> int:
        return len(self.partitions)

    def sizes(self) -> List[int]:
        return [len(pt) for pt in self.partitions]

    @property
    def total(self) -> int:
        return sum(self.sizes())

    def records(self):
        for pt in self.partitions:
            yield from pt

    def real_count(self) -> int:
        return sum(1 for r in self.records() if not r.dummy)

    def rows(self, real_only: bool = True) -> List[tuple]:
        """Materialize rows as tuples following self.columns."""
        out = []
        for r in self.records():
            if real_only and r.dummy:
                continue
            out.append(tuple(getattr(r, col) for col in self.columns))
        return out

    def map_copy(self, fn=None) -> "DistTable":
        parts = [[(fn(r) if fn else r.copy()) for r in pt]
                 for pt in self.partitions]
        return DistTable(parts, self.columns)


def deal_records(records: Sequence[Record], p: int,
                 columns: Tuple[str, ...]) -> DistTable:
    parts: List[List[Record]] = [[] for _ in range(p)]
    for idx, r in enumerate(records):
        parts[idx % p].append(r)
    return DistTable(parts, columns)


def left_table(pairs: Iterable[Tuple[object, int]], p: int) -> DistTable:
    """R(A, B): payload a, join key b."""
    recs = [Record(b=int(k), a=v) for v, k in pairs]
    return deal_records(recs, p, ("a", "b"))


def right_table(pairs: Iterable[Tuple[int, object]], p: int) -> DistTable:
    """S(B, C): join key b, payload c."""
    recs = [Record(b=int(k), c=v) for k, v in pairs]
    return deal_records(recs, p, ("b", "c"))


# ---------------------------------------------------------------------------
# CSV table files
# ---------------------------------------------------------------------------

def write_table(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def read_table(path: str) -> Tuple[List[str], List[List[str]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            return [], []
        rows = [row for row in reader if row]
    return [h.strip() for h in header], rows


def table_column(header: List[str], rows: List[List[str]], name: str,
                 path: str = "<table>") -> List[str]:
    try:
        idx = header.index(name)
    except ValueError:
        raise ParseError(f"{path}: no column named {name!r} in {header}")
    return [row[idx] for row in rows]


def load_distributed(path: str, key_col: str, payload_col: str, p: int,
                     side: str = "left") -> DistTable:
    header, rows = read_table(path)
    keys = table_column(header, rows, key_col, path)
    payloads = table_column(header, rows, payload_col, path)
    try:
        ikeys = [int(k) for k in keys]
    except ValueError as exc:
        raise ParseError(f"{path}: non-integer join key: {exc}")
    if side == "left":
        return left_table(zip(payloads, ikeys), p)
    return right_table(zip(ikeys, payloads), p)


# ---------------------------------------------------------------------------
# Generators and loaders
# ---------------------------------------------------------------------------

def zipf_keys(rows: int, domain: int, z: float, seed: int) -> List[int]:
    """Keys in [1, domain] with frequency proportional to rank^-z.

    z = 0 is uniform. Uses the explicit normalized weight vector rather
    than a tail-unbounded sampler so the domain is exact.
    """
    if rows < 1 or domain < 1 or z < 0:
        raise ValueError("rows >= 1, domain >= 1, z >= 0 required")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed,
                                                       spawn_key=(2, 0, 0)))
    ranks = np.arange(1, domain + 1, dtype=np.float64)
    weights = ranks ** (-z)
    weights /= weights.sum()
    keys = rng.choice(domain, size=rows, p=weights) + 1
    return [int(k) for k in keys]


def gen_zipf(rows: int, domain: int, z: float, seed: int,
             out_path: Optional[str] = None) -> List[Tuple[int, int]]:
    """Two-column table (key, value): Zipf(z) key, row index value."""
    keys = zipf_keys(rows, domain, z, seed)
    pairs = [(k, i + 1) for i, k in enumerate(keys)]
    if out_path:
        write_table(out_path, ("key", "value"), pairs)
    return pairs


def load_edges(path: str) -> List[Tuple[int, int]]:
    """Whitespace- or comma-separated integer pairs; '#' comments skipped."""
    edges: List[Tuple[int, int]] = []
    with open(path) as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise ParseError(f"expected two fields, got {len(parts)}", line=ln)
            try:
                edges.append((int(parts[0]), int(parts[1])))
            except ValueError:
                raise ParseError(f"non-integer edge {parts!r}", line=ln)
    return edges


def edges_to_table(edges: Sequence[Tuple[int, int]], out_path: str) -> None:
    write_table(out_path, ("src", "dst"), edges)


# ---------------------------------------------------------------------------
# Dataset statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DatasetStats:
    """Join-shape statistics of a table pair."""

    n1: int
    n2: int
    m: int
    alpha1: int
    alpha2: int

    @property
    def skewness(self) -> float:
        """l-infinity skewness alpha1 * alpha2 / m (0 for an empty join)."""
        return (self.alpha1 * self.alpha2 / self.m) if self.m else 0.0

    def as_dict(self) -> dict:
        return {"n1": self.n1, "n2": self.n2, "m": self.m,
                "alpha1": self.alpha1, "alpha2": self.alpha2,
                "skewness": self.skewness}


def max_degree(keys: Iterable[int]) -> int:
    counts = Counter(keys)
    return max(counts.values()) if counts else 0


def join_stats(r_keys: Sequence[int], s_keys: Sequence[int]) -> DatasetStats:
    cr, cs = Counter(r_keys), Counter(s_keys)
    m = sum(cr[k] * cs.get(k, 0) for k in cr)
    return DatasetStats(n1=len(r_keys), n2=len(s_keys), m=m,
                        alpha1=max(cr.values()) if cr else 0,
                        alpha2=max(cs.values()) if cs else 0)
