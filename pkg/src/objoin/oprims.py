"""Standalone data-oblivious primitives.

Every routine here touches memory in a pattern that depends only on the
input *size* (and public parameters such as p, U, m), never on record
values. The unit of observation is the (read/write, index) trace captured
by TracedBuffer; microarchitectural effects below that abstraction are out
of scope.

Dummy records are explicit: a boolean flag plus a sentinel key, never a
magic payload value, so tests can scramble dummy payloads and assert real
outputs are unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Iterable, List, Optional, Sequence, Tuple, Union

from .errors import DuplicateTarget, PaddingOverflow, TargetOutOfRange

# Sorts after every real key; real keys must stay below this.
KEY_SENTINEL = 1 << 60


@dataclass(slots=True)
class Record:
    """One fixed-width tuple with its working columns.

    b is the join/sort key. a and c are the opaque payload slots of the
    left and right table. The remaining integer slots are the working
    columns used by the distributed operators: z (inactive rank), origin
    (home server), tgt (target server), gpos (target global position),
    lpos (target local position), deg (repetition count), deg_r / deg_s
    (key degrees in either table), grp (group-start position).
    """

    b: int = 0
    a: Any = None
    c: Any = None
    z: int = 0
    origin: int = 0
    tgt: int = 0
    gpos: int = 0
    lpos: int = 0
    deg: int = 0
    deg_r: int = 0
    deg_s: int = 0
    grp: int = 0
    dummy: bool = False

    def copy(self) -> "Record":
        return Record(self.b, self.a, self.c, self.z, self.origin, self.tgt,
                      self.gpos, self.lpos, self.deg, self.deg_r, self.deg_s,
                      self.grp, self.dummy)


def make_pad() -> Record:
    """Fresh padding dummy; inert in every operator."""
    return Record(b=KEY_SENTINEL, dummy=True)


@dataclass
class OpCounters:
    """Monotone per-server computation counters."""

    comparisons: int = 0
    cmoves: int = 0
    moves: int = 0

    def as_dict(self) -> dict:
        return {"comparisons": self.comparisons, "cmoves": self.cmoves,
                "moves": self.moves}


class TracedBuffer:
    """Record storage that logs every element access.

    The trace is the sequence of (kind, index) pairs with kind in
    {"r", "w"}; for each primitive below, its length and content are a
    function of the buffer length and public parameters only.
    """

    __slots__ = ("storage", "trace")

    def __init__(self, records: Iterable[Record]):
        self.storage: List[Record] = list(records)
        self.trace: List[Tuple[str, int]] = []

    def __len__(self) -> int:
        return len(self.storage)

    def read(self, i: int) -> Record:
        self.trace.append(("r", i))
        return self.storage[i]

    def write(self, i: int, rec: Record) -> None:
        self.trace.append(("w", i))
        self.storage[i] = rec


BufferLike = Union[List[Record], TracedBuffer]

Trace = Optional[List[Tuple[str, int]]]


def _unwrap(buf: BufferLike) -> Tuple[List[Record], Trace]:
    if isinstance(buf, TracedBuffer):
        return buf.storage, buf.trace
    return buf, None


def cmove(cond: int, dest, src):
    """Return src when cond is 1 and dest when cond is 0, branch-free.

    Integers go through the arithmetic form; anything else through a
    two-way tuple select, which executes the same instruction sequence
    for either condition value.
    """
    if isinstance(dest, int) and isinstance(src, int) and not isinstance(dest, bool):
        return dest + cond * (src - dest)
    return (dest, src)[cond]


def bitonic_comparator_count(n: int) -> int:
    """Number of compare-exchanges the sorting network runs on n slots."""
    if n <= 1:
        return 0
    p2 = 1
    while p2 < n:
        p2 <<= 1
    k = p2.bit_length() - 1
    return (p2 // 2) * k * (k + 1) // 2


# ---------------------------------------------------------------------------
# OSort: bitonic network
# ---------------------------------------------------------------------------

def osort(buf: BufferLike, key: Callable[[Record], Any],
          counters: Optional[OpCounters] = None) -> BufferLike:
    """Sort ascending by the extracted key with a bitonic network.

    The length is padded internally to the next power of two with
    max-sentinel pads, stripped before returning. The network shape
    depends only on the padded length. Not stable; callers that need
    deterministic grouping pass composite keys.
    """
    data, trace = _unwrap(buf)
    _osort_core(data, key, trace, counters)
    return buf


def _osort_core(data: List[Record], key: Callable[[Record], Any],
                trace: Trace, counters: Optional[OpCounters]) -> None:
    n = len(data)
    if counters is not None:
        cnt = bitonic_comparator_count(n)
        counters.comparisons += cnt
        counters.cmoves += cnt
    if n <= 1:
        return
    p2 = 1
    while p2 < n:
        p2 <<= 1
    # Keys ride in a parallel array so each element is keyed exactly once.
    keys = [(0, key(r)) for r in data] + [(1,) for _ in range(p2 - n)]
    work = data + [make_pad() for _ in range(p2 - n)]
    if trace is None:
        _bitonic_fast(work, keys, p2)
    else:
        _bitonic_traced(work, keys, p2, trace)
    data[:] = work[:n]


def _bitonic_fast(work: list, keys: list, p2: int) -> None:
    k = 2
    while k <= p2:
        j = k >> 1
        while j > 0:
            for i in range(p2):
                l = i ^ j
                if l > i:
                    if (keys[i] > keys[l]) == ((i & k) == 0):
                        work[i], work[l] = work[l], work[i]
                        keys[i], keys[l] = keys[l], keys[i]
            j >>= 1
        k <<= 1


def _bitonic_traced(work: list, keys: list, p2: int, trace: list) -> None:
    # Same network; every comparator reads and writes both slots.
    k = 2
    while k <= p2:
        j = k >> 1
        while j > 0:
            for i in range(p2):
                l = i ^ j
                if l > i:
                    trace.append(("r", i))
                    trace.append(("r", l))
                    swap = 1 if (keys[i] > keys[l]) == ((i & k) == 0) else 0
                    pair = ((work[i], work[l]), (work[l], work[i]))[swap]
                    kpair = ((keys[i], keys[l]), (keys[l], keys[i]))[swap]
                    trace.append(("w", i))
                    trace.append(("w", l))
                    work[i], work[l] = pair
                    keys[i], keys[l] = kpair
            j >>= 1
        k <<= 1


# ---------------------------------------------------------------------------
# OCompact: recursive offset compaction network, O(n log n)
# ---------------------------------------------------------------------------

def ocompact(buf: BufferLike, marks: Sequence[int],
             counters: Optional[OpCounters] = None) -> BufferLike:
    """Move all marked records in front of unmarked ones.

    Order among marked records is preserved, order among unmarked ones is
    arbitrary; the record multiset is unchanged. Runs the recursive
    offset-compaction network on a power-of-two working array; general
    lengths are handled by prepending marked pads, which land in the
    leading slots and are sliced off.
    """
    data, trace = _unwrap(buf)
    _ocompact_core(data, marks, trace, counters)
    return buf


def _ocompact_core(data: List[Record], marks: Sequence[int], trace: Trace,
                   counters: Optional[OpCounters]) -> None:
    n = len(data)
    if len(marks) != n:
        raise ValueError("marks length must equal buffer length")
    if n <= 1:
        return
    p2 = 1
    while p2 < n:
        p2 <<= 1
    extra = p2 - n
    packed = [(make_pad(), 0) for _ in range(extra)] + \
             [(data[i], 0) for i in range(n)]
    wmarks = [1] * extra + [1 if m else 0 for m in marks]
    if counters is not None:
        counters.cmoves += _offcompact_cost(p2)
        counters.moves += _offcompact_cost(p2)
    _offcompact(packed, wmarks, 0, p2, 0, trace, -extra)
    data[:] = [packed[extra + i][0] for i in range(n)]


def _offcompact_cost(n: int) -> int:
    if n <= 1:
        return 0
    return (n // 2) + 2 * _offcompact_cost(n // 2)


def _offcompact(packed: list, marks: list, lo: int, n: int, z: int,
                trace: Trace, base: int) -> None:
    """Compact marked entries of packed[lo:lo+n] to cyclic offset z (n = 2^k).

    Entries are (record, payload) pairs so callers can carry a side value
    through the network. Marked entries keep their relative order.
    """
    if n == 1:
        return
    if n == 2:
        b = ((1 - marks[lo]) & marks[lo + 1]) ^ z
        _cswap(packed, marks, lo, lo + 1, b, trace, base)
        return
    h = n // 2
    m1 = 0
    for i in range(lo, lo + h):
        m1 += marks[i]
    z1 = z % h
    z2 = (z + m1) % h
    _offcompact(packed, marks, lo, h, z1, trace, base)
    _offcompact(packed, marks, lo + h, h, z2, trace, base)
    s = (1 if z1 + m1 >= h else 0) ^ (1 if z >= h else 0)
    for i in range(lo, lo + h):
        b = s ^ (1 if (i - lo) >= z2 else 0)
        _cswap(packed, marks, i, i + h, b, trace, base)


def _cswap(packed: list, marks: list, i: int, j: int, b: int,
           trace: Trace, base: int) -> None:
    if trace is not None:
        trace.append(("r", base + i))
        trace.append(("r", base + j))
        trace.append(("w", base + i))
        trace.append(("w", base + j))
    pair = ((packed[i], packed[j]), (packed[j], packed[i]))[b]
    mpair = ((marks[i], marks[j]), (marks[j], marks[i]))[b]
    packed[i], packed[j] = pair
    marks[i], marks[j] = mpair


# ---------------------------------------------------------------------------
# ODistribute: monotone routing network, O(n log^2 n + m log m)
# ---------------------------------------------------------------------------

def odistribute(buf: BufferLike, targets: Sequence[int], m: int,
                counters: Optional[OpCounters] = None) -> List[Record]:
    """Scatter records to 1-based target slots of a length-m output.

    Real records carry distinct targets in [1, m]; dummies carry target 0
    and are discarded. Targets need not arrive sorted: an internal osort
    by target runs first, then log m passes shift each record right by
    power-of-two strides until it sits at its slot. The input may be
    longer than m as long as at most m records are real.
    """
    data, trace = _unwrap(buf)
    n = len(data)
    if len(targets) != n:
        raise ValueError("targets length must equal buffer length")
    work = []
    for r, t in zip(data, targets):
        rc = r.copy()
        rc.lpos = 0 if rc.dummy else t
        work.append(rc)
    if trace is not None:
        trace.extend(("r", i) for i in range(n))
    _osort_core(work, lambda r: (1 if r.lpos == 0 else 0, r.lpos),
                trace, counters)

    # Oblivious validity flags: one fixed pass, checked once afterwards.
    dup = 0
    oob = 0
    realcount = 0
    prev_t = 0
    prev_real = 0
    for r in work:
        real = 0 if r.lpos == 0 else 1
        realcount += real
        oob |= real & (1 if (r.lpos < 1 or r.lpos > m) else 0)
        dup |= real & prev_real & (1 if r.lpos == prev_t else 0)
        prev_t, prev_real = r.lpos, real
    if counters is not None:
        counters.cmoves += n
    if oob:
        raise TargetOutOfRange(f"distribution target outside [1, {m}]")
    if dup:
        raise DuplicateTarget("two real records share a distribution slot")
    if realcount > m:
        raise TargetOutOfRange(f"{realcount} real records exceed {m} slots")

    # Reals occupy a prefix after the sort; pad or cut the dummy tail to m.
    if len(work) < m:
        work.extend(make_pad() for _ in range(m - len(work)))
    else:
        del work[m:]

    d = 1
    while d < m:
        d <<= 1
    d >>= 1
    steps = 0
    while d >= 1:
        for i in range(m - 1 - d, -1, -1):
            r = work[i]
            move = 1 if (r.lpos != 0 and (r.lpos - 1) - i >= d) else 0
            if trace is not None:
                trace.append(("r", i))
                trace.append(("r", i + d))
                trace.append(("w", i))
                trace.append(("w", i + d))
            if move:
                work[i], work[i + d] = work[i + d], work[i]
            steps += 1
        d >>= 1
    if counters is not None:
        counters.moves += steps
        counters.cmoves += steps

    out = []
    for r in work:
        if r.lpos == 0:
            out.append(make_pad())
        else:
            r.lpos = 0
            out.append(r)
    return out


# ---------------------------------------------------------------------------
# OPartition: sort-based and quicksort-style variants
# ---------------------------------------------------------------------------

def _bounds_list(p: int, bound: Union[int, Sequence[int]]) -> List[int]:
    if isinstance(bound, int):
        return [bound] * p
    bounds = list(bound)
    if len(bounds) != p:
        raise ValueError("need one bound per bucket")
    return bounds


def _class_counts_check(targets: Sequence[int], p: int,
                        bounds: List[int]) -> None:
    # Fixed-shape tally over all p classes, single check at the end.
    counts = [0] * (p + 1)
    for t in targets:
        for j in range(1, p + 1):
            counts[j] += 1 if t == j else 0
    over = 0
    for j in range(1, p + 1):
        over |= 1 if counts[j] > bounds[j - 1] else 0
    if over:
        raise PaddingOverflow("a target class exceeds its bucket bound")


def opartition_sort(buf: BufferLike, targets: Sequence[int], p: int,
                    bound: Union[int, Sequence[int]],
                    counters: Optional[OpCounters] = None) -> List[List[Record]]:
    """Partition into p padded buckets via sort + position + distribute."""
    data, trace = _unwrap(buf)
    clean = [0 if r.dummy else t for r, t in zip(data, targets)]
    bounds = _bounds_list(p, bound)
    _class_counts_check(clean, p, bounds)
    total = sum(bounds)
    offsets = [0] * (p + 1)
    for j in range(p):
        offsets[j + 1] = offsets[j] + bounds[j]

    work = []
    for r, t in zip(data, clean):
        rc = r.copy()
        rc.tgt = t
        work.append(rc)
    if trace is not None:
        trace.extend(("r", i) for i in range(len(work)))
    _osort_core(work, lambda r: (1 if r.tgt == 0 else 0, r.tgt),
                trace, counters)

    # Slot of each real record: class offset plus rank within its class.
    positions = []
    rank = 0
    prev_t = 0
    for r in work:
        t = r.tgt
        real = 0 if t == 0 else 1
        rank = (rank + 1) * (1 if (real and t == prev_t) else 0)
        off = 0
        for j in range(1, p + 1):
            off += offsets[j - 1] * (1 if t == j else 0)
        positions.append(real * (off + rank + 1))
        prev_t = t
    if counters is not None:
        counters.cmoves += len(work) * (p + 1)

    for r in work:
        r.tgt = 0
    tb = TracedBuffer(work)
    placed = odistribute(tb if trace is not None else work, positions, total,
                         counters=counters)
    if trace is not None:
        trace.extend(tb.trace)
    return [placed[offsets[j]:offsets[j + 1]] for j in range(p)]


def opartition_quick(buf: BufferLike, targets: Sequence[int], p: int,
                     bound: Union[int, Sequence[int]],
                     counters: Optional[OpCounters] = None) -> List[List[Record]]:
    """Partition into p padded buckets by recursive pivoting on the
    target range, compacting movers left at each of the ceil(log2 p)
    levels. Same contract as opartition_sort at O(n log n log p).
    """
    data, trace = _unwrap(buf)
    clean = [0 if r.dummy else t for r, t in zip(data, targets)]
    bounds = _bounds_list(p, bound)
    _class_counts_check(clean, p, bounds)
    total = sum(bounds)
    offsets = [0] * (p + 1)
    for j in range(p):
        offsets[j + 1] = offsets[j] + bounds[j]

    packed = [(r.copy(), t) for r, t in zip(data, clean)]
    if trace is not None:
        trace.extend(("r", i) for i in range(len(packed)))
    if len(packed) > total:
        # Only dummies can be shed: compact reals forward, cut the tail.
        _pow2_compact(packed, [1 if t != 0 else 0 for _, t in packed],
                      trace, counters)
        del packed[total:]
    while len(packed) < total:
        packed.append((make_pad(), 0))

    _quick_recurse(packed, 0, p, offsets, trace, counters)
    out = [rec for rec, _ in packed]
    return [out[offsets[j]:offsets[j + 1]] for j in range(p)]


def _pow2_compact(packed: list, marks: List[int], trace: Trace,
                  counters: Optional[OpCounters]) -> None:
    """In-place marked-to-front compaction of a (record, tag) list."""
    n = len(packed)
    if n <= 1:
        return
    p2 = 1
    while p2 < n:
        p2 <<= 1
    extra = p2 - n
    work = [(make_pad(), 0) for _ in range(extra)] + packed
    wmarks = [1] * extra + marks
    if counters is not None:
        counters.cmoves += _offcompact_cost(p2)
        counters.moves += _offcompact_cost(p2)
    _offcompact(work, wmarks, 0, p2, 0, trace, -extra)
    packed[:] = work[extra:]


def _quick_recurse(packed: list, lo_b: int, hi_b: int, offsets: List[int],
                   trace: Trace, counters: Optional[OpCounters]) -> None:
    if hi_b - lo_b <= 1:
        return
    mid_b = (lo_b + hi_b) // 2
    lo, hi = offsets[lo_b], offsets[hi_b]
    left_cap = offsets[mid_b] - offsets[lo_b]
    c = 0
    for i in range(lo, hi):
        c += 1 if 0 < packed[i][1] <= mid_b else 0
    marks = []
    for i in range(lo, hi):
        t = packed[i][1]
        zfill = 1 if (t == 0 and c < left_cap) else 0
        c += zfill
        marks.append(zfill | (1 if 0 < t <= mid_b else 0))
    if counters is not None:
        counters.cmoves += 2 * (hi - lo)
    _range_compact(packed, lo, hi, marks, trace, counters)
    _quick_recurse(packed, lo_b, mid_b, offsets, trace, counters)
    _quick_recurse(packed, mid_b, hi_b, offsets, trace, counters)


def _range_compact(packed: list, lo: int, hi: int, marks: List[int],
                   trace: Trace, counters: Optional[OpCounters]) -> None:
    n = hi - lo
    if n <= 1:
        return
    p2 = 1
    while p2 < n:
        p2 <<= 1
    extra = p2 - n
    work = [(make_pad(), 0) for _ in range(extra)] + packed[lo:hi]
    wmarks = [1] * extra + marks
    if counters is not None:
        counters.cmoves += _offcompact_cost(p2)
        counters.moves += _offcompact_cost(p2)
    _offcompact(work, wmarks, 0, p2, 0, trace, lo - extra)
    packed[lo:hi] = work[extra:]


# ---------------------------------------------------------------------------
# Local prefix / suffix scans
# ---------------------------------------------------------------------------

@dataclass
class ScanOperator:
    """Associative value combiner with its identity element."""

    combine: Callable[[Any, Any], Any]
    identity: Any = None


def scan_local(buf: BufferLike, direction: str, op: ScanOperator,
               key: Optional[Callable[[Record], Any]] = None,
               value: Optional[Callable[[Record], Any]] = None,
               counters: Optional[OpCounters] = None) -> List[Any]:
    """Single-pass keyed prefix or suffix scan over the buffer.

    With a key extractor the running value resets whenever the key
    changes, matching the key-value lifting of the combiner: a prefix
    scan anchors on the right operand's key, a suffix scan on the left's.
    Both combiner operands are evaluated at every step so the pass shape
    is data-independent.
    """
    if direction not in ("prefix", "suffix"):
        raise ValueError("direction must be 'prefix' or 'suffix'")
    data, trace = _unwrap(buf)
    n = len(data)
    value = value or (lambda r: r)
    out: List[Any] = [None] * n
    if n == 0:
        return out
    order = range(n) if direction == "prefix" else range(n - 1, -1, -1)
    acc_v = None
    acc_k = object()  # matches no real key
    first = 1
    for i in order:
        if trace is not None:
            trace.append(("r", i))
        r = data[i]
        k = key(r) if key is not None else 0
        v = value(r)
        same = 0 if first else (1 if k == acc_k else 0)
        if direction == "prefix":
            combined = v if first else op.combine(acc_v, v)
        else:
            combined = v if first else op.combine(v, acc_v)
        acc_v = (v, combined)[same]
        acc_k = k
        out[i] = acc_v
        first = 0
    if counters is not None:
        counters.cmoves += n
    return out
