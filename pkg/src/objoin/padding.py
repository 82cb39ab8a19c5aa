"""Closed-form padding planners for the padded shuffles.

Each planner turns public sizes into a per-sender bucket bound U and a
Chernoff slack factor c such that the probability of any bucket
overflowing is at most 2^-sigma. Logarithms are base 2 throughout: sigma
is a bit budget and the sigma + 2 log p term absorbs a union bound over
the p^2 sender/receiver pairs.

The 2.08 constant is deliberately stored with two decimals; it is not
rewritten as 3 ln 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

CHERNOFF_CONSTANT = 2.08


@dataclass(frozen=True)
class PaddingPlan:
    """Per-sender bucket bound with its slack and echoed inputs."""

    theorem: str
    u: int
    c: float
    n_i: int
    p: int
    sigma: int
    n_total: Optional[int] = None
    m_bound: Optional[int] = None

    def as_dict(self) -> dict:
        d = {"theorem": self.theorem, "u": self.u, "c": self.c,
             "n_i": self.n_i, "p": self.p, "sigma": self.sigma}
        if self.n_total is not None:
            d["n_total"] = self.n_total
        if self.m_bound is not None:
            d["m_bound"] = self.m_bound
        return d


def _log2p_term(sigma: int, p: int) -> float:
    return sigma + 2 * math.log2(p) if p > 1 else float(sigma)


def pad_shuffle_by_key(n_i: int, p: int, sigma: int) -> PaddingPlan:
    """Bucket bound for hashing per-sender-distinct keys to p servers.

    U = ceil((1 + c) n_i / p) with c = sqrt(2.08 p (sigma + 2 log p) / n_i);
    with these sizes the shuffle overflows with probability at most
    2^-sigma.
    """
    if n_i == 0:
        return PaddingPlan("shuffle_by_key", 0, 0.0, 0, p, sigma)
    c = math.sqrt(CHERNOFF_CONSTANT * p * _log2p_term(sigma, p) / n_i)
    u = math.ceil((1 + c) * n_i / p)
    return PaddingPlan("shuffle_by_key", u, c, n_i, p, sigma)


def pad_expansion(n_i: int, n_total: int, m_bound: int, p: int,
                  sigma: int) -> PaddingPlan:
    """Bucket bound for the position-routing shuffle inside expansion.

    n_i is the sender's size after the balancing random shuffle, n_total
    the expansion input size, m_bound the public output size. With
    m = m_bound / p:

        U = ceil((1 + c) n_i min(m / n_total, 1))
        c = sqrt(2.08 max(n_total / m, 1) (sigma + 2 log p) / n_i)

    Summed over senders and receivers this costs min(m_bound, n_total p)
    up to the (1 + c) slack.
    """
    if n_i == 0 or m_bound == 0:
        return PaddingPlan("expansion", 0, 0.0, n_i, p, sigma,
                           n_total=n_total, m_bound=m_bound)
    m = m_bound / p
    c = math.sqrt(CHERNOFF_CONSTANT * max(n_total / m, 1.0)
                  * _log2p_term(sigma, p) / n_i)
    u = math.ceil((1 + c) * n_i * min(m / n_total, 1.0))
    return PaddingPlan("expansion", u, c, n_i, p, sigma,
                       n_total=n_total, m_bound=m_bound)


def pad_align(n_i: int, p: int, sigma: int) -> PaddingPlan:
    """Bucket bound for the alignment shuffle after a random shuffle.

    Same closed form as pad_shuffle_by_key, applied to the sender sizes
    realized by the balancing random shuffle.
    """
    if n_i == 0:
        return PaddingPlan("align", 0, 0.0, 0, p, sigma)
    c = math.sqrt(CHERNOFF_CONSTANT * p * _log2p_term(sigma, p) / n_i)
    u = math.ceil((1 + c) * n_i / p)
    return PaddingPlan("align", u, c, n_i, p, sigma)
