"""Exact maximum subset sum under a capacity, two independent ways.

``max_sum_bitset`` scales to a common denominator and runs integer knapsack
reachability on a Python int used as a bitset.  ``best_subset_dfs`` is a
branch-and-bound search that also returns a witness set; it is the fallback
when the common denominator is too large for a table.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .core import common_denominator

BITSET_LIMIT = 1 << 24


def max_sum_bitset(sizes: Sequence[Fraction], cap: Fraction = Fraction(1)):
    """Largest subset sum <= cap, or None when the scaled table would be too big."""
    d = common_denominator(list(sizes) + [cap])
    top = cap * d
    if top > BITSET_LIMIT:
        return None
    top = int(top)
    mask = (1 << (top + 1)) - 1
    reach = 1
    for a in sizes:
        w = int(a * d)
        if w <= top:
            reach = (reach | (reach << w)) & mask
    return Fraction(reach.bit_length() - 1, d)


def best_subset_dfs(sizes: Sequence[Fraction], cap: Fraction = Fraction(1), node_cap: int | None = None):
    """(best sum, sorted index tuple) of a maximum subset sum <= cap.

    Items are explored largest first with a remaining-total bound; the first
    set reaching the optimum is returned.
    """
    order = sorted(range(len(sizes)), key=lambda i: (-sizes[i], i))
    vals = [sizes[i] for i in order]
    suffix = [Fraction(0)] * (len(vals) + 1)
    for j in range(len(vals) - 1, -1, -1):
        suffix[j] = suffix[j + 1] + vals[j]
    best = [Fraction(0), ()]
    chosen = []
    nodes = 0

    def rec(j, total):
        nonlocal nodes
        nodes += 1
        if node_cap is not None and nodes > node_cap:
            raise OverflowError("subset search exceeded its node cap")
        if total > best[0]:
            best[0] = total
            best[1] = tuple(chosen)
        if best[0] == cap or j == len(vals):
            return
        if total + suffix[j] <= best[0]:
            return
        if total + vals[j] <= cap:
            chosen.append(order[j])
            rec(j + 1, total + vals[j])
            chosen.pop()
            if best[0] == cap:
                return
        rec(j + 1, total)

    rec(0, Fraction(0))
    return best[0], tuple(sorted(best[1]))


def max_subset_sum(sizes: Sequence[Fraction], cap: Fraction = Fraction(1)) -> Fraction:
    value = max_sum_bitset(sizes, cap)
    if value is None:
        value = best_subset_dfs(sizes, cap)[0]
    return value
