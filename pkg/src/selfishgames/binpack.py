"""Bin packing algorithms: Subset Sum (which generates strong equilibria),
First Fit replay of equilibria, the adversarial lower-bound constructions,
the unique-run perturbation and the bound constants of the parametric game.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

from ._subsetsum import best_subset_dfs, max_subset_sum
from .core import (
    Assignment,
    BinPackInstance,
    InvalidInstance,
    NotAnEquilibrium,
    Packing,
    ParamsTooSmall,
    TooManyItems,
    bin_loads,
    is_valid_packing,
    to_rational,
)
from .equilibria import is_nash

TIE_POLICIES = ("lex", "fewest", "most")


@dataclass(frozen=True)
class SubsetSumTrace:
    bins_in_order: tuple
    chosen_sums: tuple
    tie: str = "lex"


class Construction(NamedTuple):
    instance: BinPackInstance
    ne: Packing
    opt_hint: Packing


# ---------------------------------------------------------------- Subset Sum


def _types(items: Sequence[Fraction], remaining: Sequence[int]):
    """Group remaining item indices by size, largest size first."""
    groups = {}
    for i in sorted(remaining):
        groups.setdefault(items[i], []).append(i)
    return sorted(groups.items(), key=lambda kv: -kv[0])


def _max_count_vectors(types, best: Fraction, limit: int = 1_000_000):
    """All per-type count vectors whose total size equals ``best``."""
    sizes = [s for s, _ in types]
    avail = [len(g) for _, g in types]
    suffix = [Fraction(0)] * (len(types) + 1)
    for j in range(len(types) - 1, -1, -1):
        suffix[j] = suffix[j + 1] + sizes[j] * avail[j]
    out = []
    counts = [0] * len(types)

    def rec(j, total):
        if total == best:
            out.append(tuple(counts[:j]) + (0,) * (len(types) - j))
            if len(out) > limit:
                raise TooManyItems("too many maximum subsets to rank")
            return
        if j == len(types) or total + suffix[j] < best:
            return
        top = min(avail[j], int((best - total) / sizes[j]))
        for c in range(top, -1, -1):
            counts[j] = c
            rec(j + 1, total + c * sizes[j])
        counts[j] = 0

    rec(0, Fraction(0))
    return out


def max_subsets(items: Sequence[Fraction], remaining: Sequence[int]):
    """(best sum, list of per-type count vectors, types) for the remaining items."""
    types = _types(items, remaining)
    best = max_subset_sum([items[i] for i in remaining], Fraction(1))
    return best, _max_count_vectors(types, best), types


def count_max_subsets(items: Sequence[Fraction], remaining: Sequence[int]) -> int:
    """Number of distinct index sets reaching the maximum subset sum <= 1."""
    best, vectors, types = max_subsets(items, remaining)
    total = 0
    for vec in vectors:
        prod = 1
        for c, (_, group) in zip(vec, types):
            prod *= math.comb(len(group), c)
        total += prod
    return total


def _pick(items, remaining, tie):
    best, vectors, types = max_subsets(items, remaining)
    candidates = []
    for vec in vectors:
        chosen = []
        for c, (_, group) in zip(vec, types):
            chosen.extend(group[:c])
        candidates.append(tuple(sorted(chosen)))
    if tie == "lex":
        key = lambda s: s
    elif tie == "fewest":
        key = lambda s: (len(s), s)
    else:
        key = lambda s: (-len(s), s)
    return best, min(candidates, key=key)


def subset_sum_pack(inst: BinPackInstance, tie: str = "lex"):
    """Fill one bin at a time with a maximum-total subset of the remaining items.

    Ties between maximum subsets follow ``tie``: ``lex`` takes the
    lexicographically smallest sorted index set, ``fewest`` and ``most``
    prefer fewer or more items first and fall back to ``lex``.
    """
    if tie not in TIE_POLICIES:
        raise ValueError(f"unknown tie policy {tie!r}")
    remaining = list(range(inst.n))
    bins, sums = [], []
    while remaining:
        best, chosen = _pick(inst.items, remaining, tie)
        bins.append(chosen)
        sums.append(best)
        taken = set(chosen)
        remaining = [i for i in remaining if i not in taken]
    packing = Assignment.from_groups(bins, inst.n)
    return packing, SubsetSumTrace(tuple(bins), tuple(sums), tie)


def is_subset_sum_output(inst: BinPackInstance, p: Packing) -> bool:
    """Whether some Subset Sum run produces this packing.

    Bins are taken fullest first; each must reach the knapsack optimum of the
    items not yet packed.  Among equally full bins any order works.
    """
    if not is_valid_packing(inst, p):
        return False
    loads = bin_loads(inst, p)
    groups = p.groups()
    order = sorted((r for r in range(p.resource_count) if groups[r]), key=lambda r: -loads[r])
    remaining = set(range(inst.n))
    for r in order:
        best = max_subset_sum([inst.items[i] for i in sorted(remaining)], Fraction(1))
        if loads[r] != best:
            return False
        remaining -= set(groups[r])
    return True


# ---------------------------------------------------------------- First Fit


def first_fit(inst: BinPackInstance, order: Sequence[int] | None = None) -> Packing:
    """Each item in turn goes to the lowest-index bin it fits; bins are numbered by opening."""
    order = list(range(inst.n)) if order is None else list(order)
    if sorted(order) != list(range(inst.n)):
        raise ValueError("order must be a permutation of the items")
    loads = []
    target = [0] * inst.n
    for i in order:
        a = inst.items[i]
        for b, x in enumerate(loads):
            if x + a <= 1:
                loads[b] += a
                target[i] = b
                break
        else:
            loads.append(a)
            target[i] = len(loads) - 1
    return Assignment(tuple(target), len(loads))


def first_fit_decreasing(inst: BinPackInstance) -> Packing:
    order = sorted(range(inst.n), key=lambda i: (-inst.items[i], i))
    return first_fit(inst, order)


def ne_as_first_fit(inst: BinPackInstance, p: Packing) -> list:
    """Item order under which First Fit rebuilds the NE packing ``p``.

    Bins are listed fullest first (ties by index), items of a bin by index.  No
    item of a later bin fits an earlier one, otherwise it could improve there.
    """
    if not is_nash(inst, p).is_ne:
        raise NotAnEquilibrium("only NE packings are First Fit outputs by this replay")
    loads = bin_loads(inst, p)
    groups = p.groups()
    order = sorted((r for r in range(p.resource_count) if groups[r]), key=lambda r: (-loads[r], r))
    return [i for r in order for i in groups[r]]


# ---------------------------------------------------------------- lower-bound constructions


@dataclass(frozen=True)
class ConstructionParams:
    """Phase count ``s``, parametric class ``t`` and the free scale ``r_last``."""

    s: int
    t: int = 1
    r_last: int = 100

    def __post_init__(self):
        if self.s < 3:
            raise ParamsTooSmall("the construction needs s >= 3 phases")
        if self.t < 1:
            raise ParamsTooSmall("t must be a positive integer")
        if self.r_last < 2:
            raise ParamsTooSmall("r_last must be at least 2")

    @property
    def first_phase(self) -> int:
        return 1 if self.t == 1 else 0

    def r(self) -> dict:
        """r_j for j from the first phase to s."""
        r = {self.s: self.r_last}
        factor = 1 if self.t == 1 else self.t + 1
        for j in range(self.s - 1, self.first_phase - 1, -1):
            r[j] = 2**j * factor * r[j + 1] + 1
        return r

    def d(self) -> dict:
        r = self.r()
        d = {self.first_phase: 0}
        for j in range(self.first_phase + 1, self.s + 1):
            d[j] = r[j - 1] - r[j]
        return d

    @property
    def n(self) -> int:
        return self.r()[self.first_phase]


class _Builder:
    def __init__(self):
        self.items = []

    def add(self, size: Fraction) -> int:
        self.items.append(size)
        return len(self.items) - 1


def _phase_items(b: _Builder, count: int, d: int, base: Fraction, delta: Fraction):
    """sigma items plus the pi/theta pairs of one phase, with pi^1 and theta^d dropped."""
    sigma = [b.add(base + 2 * (d + 1) * delta) for _ in range(count)]
    pi = {i: b.add(base + (2 * i - 1) * delta) for i in range(2, d + 1)}
    theta = {i: b.add(base - 2 * i * delta) for i in range(1, d)}
    return sigma, pi, theta


def _phase_ne_bins(sigma, pi, theta, pairs_per_bin):
    """Each bin: one sigma plus consecutive pairs (pi^{i+1}, theta^i)."""
    pairs = [(pi[i + 1], theta[i]) for i in sorted(theta)]
    bins = []
    for c, sg in enumerate(sigma):
        chunk = pairs[c * pairs_per_bin:(c + 1) * pairs_per_bin]
        bins.append([sg] + [x for pr in chunk for x in pr])
    if len(pairs) != len(sigma) * pairs_per_bin:
        raise AssertionError("pair count does not match the phase layout")
    return bins


def _opt_level_bins(prefix, pi, theta, d):
    """Optimal bins of one level: a prefix of items plus the pair (pi^i, theta^i)."""
    bins = []
    for i in range(1, d + 1):
        content = list(prefix(i))
        if i in pi:
            content.append(pi[i])
        if i in theta:
            content.append(theta[i])
        bins.append(content)
    return bins


def gen_poa_lower(params: ConstructionParams, verify: bool = True) -> Construction:
    """Adversarial instance with an NE far from optimal, plus an explicit optimal packing.

    For t = 1 phases 1..s use items near 1/2^j; for t >= 2 phases 0..s use
    items near 1/((t+1) 2^j) and the instance has alpha = 1/t.  The NE is
    checked computationally instead of relying on an astronomically large
    ``r_last``; a failing check raises ParamsTooSmall.
    """
    s, t = params.s, params.t
    r, d, n = params.r(), params.d(), params.n
    delta = {j: Fraction(1, (4 * n) ** (3 * s - 2 * j)) for j in range(params.first_phase, s + 1)}
    b = _Builder()
    sig, pis, thetas = {}, {}, {}
    ne_bins, opt_bins = [], []

    if t == 1:
        for j in range(1, s + 1):
            sig[j], pis[j], thetas[j] = _phase_items(b, r[j], d[j], Fraction(1, 2**j), delta[j])
        for j in range(1, s + 1):
            ne_bins += _phase_ne_bins(sig[j], pis[j], thetas[j], 2 ** (j - 1) - 1)
        used = {j: 0 for j in range(1, s + 1)}

        def take(levels):
            out = []
            for k in levels:
                out.append(sig[k][used[k]])
                used[k] += 1
            return out

        for j in range(2, s + 1):
            opt_bins += _opt_level_bins(lambda i, j=j: take(range(1, j)), pis[j], thetas[j], d[j])
        for _ in range(r[s]):
            opt_bins.append(take(range(1, s + 1)))
        alpha = Fraction(1)
    else:
        q = t * (t - 1) * n
        big = Fraction(2) * delta[0] / (n * t * (t - 1) + 1)
        unit = Fraction(1, t + 1)
        s01 = [b.add(unit + big * n * t * t * (t - 1) + big) for _ in range(n * t)]
        s02 = [b.add(unit - big * n * t * (t - 1)) for _ in range(q)]
        s03 = {i: b.add(unit + big * n * t * (t - 1) + i * big) for i in range(2, q + 1)}
        s04 = {i: b.add(unit - i * big) for i in range(1, q)}
        s05 = [b.add(unit) for _ in range((t - 2) * (q - 1))]
        for j in range(1, s + 1):
            sig[j], pis[j], thetas[j] = _phase_items(
                b, r[j], d[j], Fraction(1, (t + 1) * 2**j), delta[j]
            )
        for j in range(1, s + 1):
            ne_bins += _phase_ne_bins(sig[j], pis[j], thetas[j], (t + 1) * 2 ** (j - 1) - 1)
        for c in range(n * t):
            ne_bins.append(s02[c * (t - 1):(c + 1) * (t - 1)] + [s01[c]])
        for i in range(1, q):
            ne_bins.append(s05[(i - 1) * (t - 2):i * (t - 2)] + [s03[i + 1], s04[i]])

        for i in range(1, q + 1):
            content = s05[(i - 1) * (t - 2):i * (t - 2)] if i < q else []
            content = list(content) + [s02[i - 1]]
            if i in s03:
                content.append(s03[i])
            if i in s04:
                content.append(s04[i])
            opt_bins.append(content)
        used = {j: 0 for j in range(1, s + 1)}
        used01 = [0]

        def take(levels):
            out = s01[used01[0]:used01[0] + t]
            used01[0] += t
            for k in levels:
                out.append(sig[k][used[k]])
                used[k] += 1
            return out

        for j in range(1, s + 1):
            opt_bins += _opt_level_bins(lambda i, j=j: take(range(1, j)), pis[j], thetas[j], d[j])
        for _ in range(r[s]):
            opt_bins.append(take(range(1, s + 1)))
        alpha = Fraction(1, t)

    inst = BinPackInstance(tuple(b.items), alpha)
    ne = Assignment.from_groups(ne_bins, inst.n)
    opt = Assignment.from_groups(opt_bins, inst.n)
    if verify:
        expected_opt = n if t == 1 else (t * (t - 1) + 1) * n
        if opt.resource_count != expected_opt or not is_valid_packing(inst, opt):
            raise AssertionError("optimal layout is not a valid packing of the expected size")
        if not is_valid_packing(inst, ne):
            raise ParamsTooSmall(f"equilibrium layout overflows a bin for {params}")
        if not is_nash(inst, ne).is_ne:
            raise ParamsTooSmall(f"equilibrium layout admits an improving move for {params}")
    return Construction(inst, ne, opt)


def poa_lower_prediction(params: ConstructionParams) -> Fraction:
    """NE bins over optimal bins as predicted by the phase counts."""
    r, n, t, s = params.r(), params.n, params.t, params.s
    phases = sum(r[j] for j in range(1, s + 1))
    if t == 1:
        return Fraction(phases, n)
    return Fraction(t * t * n - 1 + phases, (t * (t - 1) + 1) * n)


# ---------------------------------------------------------------- perturbation


def subset_sum_values(items: Sequence[Fraction], limit: int = 1 << 20) -> list:
    sums = {Fraction(0)}
    for a in items:
        sums |= {x + a for x in sums}
        if len(sums) > limit:
            raise TooManyItems(f"more than {limit} distinct subset sums")
    sums.discard(Fraction(0))
    return sorted(sums, reverse=True)


def perturb_for_unique_run(inst: BinPackInstance, p: Packing, limit: int = 1 << 20) -> BinPackInstance:
    """Shrink bin i of a Subset Sum packing by 1/beta^(i-1) so that only one run remains.

    Bins are ordered fullest first.  With rho the smallest ratio between
    consecutive distinct values among all subset sums and 1, any beta with
    beta^k < rho (k bins) keeps every strict order between subset sums and
    breaks every tie in favour of earlier bins.
    """
    if not is_subset_sum_output(inst, p):
        raise NotAnEquilibrium("the packing is not a Subset Sum output")
    values = sorted(set(subset_sum_values(inst.items, limit)) | {Fraction(1)}, reverse=True)
    loads = bin_loads(inst, p)
    groups = p.groups()
    order = sorted((r for r in range(p.resource_count) if groups[r]), key=lambda r: (-loads[r], r))
    k = len(order)
    if k <= 1 or len(values) < 2:
        return inst
    rho = min(values[i] / values[i + 1] for i in range(len(values) - 1))
    eps = Fraction(1, 4 * k * math.ceil(1 / (rho - 1)))
    while (1 + eps) ** k >= rho:
        eps /= 2
    beta = 1 + eps
    items = list(inst.items)
    for pos, r in enumerate(order):
        for i in groups[r]:
            items[i] = inst.items[i] / beta**pos
    return BinPackInstance(tuple(items), inst.alpha)


# ---------------------------------------------------------------- bound constants


# First Fit Decreasing ratios for items bounded by 1/t, t = 1..10, kept as
# reference constants for the comparison table.
FFD_RATIOS = {
    1: Fraction(11, 9),
    2: Fraction(71, 60),
    3: Fraction(7, 6),
    4: Fraction(23, 20),
    5: Fraction(239, 210),
    6: Fraction(47, 42),
    7: 1 + Fraction(55, 504),
    8: 1 + Fraction(7, 72),
    9: 1 + Fraction(89, 990),
    10: 1 + Fraction(9, 110),
}

# upper bound for the classic game, as a decimal turned fraction (1.642857...)
CLASSIC_POA_UPPER = Fraction(23, 14)


@dataclass(frozen=True)
class Bounds:
    t: int
    poa_lower: Fraction
    poa_upper: Fraction
    spoa: Fraction
    ff_ratio: Fraction
    ffd_ratio: Fraction | None
    terms: int
    remainder: Fraction

    def as_floats(self) -> dict:
        out = {}
        for key in ("poa_lower", "poa_upper", "spoa", "ff_ratio", "ffd_ratio"):
            v = getattr(self, key)
            out[key] = None if v is None else float(v)
        return out


def bound_formulas(t: int, terms: int = 60) -> Bounds:
    """Lower/upper PoA, strong PoA, First Fit and First Fit Decreasing ratios for alpha <= 1/t.

    Series are truncated after ``terms`` terms; ``remainder`` bounds the
    neglected tail of each series.
    """
    if t < 1:
        raise ValueError("t must be a positive integer")
    if terms < 2:
        raise ValueError("need at least two series terms")
    if t == 1:
        series = [Fraction(1, 2 ** (j * (j - 1) // 2)) for j in range(1, terms + 1)]
        lower = sum(series, Fraction(0))
        lower_tail = Fraction(2, 2 ** (terms * (terms + 1) // 2))
        upper = CLASSIC_POA_UPPER
        ff = Fraction(17, 10)
    else:
        series = [
            Fraction(1, (t + 1) ** j * 2 ** (j * (j - 1) // 2)) for j in range(1, terms + 1)
        ]
        denom = t * (t - 1) + 1
        lower = (t * t + sum(series, Fraction(0))) / denom
        lower_tail = Fraction(2, (t + 1) ** (terms + 1) * 2 ** (terms * (terms + 1) // 2) * denom)
        upper = Fraction(2 * t**3 + t**2 + 2, (2 * t + 1) * (t * t - t + 1))
        ff = Fraction(t + 1, t)
    spoa = 1 + sum((Fraction(1, (t + 1) * 2**i - 1) for i in range(1, terms + 1)), Fraction(0))
    # 1/((t+1)2^i - 1) <= 2/((t+1)2^i), so the tail is at most 2/((t+1)2^terms)
    spoa_tail = Fraction(2, (t + 1) * 2**terms)
    return Bounds(
        t=t, poa_lower=lower, poa_upper=upper, spoa=spoa, ff_ratio=ff,
        ffd_ratio=FFD_RATIOS.get(t), terms=terms, remainder=max(lower_tail, spoa_tail),
    )


# ---------------------------------------------------------------- hardness fixture


def gen_partition_sne_fixture(a: Sequence[int]) -> BinPackInstance:
    """Items a_i / B with B half the total; an SNE packs them in two bins iff a partition exists."""
    values = [int(x) for x in a]
    if not values or any(x <= 0 for x in values):
        raise InvalidInstance("partition data must be positive integers")
    half = Fraction(sum(values), 2)
    if any(x > half for x in values):
        raise InvalidInstance("an element larger than half the total cannot be packed")
    return BinPackInstance(tuple(Fraction(x) / half for x in values))


def packing_from_sizes(items: Sequence, bins: Sequence[Sequence[int]]):
    """Convenience: instance and packing from item sizes and bin index lists."""
    inst = BinPackInstance(tuple(to_rational(x) for x in items))
    return inst, Assignment.from_groups(bins, inst.n)


__all__ = [
    "Bounds",
    "Construction",
    "ConstructionParams",
    "FFD_RATIOS",
    "SubsetSumTrace",
    "best_subset_dfs",
    "bound_formulas",
    "count_max_subsets",
    "first_fit",
    "first_fit_decreasing",
    "gen_partition_sne_fixture",
    "gen_poa_lower",
    "is_subset_sum_output",
    "ne_as_first_fit",
    "packing_from_sizes",
    "perturb_for_unique_run",
    "poa_lower_prediction",
    "subset_sum_pack",
    "subset_sum_values",
]
