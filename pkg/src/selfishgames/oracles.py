"""Exact optimal values and exhaustive equilibrium enumeration.

Everything here is brute force with pruning that is easy to argue about:
machines with identical processing-time columns and equal current load are
interchangeable, so only the first of them is branched on.  Budgets raise
:class:`SearchBudgetExceeded` rather than returning a truncated answer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .core import (
    INFINITE,
    Assignment,
    BinPackInstance,
    GameInstance,
    NoEquilibrium,
    SchedInstance,
    SearchBudgetExceeded,
    Value,
    WrongModel,
    is_infinite,
    objective,
    scaled_time_table,
)
from .equilibria import (
    DEFAULT_MAX_NODES,
    DEFAULT_MAX_PROFILES,
    all_packings,
    is_nash,
    is_strict_pareto,
    is_strong_nash,
    is_weak_pareto,
)
from .binpack import first_fit_decreasing


@dataclass(frozen=True)
class EnumerationBudget:
    max_profiles: int = DEFAULT_MAX_PROFILES
    max_coalition_nodes: int = DEFAULT_MAX_NODES

    def __post_init__(self):
        if self.max_profiles <= 0 or self.max_coalition_nodes <= 0:
            raise ValueError("budgets must be positive")


DEFAULT_BUDGET = EnumerationBudget()


class _Counter:
    def __init__(self, cap, what):
        self.cap, self.what, self.n = cap, what, 0

    def tick(self):
        self.n += 1
        if self.n > self.cap:
            raise SearchBudgetExceeded(f"{self.what} passed {self.cap} nodes")


def _column_classes(table, m):
    """Machine i -> class id; equal ids mean equal processing-time columns."""
    seen = {}
    return [seen.setdefault(tuple(row[i] for row in table), len(seen)) for i in range(m)]


# ---------------------------------------------------------------- assignment enumeration


def canonical_assignments(inst: SchedInstance, max_profiles: int = DEFAULT_MAX_PROFILES, canonical: bool = True):
    """Every feasible schedule, one per orbit of interchangeable machines.

    Machines with equal time columns are interchangeable; within a class they
    are opened in index order.  ``canonical=False`` yields all labelled
    schedules instead.
    """
    table, _ = scaled_time_table(inst)
    n, m = inst.n, inst.m
    cls = _column_classes(table, m) if canonical else list(range(m))
    used = [False] * m
    target = [0] * n
    counter = _Counter(max_profiles, "assignment enumeration")

    def rec(k):
        counter.tick()
        if k == n:
            yield Assignment(tuple(target), m)
            return
        opened = set()
        for i in range(m):
            if table[k][i] is None:
                continue
            if not used[i]:
                if cls[i] in opened:
                    continue
                opened.add(cls[i])
            fresh = not used[i]
            used[i] = True
            target[k] = i
            yield from rec(k + 1)
            if fresh:
                used[i] = False

    if n == 0:
        yield Assignment((), m)
        return
    yield from rec(0)


def _profiles(inst: GameInstance, budget: EnumerationBudget, canonical: bool = True):
    if isinstance(inst, BinPackInstance):
        return all_packings(inst, budget.max_profiles)
    return canonical_assignments(inst, budget.max_profiles, canonical)


# ---------------------------------------------------------------- optimal values


def opt_bins(inst: BinPackInstance, max_nodes: int = DEFAULT_MAX_NODES):
    """(minimum number of bins, witness packing)."""
    if not isinstance(inst, BinPackInstance):
        raise WrongModel("opt_bins needs a bin packing instance")
    n = inst.n
    if n == 0:
        return 0, Assignment((), 0)
    ffd = first_fit_decreasing(inst)
    best = [ffd.resource_count, ffd]
    lower = max(1, math.ceil(inst.total()))
    if best[0] == lower:
        return best[0], ffd.compact()
    d = math.lcm(*(a.denominator for a in inst.items))
    order = sorted(range(n), key=lambda k: (-inst.items[k], k))
    w = [int(inst.items[k] * d) for k in order]
    suffix = [0] * (n + 1)
    for j in range(n - 1, -1, -1):
        suffix[j] = suffix[j + 1] + w[j]
    loads = []
    place = [0] * n
    counter = _Counter(max_nodes, "bin packing search")

    def rec(j):
        counter.tick()
        if j == n:
            if len(loads) < best[0]:
                target = [0] * n
                for pos, k in enumerate(order):
                    target[k] = place[pos]
                best[0], best[1] = len(loads), Assignment(tuple(target), len(loads))
            return
        free = len(loads) * d - sum(loads)
        need = len(loads) + max(0, -(-(suffix[j] - free) // d))
        if need >= best[0]:
            return
        tried = set()
        for r in range(len(loads)):
            if loads[r] + w[j] <= d and loads[r] not in tried:
                tried.add(loads[r])
                loads[r] += w[j]
                place[j] = r
                rec(j + 1)
                loads[r] -= w[j]
                if best[0] == lower:
                    return
        if len(loads) + 1 < best[0]:
            loads.append(w[j])
            place[j] = len(loads) - 1
            rec(j + 1)
            loads.pop()

    rec(0)
    return best[0], best[1].compact()


def _job_order(table, n):
    return sorted(range(n), key=lambda k: (-max(t for t in table[k] if t is not None), k))


def _require_feasible(table, n):
    for k in range(n):
        if all(t is None for t in table[k]):
            raise WrongModel(f"job {k} cannot run on any machine")


def opt_makespan(inst: SchedInstance, max_nodes: int = DEFAULT_MAX_NODES):
    """(minimum makespan, witness schedule)."""
    if not isinstance(inst, SchedInstance):
        raise WrongModel("opt_makespan needs a scheduling instance")
    table, d = scaled_time_table(inst)
    n, m = inst.n, inst.m
    if n == 0:
        return Fraction(0), Assignment((), m)
    _require_feasible(table, n)
    cls = _column_classes(table, m)
    order = _job_order(table, n)
    # greedy start: each job to the machine where it finishes first
    loads = [0] * m
    target = [0] * n
    for k in order:
        i = min((i for i in range(m) if table[k][i] is not None), key=lambda i: (loads[i] + table[k][i], i))
        loads[i] += table[k][i]
        target[k] = i
    best = [max(loads), tuple(target)]
    lower = max(min(t for t in table[k] if t is not None) for k in range(n))
    if inst.model != "unrelated":
        work = sum(inst.sizes) * d
        lower = max(lower, math.ceil(work / sum(inst.speeds)))
    loads = [0] * m
    counter = _Counter(max_nodes, "makespan search")

    def rec(j, cur):
        counter.tick()
        if j == n:
            if cur < best[0]:
                best[0], best[1] = cur, tuple(target)
            return
        k = order[j]
        tried = set()
        for i in range(m):
            t = table[k][i]
            if t is None or (cls[i], loads[i]) in tried:
                continue
            tried.add((cls[i], loads[i]))
            nl = loads[i] + t
            if nl >= best[0]:
                continue
            loads[i] = nl
            target[k] = i
            rec(j + 1, max(cur, nl))
            loads[i] -= t
            if best[0] <= lower:
                return

    if best[0] > lower:
        rec(0, 0)
    return Fraction(best[0], d), Assignment(best[1], m)


def _water_level(loads, rates, work):
    """Largest level reachable by pouring ``work`` into machines with given rates."""
    pairs = sorted(zip(loads, rates))
    acc_rate = 0
    acc = Fraction(0)  # sum rate * load over filled machines
    for idx, (l, r) in enumerate(pairs):
        acc_rate += r
        acc += r * l
        level = (work + acc) / acc_rate
        if idx + 1 == len(pairs) or level <= pairs[idx + 1][0]:
            return level


def opt_cover(inst: SchedInstance, max_nodes: int = DEFAULT_MAX_NODES):
    """(maximum minimum load, witness schedule)."""
    if not isinstance(inst, SchedInstance):
        raise WrongModel("opt_cover needs a scheduling instance")
    table, d = scaled_time_table(inst)
    n, m = inst.n, inst.m
    if n == 0:
        return Fraction(0), Assignment((), m)
    _require_feasible(table, n)
    cls = _column_classes(table, m)
    order = _job_order(table, n)
    related = inst.model != "unrelated"
    # remaining work in size units for the water-filling bound
    rem_size = [Fraction(0)] * (n + 1)
    rem_time = [[0] * m for _ in range(n + 1)]
    for j in range(n - 1, -1, -1):
        k = order[j]
        if related:
            rem_size[j] = rem_size[j + 1] + inst.sizes[k] * d
        for i in range(m):
            rem_time[j][i] = rem_time[j + 1][i] + (table[k][i] or 0)

    def bound(j, loads):
        ub = min(loads[i] + rem_time[j][i] for i in range(m))
        if related:
            ub = min(ub, math.floor(_water_level(loads, inst.speeds, rem_size[j])))
        return ub

    loads = [0] * m
    target = [0] * n
    for k in order:
        i = min((i for i in range(m) if table[k][i] is not None), key=lambda i: (loads[i], i))
        loads[i] += table[k][i]
        target[k] = i
    best = [min(loads), tuple(target)]
    top = bound(0, [0] * m)
    loads = [0] * m
    counter = _Counter(max_nodes, "cover search")

    def rec(j):
        counter.tick()
        if j == n:
            c = min(loads)
            if c > best[0]:
                best[0], best[1] = c, tuple(target)
            return
        if bound(j, loads) <= best[0]:
            return
        k = order[j]
        tried = set()
        for i in sorted(range(m), key=lambda i: loads[i]):
            t = table[k][i]
            if t is None or (cls[i], loads[i]) in tried:
                continue
            tried.add((cls[i], loads[i]))
            loads[i] += t
            target[k] = i
            rec(j + 1)
            loads[i] -= t
            if best[0] >= top:
                return

    if best[0] < top:
        rec(0)
    return Fraction(best[0], d), Assignment(best[1], m)


def opt_envy(inst: SchedInstance, budget: EnumerationBudget = DEFAULT_BUDGET):
    """(minimum envy ratio, witness schedule); INFINITE when every schedule leaves a machine empty."""
    if not isinstance(inst, SchedInstance):
        raise WrongModel("opt_envy needs a scheduling instance")
    best = None
    for a in canonical_assignments(inst, budget.max_profiles):
        e = objective(inst, a, "envy")
        if best is None or e < best[0]:
            best = (e, a)
            if e == 1:
                break
    return best


def opt_value(inst: GameInstance, kind: str, budget: EnumerationBudget = DEFAULT_BUDGET):
    """Optimal social value for ``kind`` with a witness."""
    if kind == "bins":
        return opt_bins(inst, budget.max_coalition_nodes)
    if kind == "makespan":
        return opt_makespan(inst, budget.max_coalition_nodes)
    if kind == "cover":
        return opt_cover(inst, budget.max_coalition_nodes)
    if kind == "envy":
        return opt_envy(inst, budget)
    raise ValueError(f"unknown objective {kind!r}")


# ---------------------------------------------------------------- equilibria

CONCEPTS = ("ne", "sne", "wpo_ne", "spo_ne")


def _holds(inst, a, kind, budget):
    if not is_nash(inst, a).is_ne:
        return False
    if kind == "ne":
        return True
    if kind == "sne":
        return is_strong_nash(inst, a, max_nodes=budget.max_coalition_nodes).is_sne
    if kind == "wpo_ne":
        return is_weak_pareto(inst, a, budget.max_profiles, method="enumerate").is_wpo
    return is_strict_pareto(inst, a, budget.max_profiles, method="enumerate").is_spo


def enumerate_equilibria(
    inst: GameInstance, kind: str = "ne", budget: EnumerationBudget = DEFAULT_BUDGET, canonical: bool = True,
) -> list:
    """All profiles satisfying ``kind``, in enumeration order.

    Packings are listed once per partition; schedules once per orbit of
    interchangeable machines unless ``canonical`` is off.
    """
    if kind not in CONCEPTS:
        raise ValueError(f"unknown concept {kind!r}")
    return [a for a in _profiles(inst, budget, canonical) if _holds(inst, a, kind, budget)]


def ratio(objective_kind: str, value: Value, opt: Value) -> Value:
    """Quality ratio >= 1; covering is opt/value, the rest value/opt.

    Zero and infinite cases: 0/0 and INFINITE/INFINITE count as 1, a
    degenerate denominator gives INFINITE.
    """
    if objective_kind == "cover":
        value, opt = opt, value
    if is_infinite(value) or is_infinite(opt):
        return Fraction(1) if is_infinite(value) and is_infinite(opt) else INFINITE
    if opt == 0:
        return Fraction(1) if value == 0 else INFINITE
    return Fraction(value) / opt


def empirical_ratio(
    inst: GameInstance,
    objective_kind: str,
    concept: str = "ne",
    which: str = "worst",
    budget: EnumerationBudget = DEFAULT_BUDGET,
) -> Value:
    """Worst (anarchy) or best (stability) ratio over the profiles satisfying ``concept``."""
    if which not in ("worst", "best"):
        raise ValueError("which must be 'worst' or 'best'")
    opt = opt_value(inst, objective_kind, budget)[0]
    values = [ratio(objective_kind, objective(inst, a, objective_kind), opt)
              for a in enumerate_equilibria(inst, concept, budget)]
    if not values:
        raise NoEquilibrium(f"no profile satisfies {concept}")
    return max(values) if which == "worst" else min(values)


__all__ = [
    "CONCEPTS",
    "DEFAULT_BUDGET",
    "EnumerationBudget",
    "canonical_assignments",
    "empirical_ratio",
    "enumerate_equilibria",
    "opt_bins",
    "opt_cover",
    "opt_envy",
    "opt_makespan",
    "opt_value",
    "ratio",
]
