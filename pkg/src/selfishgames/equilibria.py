"""Checkers for the solution concepts: NE, strong NE, weak and strict Pareto
optimality, best-response dynamics and cost-preserving deviations.

Bin packing agents pay ``size / bin load``; scheduling and covering agents pay
the load of their machine.  Every verdict is exact.  Exhaustive searches run
under explicit caps and raise :class:`SearchBudgetExceeded` instead of guessing.
"""

from __future__ import annotations

import bisect
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from ._subsetsum import best_subset_dfs
from .core import (
    INFINITE,
    UNAVAILABLE,
    Assignment,
    BinPackInstance,
    GameInstance,
    InvalidAssignment,
    IterationCapExceeded,
    NotAnEquilibrium,
    SchedInstance,
    SearchBudgetExceeded,
    WrongModel,
    agent_costs,
    bin_loads,
    load_vector,
    scaled_time_table,
)

DEFAULT_MAX_PROFILES = 2_000_000
DEFAULT_MAX_NODES = 2_000_000


@dataclass(frozen=True)
class Move:
    agent: int
    source: int
    target: int
    old_cost: object
    new_cost: object


@dataclass(frozen=True)
class Coalition:
    """A joint deviation: who moves, the resulting assignment, (agent, old, new) costs."""

    agents: tuple
    deviation: Assignment
    costs: tuple


@dataclass(frozen=True)
class EquilibriumReport:
    is_ne: bool | None = None
    witness_move: Move | None = None
    is_sne: bool | None = None
    witness_coalition: Coalition | None = None
    coalition_cap: int | None = None
    is_wpo: bool | None = None
    is_spo: bool | None = None
    witness_profile: Assignment | None = None
    method: str | None = None


@dataclass(frozen=True)
class MovePolicy:
    """Which agent moves next in best-response dynamics.

    ``lowest`` picks the lowest-index agent with an improving move;
    ``largest_gain`` picks the agent whose cost drops the most (ties to the
    lowest index).  Each mover always goes to its best response.
    """

    agent: str = "lowest"

    def __post_init__(self):
        if self.agent not in ("lowest", "largest_gain"):
            raise ValueError(f"unknown agent policy {self.agent!r}")


# ---------------------------------------------------------------- unilateral moves


def _require_valid(inst: BinPackInstance, a: Assignment):
    loads = bin_loads(inst, a)
    if any(x > 1 for x in loads):
        raise InvalidAssignment("packing has an overfull bin")
    return loads


def _iter_moves(inst: GameInstance, a: Assignment) -> Iterator[Move]:
    if isinstance(inst, BinPackInstance):
        loads = _require_valid(inst, a)
        for i, b in enumerate(a.target):
            size = inst.items[i]
            for j in range(a.resource_count):
                if j == b:
                    continue
                new = loads[j] + size
                if new <= 1 and new > loads[b]:
                    yield Move(i, b, j, size / loads[b], size / new)
        return
    loads = load_vector(inst, a).loads
    for k, i in enumerate(a.target):
        for j in range(inst.m):
            if j == i:
                continue
            t = inst.time(k, j)
            if t is UNAVAILABLE:
                continue
            new = loads[j] + t
            if new < loads[i]:
                yield Move(k, i, j, loads[i], new)


def improving_moves(inst: GameInstance, a: Assignment) -> list:
    """Every unilateral move that strictly lowers the mover's cost."""
    return list(_iter_moves(inst, a))


def _best_response(inst: GameInstance, a: Assignment, agent: int, loads) -> Move | None:
    """Best improving move of one agent: lowest new cost, ties to the lowest index."""
    src = a.target[agent]
    best = None
    if isinstance(inst, BinPackInstance):
        size = inst.items[agent]
        for j in range(a.resource_count):
            if j == src:
                continue
            new = loads[j] + size
            if new <= 1 and new > loads[src] and (best is None or new > best[1]):
                best = (j, new)
        if best is None:
            return None
        return Move(agent, src, best[0], size / loads[src], size / best[1])
    for j in range(inst.m):
        if j == src:
            continue
        t = inst.time(agent, j)
        if t is UNAVAILABLE:
            continue
        new = loads[j] + t
        if new < loads[src] and (best is None or new < best[1]):
            best = (j, new)
    if best is None:
        return None
    return Move(agent, src, best[0], loads[src], best[1])


def _binpack_first_violation(inst: BinPackInstance, a: Assignment) -> Move | None:
    """Sorted-load scan: item i in bin b improves iff some other bin has load in (L_b - a_i, 1 - a_i]."""
    loads = _require_valid(inst, a)
    order = sorted(range(len(loads)), key=lambda j: (loads[j], -j))
    keys = [loads[j] for j in order]
    for i, b in enumerate(a.target):
        size = inst.items[i]
        lo = bisect.bisect_right(keys, loads[b] - size)
        hi = bisect.bisect_right(keys, 1 - size)
        pos = hi - 1
        while pos >= lo and order[pos] == b:
            pos -= 1
        if pos >= lo:
            # equal loads are stored by descending index, so the last eligible
            # slot is the fullest fitting bin with the lowest index
            j = order[pos]
            new = loads[j] + size
            return Move(i, b, j, size / loads[b], size / new)
    return None


def is_nash(inst: GameInstance, a: Assignment) -> EquilibriumReport:
    """NE verdict; the witness is the lowest-index agent's best response."""
    if isinstance(inst, BinPackInstance):
        move = _binpack_first_violation(inst, a)
    else:
        loads = load_vector(inst, a).loads
        move = None
        for k in range(inst.n):
            move = _best_response(inst, a, k, loads)
            if move is not None:
                break
    return EquilibriumReport(is_ne=move is None, witness_move=move)


# ---------------------------------------------------------------- strong equilibria


def _binpack_sne_exact(inst: BinPackInstance, a: Assignment) -> EquilibriumReport:
    """Exact SNE test for packings.

    A valid packing fails to be a strong equilibrium iff some item set S has
    total at most 1 and strictly above the largest original bin load among its
    members; S then gains by moving into a fresh bin.  Conversely, in any
    successful joint deviation the fullest bin receiving a deviator is such a
    set.  Scanning the distinct bin loads L and asking whether a subset of the
    items sitting in bins of load <= L sums into (L, 1] decides the question.
    """
    loads = _require_valid(inst, a)
    for level in sorted(set(x for x in loads if x > 0)):
        pool = [i for i, b in enumerate(a.target) if loads[b] <= level]
        best, chosen = best_subset_dfs([inst.items[i] for i in pool], Fraction(1))
        if best > level:
            members = tuple(pool[c] for c in chosen)
            fresh = a.resource_count
            target = list(a.target)
            for i in members:
                target[i] = fresh
            dev = Assignment(tuple(target), fresh + 1)
            costs = tuple(
                (i, inst.items[i] / loads[a.target[i]], inst.items[i] / best) for i in members
            )
            return EquilibriumReport(
                is_ne=None, is_sne=False, witness_coalition=Coalition(members, dev, costs),
                coalition_cap=inst.n, method="fresh-bin",
            )
    return EquilibriumReport(is_sne=True, coalition_cap=inst.n, method="fresh-bin")


def _coalition_search(inst: GameInstance, a: Assignment, cap: int, max_nodes: int):
    """First coalition (by size, then lexicographically) with a joint strict improvement."""
    n = inst.n
    binpack = isinstance(inst, BinPackInstance)
    if binpack:
        loads = _require_valid(inst, a)
        weight = lambda k, r: inst.items[k]
        resources = a.resource_count
    else:
        loads = list(load_vector(inst, a).loads)
        weight = inst.time
        resources = inst.m
    # a member improves iff its new bin ends fuller (packing) or its new
    # machine ends lighter (scheduling) than its current resource
    old_load = [loads[r] for r in a.target]
    nodes = [0]

    def search(coal, pos, base, choice, fresh_used):
        nodes[0] += 1
        if nodes[0] > max_nodes:
            raise SearchBudgetExceeded(f"coalition search passed {max_nodes} nodes")
        if pos == len(coal):
            for idx, k in enumerate(coal):
                new = base[choice[idx]]
                if binpack:
                    if not (new <= 1 and new > old_load[k]):
                        return False
                elif not new < old_load[k]:
                    return False
            return True
        k = coal[pos]
        options = range(resources + fresh_used + 1) if binpack else range(resources)
        for r in options:
            w = weight(k, r)
            if w is UNAVAILABLE:
                continue
            nl = base[r] + w
            if binpack:
                if nl > 1:
                    continue
            elif nl >= old_load[k] or any(
                choice[q] == r and nl >= old_load[coal[q]] for q in range(pos)
            ):
                # loads only grow from here on
                continue
            base[r] = nl
            choice[pos] = r
            opened = 1 if binpack and r == resources + fresh_used else 0
            if search(coal, pos + 1, base, choice, fresh_used + opened):
                return True
            base[r] -= w
        return False

    for size in range(1, cap + 1):
        for coal in itertools.combinations(range(n), size):
            base = list(loads) + ([Fraction(0)] * (size + 1) if binpack else [])
            for k in coal:
                base[a.target[k]] -= weight(k, a.target[k])
            choice = [0] * size
            if search(coal, 0, base, choice, 0):
                target = list(a.target)
                for k, r in zip(coal, choice):
                    target[k] = r
                dev = Assignment(tuple(target), max(resources, max(choice) + 1))
                old_costs = agent_costs(inst, a)
                new_costs = agent_costs(inst, dev)
                costs = tuple((k, old_costs[k], new_costs[k]) for k in coal)
                return Coalition(coal, dev, costs)
    return None


def is_strong_nash(
    inst: GameInstance,
    a: Assignment,
    max_coalition: int | None = None,
    max_nodes: int = DEFAULT_MAX_NODES,
    method: str = "auto",
) -> EquilibriumReport:
    """Strong NE verdict over coalitions of size at most ``max_coalition``.

    Packings checked with the full coalition size use the exact fresh-bin
    criterion unless ``method='search'``.  Otherwise coalitions are tried by
    size, lexicographically, over all joint re-targetings (packing deviators
    may open new bins).
    """
    cap = inst.n if max_coalition is None else min(max_coalition, inst.n)
    if method not in ("auto", "search", "fresh-bin"):
        raise ValueError(f"unknown method {method!r}")
    if isinstance(inst, BinPackInstance) and cap == inst.n and method != "search":
        return _binpack_sne_exact(inst, a)
    if method == "fresh-bin":
        raise ValueError("the fresh-bin criterion needs a packing and the full coalition size")
    found = _coalition_search(inst, a, cap, max_nodes)
    return EquilibriumReport(
        is_sne=found is None, witness_coalition=found, coalition_cap=cap, method="search",
    )


# ---------------------------------------------------------------- Pareto optimality


def _set_partitions(n: int):
    """Restricted growth strings: every packing once, bins labelled by first item."""
    if n == 0:
        yield ()
        return
    target = [0] * n

    def rec(k, used):
        if k == n:
            yield tuple(target)
            return
        for r in range(used + 1):
            target[k] = r
            yield from rec(k + 1, max(used, r + 1))

    yield from rec(1, 1)


def all_packings(inst: BinPackInstance, max_profiles: int = DEFAULT_MAX_PROFILES):
    """Every valid packing of the items, each partition once."""
    count = 0
    items = inst.items
    n = inst.n
    if n == 0:
        yield Assignment((), 0)
        return
    target = [0] * n
    loads = []

    def rec(k):
        nonlocal count
        count += 1
        if count > max_profiles:
            raise SearchBudgetExceeded(f"packing enumeration passed {max_profiles} nodes")
        if k == n:
            yield Assignment(tuple(target), len(loads))
            return
        for r in range(len(loads) + 1):
            if r == len(loads):
                loads.append(items[k])
            elif loads[r] + items[k] > 1:
                continue
            else:
                loads[r] += items[k]
            target[k] = r
            yield from rec(k + 1)
            if r == len(loads) - 1 and loads[r] == items[k]:
                loads.pop()
            else:
                loads[r] -= items[k]

    yield from rec(0)


def _dominating_schedule(inst: SchedInstance, a: Assignment, mode: str, max_profiles: int):
    """Search for b whose costs compare to a's per ``mode``.

    mode 'strict': every job strictly cheaper (refutes weak Pareto optimality).
    mode 'weak': no job dearer and one strictly cheaper (refutes strict PO).
    mode 'equal': every job pays exactly the same and b differs from a.
    Loads only grow as jobs are placed, which prunes most of the tree.
    """
    table, _ = scaled_time_table(inst)
    n, m = inst.n, inst.m
    loads0 = [0] * m
    for k, i in enumerate(a.target):
        loads0[i] += table[k][i]
    cost = [loads0[i] for i in a.target]
    loads = [0] * m
    bound = [None] * m  # tightest cost limit among jobs placed on each machine
    exact = [None] * m
    target = [0] * n
    count = 0
    found = []

    def rec(k):
        nonlocal count
        count += 1
        if count > max_profiles:
            raise SearchBudgetExceeded(f"profile search passed {max_profiles} nodes")
        if k == n:
            if mode == "strict":
                ok = all(loads[target[j]] < cost[j] for j in range(n))
            elif mode == "weak":
                ok = all(loads[target[j]] <= cost[j] for j in range(n)) and any(
                    loads[target[j]] < cost[j] for j in range(n)
                )
            if ok:
                found.append(tuple(target))
            return bool(found)
        for i in range(m):
            t = table[k][i]
            if t is None:
                continue
            nl = loads[i] + t
            lim = cost[k] if bound[i] is None else min(bound[i], cost[k])
            if nl > lim or (mode == "strict" and nl == lim):
                continue
            saved = bound[i]
            loads[i] = nl
            bound[i] = lim
            target[k] = i
            if rec(k + 1):
                return True
            loads[i] -= t
            bound[i] = saved
        return False

    if mode == "equal":
        out = []

        def collect(k):
            nonlocal count
            count += 1
            if count > max_profiles:
                raise SearchBudgetExceeded(f"profile search passed {max_profiles} nodes")
            if k == n:
                if tuple(target) != a.target and all(
                    loads[target[j]] == cost[j] for j in range(n)
                ):
                    out.append(Assignment(tuple(target), m))
                return
            for i in range(m):
                t = table[k][i]
                if t is None:
                    continue
                nl = loads[i] + t
                if nl > cost[k]:
                    continue
                if exact[i] is not None and exact[i] != cost[k]:
                    continue
                saved = exact[i]
                loads[i] = nl
                exact[i] = cost[k]
                target[k] = i
                collect(k + 1)
                loads[i] -= t
                exact[i] = saved

        collect(0)
        return out
    rec(0)
    return Assignment(found[0], m) if found else None


def _dominating_packing(inst: BinPackInstance, a: Assignment, mode: str, max_profiles: int):
    cost = agent_costs(inst, a)
    out = []
    key = a.partition_key()
    for b in all_packings(inst, max_profiles):
        c = agent_costs(inst, b)
        if mode == "strict":
            ok = all(x < y for x, y in zip(c, cost))
        elif mode == "weak":
            ok = all(x <= y for x, y in zip(c, cost)) and any(x < y for x, y in zip(c, cost))
        else:
            ok = c == cost and b.partition_key() != key
        if ok:
            if mode != "equal":
                return b
            out.append(b)
    return out if mode == "equal" else None


def _dominating(inst, a, mode, max_profiles):
    if inst.n == 0:  # nothing to improve; a profile never dominates itself
        return [] if mode == "equal" else None
    if isinstance(inst, BinPackInstance):
        return _dominating_packing(inst, a, mode, max_profiles)
    load_vector(inst, a)  # rejects jobs on unavailable machines
    return _dominating_schedule(inst, a, mode, max_profiles)


def is_weak_pareto(
    inst: GameInstance, a: Assignment, max_profiles: int = DEFAULT_MAX_PROFILES, method: str = "auto",
) -> EquilibriumReport:
    """Weak Pareto optimality: no profile makes every agent strictly better.

    With ``method='auto'`` two shortcuts apply before enumeration: on identical
    machines a schedule without empty machines is WPO, and on related machines
    every NE is WPO.
    """
    if method not in ("auto", "enumerate"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto" and isinstance(inst, SchedInstance) and inst.model != "unrelated":
        if inst.model == "identical" and len(set(a.target)) == inst.m:
            return EquilibriumReport(is_wpo=True, method="shortcut:no-empty-machine")
        if is_nash(inst, a).is_ne:
            return EquilibriumReport(is_wpo=True, is_ne=True, method="shortcut:related-ne")
    b = _dominating(inst, a, "strict", max_profiles)
    return EquilibriumReport(is_wpo=b is None, witness_profile=b, method="enumerate")


def is_strict_pareto(
    inst: GameInstance, a: Assignment, max_profiles: int = DEFAULT_MAX_PROFILES, method: str = "auto",
) -> EquilibriumReport:
    """Strict Pareto optimality: no profile helps one agent while hurting none.

    ``method='auto'`` settles NE schedules on identical or related machines
    with :func:`recognize_spo_related`; everything else is enumerated.
    """
    if method not in ("auto", "enumerate"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto" and isinstance(inst, SchedInstance) and inst.model != "unrelated":
        if is_nash(inst, a).is_ne:
            rep = recognize_spo_related(inst, a)
            return EquilibriumReport(
                is_ne=True, is_spo=rep.is_spo, witness_profile=rep.witness_profile,
                method="shortcut:recognition",
            )
    b = _dominating(inst, a, "weak", max_profiles)
    return EquilibriumReport(is_spo=b is None, witness_profile=b, method="enumerate")


def recognize_spo_related(inst: SchedInstance, a: Assignment) -> EquilibriumReport:
    """Polynomial SPO-NE recognition on identical or related machines.

    Not NE gives false.  With no empty machine the NE is strictly Pareto
    optimal.  Otherwise the schedule fails exactly when some job sharing its
    machine can move to a fastest empty machine without paying more.
    """
    if not isinstance(inst, SchedInstance) or inst.model == "unrelated":
        raise WrongModel("recognition needs identical or related machines")
    ne = is_nash(inst, a)
    if not ne.is_ne:
        return EquilibriumReport(is_ne=False, witness_move=ne.witness_move, is_spo=False, method="recognition")
    counts = [0] * inst.m
    for i in a.target:
        counts[i] += 1
    empty = [i for i in range(inst.m) if counts[i] == 0]
    if not empty:
        return EquilibriumReport(is_ne=True, is_spo=True, method="recognition")
    fastest = max(inst.speeds[i] for i in empty)
    dest = min(i for i in empty if inst.speeds[i] == fastest)
    loads = load_vector(inst, a).loads
    for k, i in enumerate(a.target):
        if counts[i] >= 2 and inst.sizes[k] / fastest <= loads[i]:
            return EquilibriumReport(
                is_ne=True, is_spo=False, witness_profile=a.move(k, dest), method="recognition",
            )
    return EquilibriumReport(is_ne=True, is_spo=True, method="recognition")


# ---------------------------------------------------------------- dynamics and deviations


def best_response_dynamics(
    inst: GameInstance, start: Assignment, policy: MovePolicy | None = None, max_steps: int | None = None,
):
    """Run improving best responses until none is left; returns (assignment, trace)."""
    policy = policy or MovePolicy()
    if max_steps is None:
        max_steps = 1000 * (inst.n + 1) ** 2 + 2 ** min(inst.n, 20)
    a = start
    if isinstance(inst, BinPackInstance):
        loads = _require_valid(inst, a)
        weight = lambda k, r: inst.items[k]
    else:
        loads = list(load_vector(inst, a).loads)
        weight = inst.time
    trace = []
    while True:
        move = None
        for k in range(inst.n):
            cand = _best_response(inst, a, k, loads)
            if cand is None:
                continue
            if policy.agent == "lowest":
                move = cand
                break
            if move is None or cand.old_cost - cand.new_cost > move.old_cost - move.new_cost:
                move = cand
        if move is None:
            return a, trace
        if len(trace) >= max_steps:
            raise IterationCapExceeded(f"no equilibrium after {max_steps} steps")
        loads[move.source] -= weight(move.agent, move.source)
        loads[move.target] += weight(move.agent, move.target)
        a = a.move(move.agent, move.target)
        trace.append(move)


def preserving_deviations(
    inst: GameInstance, a: Assignment, max_profiles: int = DEFAULT_MAX_PROFILES,
) -> list:
    """Every other assignment in which each agent pays exactly what it pays in ``a``.

    Schedules are compared as labelled assignments; packings as partitions.
    """
    if not is_nash(inst, a).is_ne:
        raise NotAnEquilibrium("preserving deviations are defined from an NE")
    return _dominating(inst, a, "equal", max_profiles)


def costs_equal(inst: GameInstance, a: Assignment, b: Assignment) -> bool:
    return agent_costs(inst, a) == agent_costs(inst, b)


__all__ = [
    "Coalition",
    "EquilibriumReport",
    "INFINITE",
    "Move",
    "MovePolicy",
    "all_packings",
    "best_response_dynamics",
    "costs_equal",
    "improving_moves",
    "is_nash",
    "is_strict_pareto",
    "is_strong_nash",
    "is_weak_pareto",
    "preserving_deviations",
    "recognize_spo_related",
]
