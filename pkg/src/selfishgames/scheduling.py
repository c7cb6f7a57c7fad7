"""Makespan game on identical, related and unrelated machines: LPT, the
related-machine Pareto lower-bound family, unrelated-machine witnesses and the
recognition hardness fixtures.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

from .core import (
    UNAVAILABLE,
    Assignment,
    MalformedReduction,
    ParamOutOfRange,
    SchedInstance,
    WrongModel,
    to_rational,
)
from .equilibria import is_nash, is_strict_pareto, is_weak_pareto


class Witness(NamedTuple):
    instance: SchedInstance
    schedule: Assignment
    opt_hint: Assignment | None


class RecognitionFixture(NamedTuple):
    instance: SchedInstance
    schedule: Assignment
    expected: bool


def lpt_schedule(inst: SchedInstance) -> Assignment:
    """Longest Processing Time on identical or related machines.

    Jobs go in non-increasing size order (ties by index) to the machine with
    the smallest load after the assignment; ties go to the slowest machine and
    then to the largest index.  The result is always an NE.
    """
    if inst.model == "unrelated":
        raise WrongModel("LPT is defined for identical and related machines")
    order = sorted(range(inst.n), key=lambda k: (-inst.sizes[k], k))
    loads = [Fraction(0)] * inst.m
    target = [0] * inst.n
    for k in order:
        best = None
        for i in range(inst.m):
            key = (loads[i] + inst.sizes[k] / inst.speeds[i], inst.speeds[i], -i)
            if best is None or key < best[0]:
                best = (key, i)
        i = best[1]
        loads[i] += inst.sizes[k] / inst.speeds[i]
        target[k] = i
    return Assignment(tuple(target), inst.m)


# ---------------------------------------------------------------- related machines


@dataclass(frozen=True)
class CvConstructionParams:
    """``k`` speed groups above the empty group 0 and ``n_k`` machines in the fastest group."""

    k: int
    n_k: int = 1

    def __post_init__(self):
        if self.k < 2:
            raise ParamOutOfRange("k must be at least 2")
        if self.n_k < 1:
            raise ParamOutOfRange("n_k must be positive")

    def group_sizes(self) -> list:
        sizes = [0] * (self.k + 1)
        sizes[self.k] = self.n_k
        for j in range(self.k - 1, -1, -1):
            sizes[j] = (j + 1) * sizes[j + 1]
        return sizes


def _cv_layout(params: CvConstructionParams):
    groups = params.group_sizes()
    speeds, machine_group = [], []
    for j, count in enumerate(groups):
        speeds += [2**j] * count
        machine_group += [j] * count
    first = [sum(groups[:j]) for j in range(len(groups))]
    sizes, target, hint = [], [], []
    for j in range(1, params.k + 1):
        for c in range(groups[j]):
            for _ in range(j):
                sizes.append(2**j)
                target.append(first[j] + c)
        # the j * N_j jobs of group j fill the N_{j-1} machines of the group below
        for c in range(j * groups[j]):
            hint.append(first[j - 1] + c)
    return speeds, sizes, target, hint


def gen_cv_related(params: CvConstructionParams, verify_pareto: bool | None = None) -> Witness:
    """Related machines with speed 2^j in group j; group j machines hold j jobs of size 2^j.

    The schedule has makespan k and is an NE; moving every group-j job down to
    group j-1 gives makespan 2.  Strict Pareto optimality is checked by
    enumeration when ``verify_pareto`` is set (default for k = 2).
    """
    speeds, sizes, target, hint = _cv_layout(params)
    inst = SchedInstance.related(sizes, speeds)
    x = Assignment(tuple(target), inst.m)
    opt = Assignment(tuple(hint), inst.m)
    if not is_nash(inst, x).is_ne:
        raise AssertionError("group layout is not an NE")
    if verify_pareto is None:
        verify_pareto = params.k == 2
    if verify_pareto and not is_strict_pareto(inst, x, method="enumerate").is_spo:
        raise AssertionError("group layout is not strictly Pareto optimal")
    return Witness(inst, x, opt)


def gen_preserving_fixture():
    """65 related machines (speeds 1..16) with two schedules X and Y.

    Every job pays the same in X and Y while the load vectors differ.  Returns
    (instance, X, Y).
    """
    params = CvConstructionParams(4, 1)
    speeds, sizes, target, _ = _cv_layout(params)
    inst = SchedInstance.related(sizes, speeds)
    x = Assignment(tuple(target), inst.m)
    groups = params.group_sizes()
    first = [sum(groups[:j]) for j in range(len(groups))]
    jobs = {}
    for k, p in enumerate(sizes):
        jobs.setdefault(p, []).append(k)
    y = [None] * len(sizes)

    def put(size, machine, count):
        for _ in range(count):
            y[jobs[size].pop()] = machine

    for c in range(groups[1]):
        put(4, first[1] + c, 1)
    for c in range(groups[2]):
        if c < 4:
            put(16, first[2] + c, 1)
        else:
            put(2, first[2] + c, 2)
    for c in range(groups[3]):
        put(8, first[3] + c, 3)
    put(2, first[4], 8)
    return inst, x, Assignment(tuple(y), inst.m)


# ---------------------------------------------------------------- unrelated machines


def gen_wpo_unrelated(m: int, eps=Fraction(1, 10), verify: bool = True) -> Witness:
    """A weakly Pareto optimal NE far from the optimal makespan.

    m = 2: job 0 takes 1 on both machines, job 1 takes 1 on machine 0 and 2 on
    machine 1; the NE puts job k on machine k (makespan 2, optimum 1).
    m >= 3: job k takes eps on machine k and 1 elsewhere; the NE puts job 0 on
    machine 0, job m-1 on machine 1 and job k on machine k+1 (makespan 1,
    optimum eps).
    """
    eps = to_rational(eps)
    if m < 2:
        raise ParamOutOfRange("need at least two machines")
    if m == 2:
        inst = SchedInstance.unrelated([[1, 1], [1, 2]])
        ne = Assignment((0, 1), 2)
        opt = Assignment((1, 0), 2)
    else:
        if not 0 < eps < 1:
            raise ParamOutOfRange("eps must lie in (0, 1)")
        times = [[eps if i == k else Fraction(1) for i in range(m)] for k in range(m)]
        inst = SchedInstance.unrelated(times)
        target = [0] * m
        target[m - 1] = 1
        for k in range(1, m - 1):
            target[k] = k + 1
        ne = Assignment(tuple(target), m)
        opt = Assignment(tuple(range(m)), m)
    if verify:
        if not is_nash(inst, ne).is_ne:
            raise AssertionError("witness is not an NE")
        if m <= 4 and not is_weak_pareto(inst, ne, method="enumerate").is_wpo:
            raise AssertionError("witness is not weakly Pareto optimal")
    return Witness(inst, ne, opt)


def gen_spo_unrelated(m: int, eps=Fraction(1, 100), verify: bool = True) -> Witness:
    """Strictly Pareto optimal NE with makespan m(1 - eps) against optimum 1.

    Job k >= 1 (0-based) runs on machine k in k+1 - (k+1)eps or on machine
    k-1 in 1; job 0 runs on machine 0 in 1 - eps or on machine m-1 in 1.  The
    NE is the diagonal; the optimum shifts every job one machine down.
    """
    eps = to_rational(eps)
    if m < 2:
        raise ParamOutOfRange("need at least two machines")
    if not 0 < eps < Fraction(1, m):
        raise ParamOutOfRange("eps must lie in (0, 1/m)")
    times = [[UNAVAILABLE] * m for _ in range(m)]
    times[0][0] = 1 - eps
    times[0][m - 1] = Fraction(1)
    for k in range(1, m):
        times[k][k] = (k + 1) * (1 - eps)
        times[k][k - 1] = Fraction(1)
    inst = SchedInstance.unrelated(times)
    ne = Assignment(tuple(range(m)), m)
    opt = Assignment(tuple([m - 1] + list(range(m - 1))), m)
    if verify:
        if not is_nash(inst, ne).is_ne:
            raise AssertionError("diagonal is not an NE")
        if m <= 4 and not is_strict_pareto(inst, ne, method="enumerate").is_spo:
            raise AssertionError("diagonal is not strictly Pareto optimal")
    return Witness(inst, ne, opt)


# ---------------------------------------------------------------- hardness fixtures


def _has_three_partition(values: Sequence[int], target: int) -> bool:
    values = sorted(values, reverse=True)
    used = [False] * len(values)

    def fill(remaining_groups):
        if remaining_groups == 0:
            return True
        first = used.index(False)
        used[first] = True
        for j, l in itertools.combinations(range(first + 1, len(values)), 2):
            if not used[j] and not used[l] and values[first] + values[j] + values[l] == target:
                used[j] = used[l] = True
                if fill(remaining_groups - 1):
                    return True
                used[j] = used[l] = False
        used[first] = False
        return False

    return fill(len(values) // 3)


def _has_partition(values: Sequence[int]) -> bool:
    total = sum(values)
    reach = 1
    for a in values:
        reach |= reach << a
    return bool(reach >> (total // 2) & 1)


def gen_recognition_fixture(kind: str, data: dict) -> RecognitionFixture:
    """Unrelated-machine reductions whose canonical NE is Pareto optimal iff no partition exists.

    ``wpo_3partition``: data = {"B": int, "a": 3M ints in (B/4, B/2) summing
    to M*B}; 4M machines, job k on machine k, every load B+1.  ``expected``
    is the weak Pareto verdict.
    ``spo_partition``: data = {"a": N positive ints}; two machines, the first
    N jobs on machine 0 and the two extra jobs on machine 1.  ``expected`` is
    the strict Pareto verdict.
    """
    if kind == "wpo_3partition":
        try:
            big = int(data["B"])
            a = [int(x) for x in data["a"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedReduction("need integer B and list a") from exc
        if not a or len(a) % 3:
            raise MalformedReduction("3-partition needs 3M numbers")
        mm = len(a) // 3
        if sum(a) != mm * big:
            raise MalformedReduction("numbers must sum to M*B")
        if any(not (Fraction(big, 4) < x < Fraction(big, 2)) for x in a):
            raise MalformedReduction("every number must lie strictly between B/4 and B/2")
        m = 4 * mm
        times = []
        for k in range(3 * mm):
            times.append([big + 1] * (3 * mm) + [a[k]] * mm)
        for k in range(mm):
            times.append([big] * (3 * mm) + [big + 1] * mm)
        inst = SchedInstance.unrelated(times)
        schedule = Assignment(tuple(range(m)), m)
        return RecognitionFixture(inst, schedule, not _has_three_partition(a, big))
    if kind == "spo_partition":
        try:
            a = [int(x) for x in data["a"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedReduction("need a list a of integers") from exc
        if not a or any(x <= 0 for x in a):
            raise MalformedReduction("partition data must be positive integers")
        if sum(a) % 2:
            # with a half-integral B the integrality argument fails, e.g. a = (1, 2)
            raise MalformedReduction("partition data must have an even sum 2B")
        n = len(a)
        half = Fraction(sum(a), 2)
        times = [[x + Fraction(1, 2 * n), Fraction(x)] for x in a]
        times.append([half, half + Fraction(1, 2)])
        times.append([UNAVAILABLE, half])
        inst = SchedInstance.unrelated(times)
        schedule = Assignment(tuple([0] * n + [1, 1]), 2)
        return RecognitionFixture(inst, schedule, not _has_partition(a))
    raise MalformedReduction(f"unknown reduction kind {kind!r}")


__all__ = [
    "CvConstructionParams",
    "RecognitionFixture",
    "Witness",
    "gen_cv_related",
    "gen_preserving_fixture",
    "gen_recognition_fixture",
    "gen_spo_unrelated",
    "gen_wpo_unrelated",
    "lpt_schedule",
]
