"""Exact data model shared by the bin packing, scheduling and covering games.

Every size, speed, load and cost is a :class:`fractions.Fraction`.  Floats are
rejected at the boundary so that strict inequalities separated by tiny
quantities are decided exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, Union

Rational = Fraction

MODELS = ("identical", "related", "unrelated")
OBJECTIVES = ("bins", "makespan", "cover", "envy")


# ---------------------------------------------------------------- errors


class GameError(Exception):
    """Base class for every error raised by this package."""


class InvalidInstance(GameError, ValueError):
    pass


class InvalidAssignment(GameError, ValueError):
    pass


class EnvyUndefined(GameError, ArithmeticError):
    pass


class LengthMismatch(GameError, ValueError):
    pass


class WrongModel(GameError, ValueError):
    pass


class SearchBudgetExceeded(GameError, RuntimeError):
    """An exhaustive search hit its node or profile cap; the verdict is unknown."""


class IterationCapExceeded(GameError, RuntimeError):
    pass


class NotAnEquilibrium(GameError, ValueError):
    pass


class NoEquilibrium(GameError, RuntimeError):
    pass


class ParamsTooSmall(GameError, ValueError):
    pass


class ParamOutOfRange(GameError, ValueError):
    pass


class TooManyItems(GameError, ValueError):
    pass


class MalformedReduction(GameError, ValueError):
    pass


class DomainError(GameError, ValueError):
    pass


# ---------------------------------------------------------------- markers


class _Infinite:
    """Positive infinity for costs and ratios; larger than every rational."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITE"

    def __str__(self):
        return "inf"

    def __hash__(self):
        return hash("selfishgames.INFINITE")

    def __eq__(self, other):
        return other is self

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True

    def __reduce__(self):
        return (_Infinite, ())


class _Unavailable:
    """Processing time entry meaning the job cannot run on that machine."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNAVAILABLE"

    def __str__(self):
        return "inf"

    def __hash__(self):
        return hash("selfishgames.UNAVAILABLE")

    def __reduce__(self):
        return (_Unavailable, ())


INFINITE = _Infinite()
UNAVAILABLE = _Unavailable()

Value = Union[Fraction, _Infinite]


def is_infinite(x) -> bool:
    return x is INFINITE


def to_rational(x) -> Fraction:
    """Convert ints, Fractions and exact strings ("3/4", "0.6") to a Fraction.

    Floats are refused because their binary expansion is not what the caller
    wrote.
    """
    if isinstance(x, bool):
        raise TypeError("booleans are not sizes")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidInstance(f"not an exact rational: {x!r}") from exc
    if isinstance(x, float):
        raise TypeError(f"float {x!r} is not exact; pass a Fraction or a string")
    try:
        return Fraction(x)
    except (TypeError, ValueError) as exc:
        raise TypeError(f"cannot interpret {x!r} as a rational") from exc


def common_denominator(values: Iterable[Fraction]) -> int:
    d = 1
    for v in values:
        d = math.lcm(d, v.denominator)
    return d


# ---------------------------------------------------------------- instances


@dataclass(frozen=True)
class BinPackInstance:
    """Items with sizes in (0, alpha]; alpha = 1 is the classic game."""

    items: tuple
    alpha: Fraction = Fraction(1)

    def __post_init__(self):
        items = tuple(to_rational(a) for a in self.items)
        alpha = to_rational(self.alpha)
        if not 0 < alpha <= 1:
            raise InvalidInstance(f"alpha must lie in (0, 1], got {alpha}")
        for i, a in enumerate(items):
            if not 0 < a <= alpha:
                raise InvalidInstance(f"item {i} has size {a} outside (0, {alpha}]")
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "alpha", alpha)

    kind = "binpack"

    @property
    def n(self) -> int:
        return len(self.items)

    def total(self) -> Fraction:
        return sum(self.items, Fraction(0))


@dataclass(frozen=True)
class SchedInstance:
    """Jobs on machines under one of the three machine models.

    ``times[k][i]`` is the processing time of job k on machine i (rows are
    jobs) and is only stored for the unrelated model.  Identical and related
    instances store ``sizes`` and ``speeds``; job k takes ``sizes[k] /
    speeds[i]`` on machine i.
    """

    model: str
    m: int
    sizes: tuple | None = None
    speeds: tuple | None = None
    times: tuple | None = None
    _table: tuple = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.model not in MODELS:
            raise InvalidInstance(f"unknown machine model {self.model!r}")
        if self.m < 1:
            raise InvalidInstance("need at least one machine")
        if self.model == "unrelated":
            if self.times is None:
                raise InvalidInstance("unrelated instances need a times matrix")
            rows = []
            for k, row in enumerate(self.times):
                if len(row) != self.m:
                    raise InvalidInstance(f"job {k} has {len(row)} entries, expected {self.m}")
                conv = tuple(UNAVAILABLE if e is UNAVAILABLE else to_rational(e) for e in row)
                if all(e is UNAVAILABLE for e in conv):
                    raise InvalidInstance(f"job {k} cannot run on any machine")
                for e in conv:
                    if e is not UNAVAILABLE and e < 0:
                        raise InvalidInstance(f"job {k} has a negative processing time")
                rows.append(conv)
            object.__setattr__(self, "times", tuple(rows))
            object.__setattr__(self, "sizes", None)
            object.__setattr__(self, "speeds", None)
            table = tuple(rows)
        else:
            if self.sizes is None:
                raise InvalidInstance(f"{self.model} instances need job sizes")
            sizes = tuple(to_rational(p) for p in self.sizes)
            if any(p < 0 for p in sizes):
                raise InvalidInstance("job sizes must be non-negative")
            if self.model == "identical":
                speeds = (Fraction(1),) * self.m
            else:
                if self.speeds is None or len(self.speeds) != self.m:
                    raise InvalidInstance("related instances need one speed per machine")
                speeds = tuple(to_rational(s) for s in self.speeds)
                if any(s < 1 for s in speeds) or min(speeds) != 1:
                    raise InvalidInstance("speeds must be >= 1 with the slowest equal to 1")
            object.__setattr__(self, "sizes", sizes)
            object.__setattr__(self, "speeds", speeds)
            object.__setattr__(self, "times", None)
            table = tuple(tuple(p / s for s in speeds) for p in sizes)
        object.__setattr__(self, "_table", table)

    kind = "sched"

    @classmethod
    def identical(cls, sizes: Sequence, m: int) -> "SchedInstance":
        return cls("identical", m, sizes=tuple(sizes))

    @classmethod
    def related(cls, sizes: Sequence, speeds: Sequence) -> "SchedInstance":
        return cls("related", len(speeds), sizes=tuple(sizes), speeds=tuple(speeds))

    @classmethod
    def unrelated(cls, times: Sequence[Sequence]) -> "SchedInstance":
        times = tuple(tuple(r) for r in times)
        if not times:
            raise InvalidInstance("an unrelated instance needs at least one job")
        return cls("unrelated", len(times[0]), times=times)

    @property
    def n(self) -> int:
        return len(self._table)

    def time(self, k: int, i: int):
        """Processing time of job k on machine i (or UNAVAILABLE)."""
        return self._table[k][i]

    def as_related(self) -> "SchedInstance":
        if self.model == "unrelated":
            raise WrongModel("unrelated instances have no related encoding")
        return SchedInstance.related(self.sizes, self.speeds)


GameInstance = Union[BinPackInstance, SchedInstance]


# ---------------------------------------------------------------- assignments


@dataclass(frozen=True)
class Assignment:
    """Map from agent index to resource index; resource_count is declared."""

    target: tuple
    resource_count: int

    def __post_init__(self):
        target = tuple(int(r) for r in self.target)
        if self.resource_count < 0:
            raise InvalidAssignment("resource_count must be non-negative")
        for k, r in enumerate(target):
            if not 0 <= r < self.resource_count:
                raise InvalidAssignment(f"agent {k} sits on resource {r} outside [0, {self.resource_count})")
        object.__setattr__(self, "target", target)

    def __len__(self):
        return len(self.target)

    def __getitem__(self, k):
        return self.target[k]

    @classmethod
    def from_groups(cls, groups: Sequence[Iterable[int]], n: int | None = None) -> "Assignment":
        """Build from a list of agent lists, one list per resource."""
        groups = [list(g) for g in groups]
        if n is None:
            n = sum(len(g) for g in groups)
        target = [-1] * n
        for r, g in enumerate(groups):
            for k in g:
                if target[k] != -1:
                    raise InvalidAssignment(f"agent {k} appears twice")
                target[k] = r
        if -1 in target:
            raise InvalidAssignment(f"agent {target.index(-1)} is not placed")
        return cls(tuple(target), len(groups))

    def groups(self) -> list:
        out = [[] for _ in range(self.resource_count)]
        for k, r in enumerate(self.target):
            out[r].append(k)
        return out

    def members(self, r: int) -> list:
        return [k for k, t in enumerate(self.target) if t == r]

    def move(self, agent: int, r: int) -> "Assignment":
        """Return a copy with ``agent`` on ``r``; r == resource_count opens a new resource."""
        count = max(self.resource_count, r + 1)
        target = list(self.target)
        target[agent] = r
        return Assignment(tuple(target), count)

    def compact(self) -> "Assignment":
        """Drop empty resources, keeping first-appearance order of the rest."""
        relabel = {}
        target = []
        for r in self.target:
            if r not in relabel:
                relabel[r] = len(relabel)
            target.append(relabel[r])
        return Assignment(tuple(target), len(relabel))

    def partition_key(self) -> frozenset:
        """Set of non-empty agent groups; equal keys mean the same packing."""
        return frozenset(frozenset(g) for g in self.groups() if g)


Packing = Assignment


@dataclass(frozen=True)
class LoadVector:
    loads: tuple

    def __post_init__(self):
        object.__setattr__(self, "loads", tuple(to_rational(x) for x in self.loads))

    def __len__(self):
        return len(self.loads)

    def __iter__(self):
        return iter(self.loads)

    def __getitem__(self, i):
        return self.loads[i]

    def min(self) -> Fraction:
        return min(self.loads)

    def max(self) -> Fraction:
        return max(self.loads)


@dataclass(frozen=True)
class MixedProfile:
    """Row k holds job k's probabilities t_k^i over the machines."""

    probs: tuple

    def __post_init__(self):
        rows = tuple(tuple(to_rational(x) for x in row) for row in self.probs)
        for k, row in enumerate(rows):
            if any(x < 0 for x in row):
                raise InvalidAssignment(f"row {k} has a negative probability")
            if sum(row, Fraction(0)) != 1:
                raise InvalidAssignment(f"row {k} sums to {sum(row, Fraction(0))}, not 1")
        if rows and len({len(r) for r in rows}) != 1:
            raise InvalidAssignment("rows have different lengths")
        object.__setattr__(self, "probs", rows)

    @classmethod
    def uniform(cls, n: int, m: int) -> "MixedProfile":
        return cls(tuple((Fraction(1, m),) * m for _ in range(n)))


# ---------------------------------------------------------------- evaluation


def _check_size(inst: GameInstance, a: Assignment):
    if len(a) != inst.n:
        raise InvalidAssignment(f"assignment covers {len(a)} agents, instance has {inst.n}")
    if isinstance(inst, SchedInstance) and a.resource_count != inst.m:
        raise InvalidAssignment(f"assignment uses {a.resource_count} machines, instance has {inst.m}")


def bin_loads(inst: BinPackInstance, p: Packing) -> list:
    _check_size(inst, p)
    loads = [Fraction(0)] * p.resource_count
    for i, b in enumerate(p.target):
        loads[b] += inst.items[i]
    return loads


def is_valid_packing(inst: BinPackInstance, p: Packing) -> bool:
    return all(x <= 1 for x in bin_loads(inst, p))


def load_vector(inst: GameInstance, a: Assignment) -> LoadVector:
    """Per-resource loads: processing time on unrelated machines, size/speed otherwise."""
    if isinstance(inst, BinPackInstance):
        return LoadVector(tuple(bin_loads(inst, a)))
    _check_size(inst, a)
    loads = [Fraction(0)] * inst.m
    for k, i in enumerate(a.target):
        t = inst.time(k, i)
        if t is UNAVAILABLE:
            raise InvalidAssignment(f"job {k} is unavailable on machine {i}")
        loads[i] += t
    return LoadVector(tuple(loads))


def binpack_item_cost(inst: BinPackInstance, p: Packing, item: int) -> Value:
    """Share of the bin paid by an item: size over bin load, infinite when overfull."""
    if not 0 <= item < inst.n:
        raise IndexError(f"item {item} out of range")
    b = p.target[item]
    load = sum((inst.items[i] for i, t in enumerate(p.target) if t == b), Fraction(0))
    if load > 1:
        return INFINITE
    return inst.items[item] / load


def agent_costs(inst: GameInstance, a: Assignment) -> tuple:
    """Cost of every agent: bin share for packing, machine load for scheduling."""
    if isinstance(inst, BinPackInstance):
        loads = bin_loads(inst, a)
        return tuple(
            INFINITE if loads[b] > 1 else inst.items[i] / loads[b] for i, b in enumerate(a.target)
        )
    loads = load_vector(inst, a).loads
    return tuple(loads[i] for i in a.target)


def objective(inst: GameInstance, a: Assignment, kind: str, strict: bool = False) -> Value:
    """Social value of an assignment.

    Envy with an empty machine next to a loaded one is INFINITE, or raises
    EnvyUndefined when ``strict`` is set.  Envy of an all-zero vector is 1.
    """
    if kind not in OBJECTIVES:
        raise ValueError(f"unknown objective {kind!r}")
    if kind == "bins":
        if not isinstance(inst, BinPackInstance):
            raise WrongModel("bins is a bin packing objective")
        _check_size(inst, a)
        return Fraction(len(set(a.target)))
    if isinstance(inst, BinPackInstance):
        raise WrongModel(f"{kind} is a scheduling objective")
    lv = load_vector(inst, a)
    if kind == "makespan":
        return lv.max()
    if kind == "cover":
        return lv.min()
    hi, lo = lv.max(), lv.min()
    if hi == 0:
        return Fraction(1)
    if lo == 0:
        if strict:
            raise EnvyUndefined("envy ratio with an empty machine")
        return INFINITE
    return hi / lo


def sorted_loads(lv: LoadVector | Sequence) -> LoadVector:
    """Non-increasing view of a load vector."""
    loads = lv.loads if isinstance(lv, LoadVector) else tuple(lv)
    return LoadVector(tuple(sorted(loads, reverse=True)))


def _sign(x, y) -> int:
    return (x > y) - (x < y)


def _prepared(a, b):
    la = sorted_loads(a).loads
    lb = sorted_loads(b).loads
    if len(la) != len(lb):
        raise LengthMismatch(f"vectors of length {len(la)} and {len(lb)}")
    return la, lb


def compare_invlex(a, b) -> int:
    """Inverted lexicographic order on sorted load vectors.

    Coordinates are compared from the smallest load upward; the vector with
    the larger entry at the first difference is larger.  Returns -1, 0 or 1.
    """
    la, lb = _prepared(a, b)
    for x, y in zip(reversed(la), reversed(lb)):
        if x != y:
            return _sign(x, y)
    return 0


def compare_lex(a, b) -> int:
    """Plain lexicographic order on sorted load vectors, from the largest load."""
    la, lb = _prepared(a, b)
    for x, y in zip(la, lb):
        if x != y:
            return _sign(x, y)
    return 0


def scaled_time_table(inst: SchedInstance):
    """Integer processing times over a common denominator, with None for UNAVAILABLE.

    Comparisons of sums are unchanged by the common scale, so the heavy
    enumeration paths work on ints.
    """
    entries = [t for row in inst._table for t in row if t is not UNAVAILABLE]
    d = common_denominator(entries)
    table = tuple(
        tuple(None if t is UNAVAILABLE else int(t * d) for t in row) for row in inst._table
    )
    return table, d


__all__ = [
    "Assignment",
    "BinPackInstance",
    "DomainError",
    "EnvyUndefined",
    "GameError",
    "GameInstance",
    "INFINITE",
    "InvalidAssignment",
    "InvalidInstance",
    "IterationCapExceeded",
    "LengthMismatch",
    "LoadVector",
    "MODELS",
    "MalformedReduction",
    "MixedProfile",
    "NoEquilibrium",
    "NotAnEquilibrium",
    "OBJECTIVES",
    "Packing",
    "ParamOutOfRange",
    "ParamsTooSmall",
    "Rational",
    "SchedInstance",
    "SearchBudgetExceeded",
    "TooManyItems",
    "UNAVAILABLE",
    "Value",
    "WrongModel",
    "agent_costs",
    "bin_loads",
    "binpack_item_cost",
    "common_denominator",
    "compare_invlex",
    "compare_lex",
    "is_infinite",
    "is_valid_packing",
    "load_vector",
    "objective",
    "scaled_time_table",
    "sorted_loads",
    "to_rational",
]
