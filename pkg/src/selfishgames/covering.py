"""Machine covering and the envy ratio: optimal equilibria, weight functions,
mixed-strategy expectations, and lower-bound instance families.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from .core import (
    Assignment,
    DomainError,
    MixedProfile,
    ParamOutOfRange,
    SchedInstance,
    SearchBudgetExceeded,
    WrongModel,
    compare_invlex,
    compare_lex,
    load_vector,
    objective,
    to_rational,
)
from .equilibria import DEFAULT_MAX_PROFILES, is_nash
from .oracles import canonical_assignments
from .scheduling import lpt_schedule

HALF = Fraction(1, 2)
TWO_THIRDS = Fraction(2, 3)


class CoverConstruction(NamedTuple):
    instance: SchedInstance
    ne: Assignment
    opt_hint: Assignment


# ---------------------------------------------------------------- weight functions


def weight_w(x) -> Fraction:
    """1/2 at 1, x/(2-x) on (1/2, 2/3), x/(x+1) on (0, 1/2]; undefined elsewhere."""
    x = to_rational(x)
    if x == 1:
        return HALF
    if HALF < x < TWO_THIRDS:
        return x / (2 - x)
    if 0 < x <= HALF:
        return x / (x + 1)
    raise DomainError(f"w is not defined at {x}")


def weight_f(y) -> Fraction:
    """Inverse of w: y/(1-y) on (0, 1/3], 2y/(1+y) on (1/3, 1/2), and 1 at 1/2."""
    y = to_rational(y)
    if y == HALF:
        return Fraction(1)
    if Fraction(1, 3) < y < HALF:
        return 2 * y / (1 + y)
    if 0 < y <= Fraction(1, 3):
        return y / (1 - y)
    raise DomainError(f"f is not defined at {y}")


def weight_g(x) -> Fraction:
    x = to_rational(x)
    if x < 0:
        raise DomainError("g is defined for non-negative sizes")
    return min(x, Fraction(1))


# ---------------------------------------------------------------- optimal equilibria


def construct_best_ne(inst: SchedInstance, objective_kind: str = "cover", max_profiles: int = DEFAULT_MAX_PROFILES) -> Assignment:
    """An optimal schedule that is also an NE, on identical machines.

    cover: the inverted-lexicographically largest load vector, which is cover
    optimal.  envy: among envy-optimal schedules the lexicographically
    smallest load vector.
    """
    if not isinstance(inst, SchedInstance) or inst.model != "identical":
        raise WrongModel("construct_best_ne works on identical machines")
    if objective_kind not in ("cover", "envy"):
        raise ValueError("objective must be 'cover' or 'envy'")
    best = None
    best_key = None
    for a in canonical_assignments(inst, max_profiles):
        lv = load_vector(inst, a)
        if best is None:
            best, best_key = a, (objective(inst, a, "envy") if objective_kind == "envy" else None, lv)
            continue
        if objective_kind == "cover":
            if compare_invlex(lv, best_key[1]) > 0:
                best, best_key = a, (None, lv)
        else:
            e = objective(inst, a, "envy")
            if e < best_key[0] or (e == best_key[0] and compare_lex(lv, best_key[1]) < 0):
                best, best_key = a, (e, lv)
    return best


# ---------------------------------------------------------------- mixed strategies


@dataclass(frozen=True)
class MixedReport:
    expected_cover: Fraction
    expected_loads: tuple
    expected_costs: tuple  # [k][i] = E(c_k^i)

    def is_mixed_ne(self, profile: MixedProfile) -> bool:
        """Every job puts weight only on machines that minimize its expected cost."""
        for k, row in enumerate(profile.probs):
            best = min(self.expected_costs[k])
            if any(t > 0 and self.expected_costs[k][i] != best for i, t in enumerate(row)):
                return False
        return True


def mixed_expected_cover(inst: SchedInstance, profile: MixedProfile, max_outcomes: int = DEFAULT_MAX_PROFILES) -> MixedReport:
    """Exact expected minimum load by summing over all pure outcomes of the profile."""
    if inst.model == "unrelated":
        raise WrongModel("mixed covering is defined for identical and related machines")
    n, m = inst.n, inst.m
    probs = profile.probs
    if len(probs) != n or any(len(row) != m for row in probs):
        raise ValueError("profile shape does not match the instance")
    eload = tuple(sum((inst.sizes[k] * probs[k][i] for k in range(n)), Fraction(0)) / inst.speeds[i] for i in range(m))
    ecost = tuple(
        tuple(eload[i] + (1 - probs[k][i]) * inst.sizes[k] / inst.speeds[i] for i in range(m))
        for k in range(n)
    )
    support = [[i for i in range(m) if probs[k][i] > 0] for k in range(n)]
    total = 1
    for s in support:
        total *= len(s)
    if total > max_outcomes:
        raise SearchBudgetExceeded(f"{total} outcomes exceed the budget of {max_outcomes}")
    expected = Fraction(0)
    for outcome in itertools.product(*support):
        p = Fraction(1)
        loads = [Fraction(0)] * m
        for k, i in enumerate(outcome):
            p *= probs[k][i]
            loads[i] += inst.sizes[k]
        expected += p * min(loads[i] / inst.speeds[i] for i in range(m))
    return MixedReport(expected, eload, ecost)


# ---------------------------------------------------------------- identical-machine families

_SMALL_LAYOUTS = {
    # m: (jobs of size 1, jobs of size 1/2, required divisor of the tiny count, default count)
    2: (2, 0, 2, 10),
    3: (2, 3, 1, 6),
    4: (4, 3, 8, 8),
    6: (6, 6, 6, 6),
}


def _harmonic_terms(k: int) -> list:
    t = [1]
    while len(t) < k:
        t.append(t[-1] * (t[-1] + 1))
    return t


def gen_cover_lower_identical(m: int | None = None, T: int | None = None, harmonic: int | None = None, verify: bool = True) -> CoverConstruction:
    """Covering NE with minimum load 1 against a better optimum.

    ``m`` in {2, 3, 4, 6}: tall machines hold two unit jobs or three halves,
    and one machine holds T tiny jobs of size 1/T (ratios 3/2, 3/2, 13/8 and
    5/3).  ``harmonic=k``: with t_1 = 1 and t_{i+1} = t_i(t_i+1), m = t_k
    machines; m/(t_i+1) machines carry t_i+1 jobs of size 1/t_i for i < k and
    one machine carries m jobs of size 1/m.  The optimum gives every machine
    one job of each size and reaches the sum of 1/t_i.
    """
    if harmonic is not None:
        if harmonic < 2:
            raise ParamOutOfRange("harmonic construction needs k >= 2")
        t = _harmonic_terms(harmonic)
        m = t[-1]
        sizes, ne, opt = [], [], []
        machine = 0
        for ti in t[:-1]:
            for _ in range(m // (ti + 1)):
                for _ in range(ti + 1):
                    sizes.append(Fraction(1, ti))
                    ne.append(machine)
                    opt.append(len(opt) % m)
                machine += 1
            # the m jobs of this size land one per machine
        for c in range(m):
            sizes.append(Fraction(1, m))
            ne.append(machine)
            opt.append(c)
        assert machine == m - 1
    else:
        if m not in _SMALL_LAYOUTS:
            raise ParamOutOfRange("m must be one of 2, 3, 4, 6 (or use harmonic)")
        ones, halves, div, default = _SMALL_LAYOUTS[m]
        T = default if T is None else T
        if T < 1 or T % div:
            raise ParamOutOfRange(f"T must be a positive multiple of {div} for m={m}")
        sizes = [Fraction(1)] * ones + [HALF] * halves + [Fraction(1, T)] * T
        ne = [i // 2 for i in range(ones)]
        tall = ones // 2
        ne += [tall + i // 3 for i in range(halves)]
        tiny_machine = tall + halves // 3
        ne += [tiny_machine] * T
        opt = _balanced_hint(ones, halves, T, m)
    inst = SchedInstance.identical(sizes, m)
    ne_a = Assignment(tuple(ne), m)
    opt_a = Assignment(tuple(opt), m)
    if verify and not is_nash(inst, ne_a).is_ne:
        raise AssertionError("covering layout is not an NE")
    return CoverConstruction(inst, ne_a, opt_a)


def _balanced_hint(ones, halves, T, m):
    """Ones and halves spread one per machine, then each tiny joins the lowest machine."""
    target = list(range(ones)) + list(range(halves))
    loads = [Fraction(0)] * m
    for i in range(ones):
        loads[i] += 1
    for i in range(halves):
        loads[i] += HALF
    for _ in range(T):
        i = min(range(m), key=lambda i: (loads[i], i))
        loads[i] += Fraction(1, T)
        target.append(i)
    return target


# ---------------------------------------------------------------- related-machine families


def _sqrt_ineq_geq(s: Fraction) -> bool:
    """s >= (3 + sqrt 17)/4, decided exactly."""
    u = 4 * s - 3
    return u > 0 and u * u >= 17


def poa_two_related_formula(s) -> Fraction:
    """Cover price of anarchy on two machines with speeds 1 and s, 1 < s < 2."""
    s = to_rational(s)
    if not 1 < s < 2:
        raise ParamOutOfRange("needs 1 < s < 2")
    return min((s + 2) / ((s + 1) * (2 - s)), 2 / (s * (2 - s)))


def gen_cover_related(kind: str, s=None, eps=None, m: int = 2, verify: bool = True) -> CoverConstruction:
    """Related-machine covering witnesses.

    zero_cover: s >= 2, m jobs of size s, speeds 1 (machine 0), 1 (middle)
    and s (last); the NE leaves machine 0 empty.
    eps_family: s = 2 - eps, m large jobs of size s and one of size eps; the
    NE puts the small job alone on machine 0.
    two_poa: speeds (1, s), 1 < s < 2, the worst NE of the anarchy formula.
    two_pos: speeds (1, s), s >= (3+sqrt 17)/4 or s <= 4/3, where even the
    best NE is suboptimal.
    """
    if kind == "zero_cover":
        s = to_rational(2 if s is None else s)
        if s < 2 or m < 2:
            raise ParamOutOfRange("zero_cover needs s >= 2 and m >= 2")
        speeds = [Fraction(1)] * (m - 1) + [s]
        sizes = [s] * m
        ne = [m - 1, m - 1] + list(range(1, m - 1))
        opt = list(range(m))
    elif kind == "eps_family":
        eps = to_rational(Fraction(1, 10) if eps is None else eps)
        if not 0 < eps < 1 or m < 2:
            raise ParamOutOfRange("eps_family needs 0 < eps < 1 and m >= 2")
        s = 2 - eps
        speeds = [Fraction(1)] * (m - 1) + [s]
        sizes = [s] * m + [eps]
        ne = [m - 1, m - 1] + list(range(1, m - 1)) + [0]
        opt = list(range(m)) + [0]
    elif kind == "two_poa":
        s = to_rational(s)
        if not 1 < s < 2:
            raise ParamOutOfRange("two_poa needs 1 < s < 2")
        speeds = [Fraction(1), s]
        branch_low = (s + 2) / ((s + 1) * (2 - s))
        branch_high = 2 / (s * (2 - s))
        if branch_low < branch_high:
            a = (2 - s * s) / (s + 2)
            b = s * (s + 1) / (s + 2)
            c = s / (s + 2)
            sizes = [a, b, c, b]
            ne = [0, 1, 0, 1]
            opt = [0, 0, 1, 1]
        else:
            b = s * s / 2
            c = (2 - s) * s / 2
            sizes = [b, c, b]
            ne = [1, 0, 1]
            opt = [0, 1, 1]
    elif kind == "two_pos":
        s = to_rational(s)
        eps = to_rational(Fraction(1, 1000) if eps is None else eps)
        if eps <= 0:
            raise ParamOutOfRange("eps must be positive")
        speeds = [Fraction(1), s]
        if 1 < s < 2 and _sqrt_ineq_geq(s):
            sizes = [2 * s - 1, 1 + eps, Fraction(1)]
            ne = None
            opt = [1, 0, 0]
        elif 1 < s <= Fraction(4, 3):
            if not eps < s - 1:
                raise ParamOutOfRange("two_pos needs eps < s - 1 when s <= 4/3")
            big = 2 - s + eps
            sizes = [big, big, s - 1, s - 1]
            ne = None
            opt = [0, 1, 0, 1]
        else:
            raise ParamOutOfRange("two_pos needs 1 < s <= 4/3 or (3+sqrt 17)/4 <= s < 2")
    else:
        raise ParamOutOfRange(f"unknown family {kind!r}")
    inst = SchedInstance.related(sizes, speeds)
    # LPT is the best NE here; the other families spell out their NE
    ne_a = lpt_schedule(inst) if kind == "two_pos" else Assignment(tuple(ne), len(speeds))
    opt_a = Assignment(tuple(opt), len(speeds))
    if verify and not is_nash(inst, ne_a).is_ne:
        raise AssertionError(f"{kind} layout is not an NE")
    return CoverConstruction(inst, ne_a, opt_a)


__all__ = [
    "CoverConstruction",
    "MixedReport",
    "construct_best_ne",
    "gen_cover_lower_identical",
    "gen_cover_related",
    "mixed_expected_cover",
    "poa_two_related_formula",
    "weight_f",
    "weight_g",
    "weight_w",
]
