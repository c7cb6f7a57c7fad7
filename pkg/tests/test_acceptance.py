"""Acceptance criteria 1-11, each at its stated size and tolerance.

Every test records one pass/fail line, printed at the end of the pytest run.
Run this file directly to execute only these checks.
"""

import math
import sys
from contextlib import contextmanager
from fractions import Fraction as F

import pytest

from conftest import ACCEPTANCE
from selfishgames import (
    INFINITE,
    Assignment,
    ConstructionParams,
    MixedProfile,
    SchedInstance,
    all_packings,
    best_response_dynamics,
    bound_formulas,
    canonical_assignments,
    construct_best_ne,
    empirical_ratio,
    enumerate_equilibria,
    gen_cover_lower_identical,
    gen_cover_related,
    gen_poa_lower,
    gen_preserving_fixture,
    gen_wpo_unrelated,
    is_nash,
    is_strict_pareto,
    is_strong_nash,
    is_subset_sum_output,
    is_weak_pareto,
    load_vector,
    mixed_expected_cover,
    objective,
    opt_cover,
    opt_makespan,
    opt_value,
    poa_two_related_formula,
    preserving_deviations,
    ratio,
    recognize_spo_related,
    costs_equal,
    sorted_loads,
    subset_sum_pack,
)

from helpers import rand_assignment, rand_binpack, rand_identical, rand_related, rng_for
from test_binpack import TABLE, _cells

UNLIMITED = 10**12


@contextmanager
def criterion(num, title):
    note = {"detail": ""}
    try:
        yield note
    except BaseException:
        ACCEPTANCE[num] = f"[FAIL] criterion {num:2d}: {title} {note['detail']}".rstrip()
        raise
    ACCEPTANCE[num] = f"[PASS] criterion {num:2d}: {title} {note['detail']}".rstrip()


def test_criterion_01_subset_sum_output_is_strong():
    with criterion(1, "Subset Sum packings are strong equilibria") as note:
        rng = rng_for(1001)
        searched = 0
        for _ in range(200):
            inst = rand_binpack(rng, n_min=1, n_max=12, den_max=60)
            p, _ = subset_sum_pack(inst)
            assert is_strong_nash(inst, p, max_nodes=UNLIMITED).is_sne, inst
            if inst.n <= 7:
                # full coalition enumeration as an independent second opinion
                assert is_strong_nash(inst, p, max_nodes=UNLIMITED, method="search").is_sne, inst
                searched += 1
        note["detail"] = f"(200/200, {searched} also by coalition search)"


def test_criterion_02_strong_equilibria_are_subset_sum_outputs():
    with criterion(2, "enumerated SNE set equals the Subset Sum output set") as note:
        rng = rng_for(1002)
        total = 0
        for j in range(50):
            # half with fine sizes, half with coarse sizes that force ties
            inst = rand_binpack(rng, n_min=4, n_max=9, den_max=60 if j % 2 else 6)
            sne = {p.partition_key() for p in enumerate_equilibria(inst, "sne")}
            ss = {p.partition_key() for p in all_packings(inst) if is_subset_sum_output(inst, p)}
            assert sne == ss, inst
            total += len(sne)
        note["detail"] = f"(50 instances, {total} packings)"


def test_criterion_03_binpack_anarchy_construction():
    with criterion(3, "bin packing lower-bound construction gives 1304/803") as note:
        c = gen_poa_lower(ConstructionParams(s=3, r_last=100))
        assert is_nash(c.instance, c.ne).is_ne
        r = F(objective(c.instance, c.ne, "bins"), objective(c.instance, c.opt_hint, "bins"))
        assert r == F(1304, 803)
        assert r >= F(162, 100)
        note["detail"] = f"({r} = {float(r):.6f})"


def test_criterion_04_bound_table():
    with criterion(4, "bound formulas match all table cells within 1e-6") as note:
        tol = F(1, 10**6)
        worst = F(0)
        cells = 0
        for t, row in TABLE.items():
            for want, got in zip(row, _cells(bound_formulas(t))):
                d = abs(F(got) - F(str(want)))
                assert d <= tol, (t, want, float(got))
                worst = max(worst, d)
                cells += 1
        b = bound_formulas(1)
        assert abs(b.spoa - F("1.606695")) <= tol
        assert abs(b.poa_lower - F("1.641632")) <= tol
        assert abs(b.poa_upper - F("1.642857")) <= tol
        note["detail"] = f"({cells} cells, max |d| = {float(worst):.2e})"


def test_criterion_05_pareto_fixtures():
    with criterion(5, "Pareto fixtures: two-machine WPO witness and speeds (1,2) example") as note:
        w = gen_wpo_unrelated(2)
        assert is_nash(w.instance, w.schedule).is_ne
        assert is_weak_pareto(w.instance, w.schedule, method="enumerate").is_wpo
        opt, _ = opt_makespan(w.instance)
        r = ratio("makespan", objective(w.instance, w.schedule, "makespan"), opt)
        assert r == 2
        inst = SchedInstance.related([2, 2], [1, 2])
        a = Assignment((1, 1), 2)
        assert is_nash(inst, a).is_ne
        assert recognize_spo_related(inst, a).is_spo is False
        assert is_strict_pareto(inst, a, method="enumerate").is_spo is False
        note["detail"] = f"(ratio {r})"


def test_criterion_06_recognition_matches_enumeration():
    with criterion(6, "SPO recognition agrees with exhaustive search") as note:
        rng = rng_for(1006)
        checked = ne_not_spo = 0
        for _ in range(500):
            inst = rand_related(rng, m_max=3, n_max=6)
            for a in canonical_assignments(inst):
                ne = is_nash(inst, a).is_ne
                want = ne and is_strict_pareto(inst, a, method="enumerate").is_spo
                assert recognize_spo_related(inst, a).is_spo == want, (inst, a)
                checked += 1
                ne_not_spo += ne and not want
        assert ne_not_spo > 0
        note["detail"] = f"(500 instances, {checked} schedules, {ne_not_spo} NE that are not SPO)"


def test_criterion_07_preserving_deviations():
    with criterion(7, "preserving deviations keep the sorted load vector") as note:
        rng = rng_for(1007)
        deviations = 0
        for _ in range(200):
            inst = rand_identical(rng, m_min=1, m_max=3, n_min=1, n_max=7, top=4)
            a, _ = best_response_dynamics(inst, rand_assignment(rng, inst))
            assert is_nash(inst, a).is_ne
            before = sorted_loads(load_vector(inst, a))
            for b in preserving_deviations(inst, a):
                assert sorted_loads(load_vector(inst, b)) == before, (inst, a, b)
                deviations += 1
        assert deviations > 0
        inst, x, y = gen_preserving_fixture()
        assert costs_equal(inst, x, y)
        assert sorted_loads(load_vector(inst, x)) != sorted_loads(load_vector(inst, y))
        note["detail"] = f"(200 NE, {deviations} deviations; 65-machine fixture ok)"


def test_criterion_08_cover_lower_bounds():
    with criterion(8, "covering lower bounds 3/2, 13/8, 5/3 with oracle optimum") as note:
        got = []
        for m, want in ((2, F(3, 2)), (4, F(13, 8)), (6, F(5, 3))):
            c = gen_cover_lower_identical(m)
            assert is_nash(c.instance, c.ne).is_ne
            opt, _ = opt_cover(c.instance)
            assert opt == objective(c.instance, c.opt_hint, "cover")
            r = ratio("cover", objective(c.instance, c.ne, "cover"), opt)
            assert r == want
            got.append(str(r))
        note["detail"] = f"({', '.join(got)})"


def test_criterion_09_best_equilibrium_is_optimal():
    with criterion(9, "construct_best_ne is optimal and an NE for cover and envy") as note:
        rng = rng_for(1009)
        for _ in range(200):
            m = rng.randint(2, 4)
            inst = rand_identical(rng, m_min=m, m_max=m, n_min=1, n_max=8)
            for kind in ("cover", "envy"):
                a = construct_best_ne(inst, kind)
                assert is_nash(inst, a).is_ne, (inst, kind)
                opt = opt_value(inst, kind)[0]
                assert ratio(kind, objective(inst, a, kind), opt) == 1, (inst, kind)
        note["detail"] = "(200 instances x 2 objectives)"


def test_criterion_10_mixed_cover():
    with criterion(10, "uniform mixed profile on unit jobs has expected cover m!/m^m") as note:
        vals = []
        for m in (2, 3, 4):
            inst = SchedInstance.identical([1] * m, m)
            prof = MixedProfile.uniform(m, m)
            rep = mixed_expected_cover(inst, prof)
            assert rep.expected_cover == F(math.factorial(m), m**m)
            assert rep.is_mixed_ne(prof)
            vals.append(str(rep.expected_cover))
        two = SchedInstance.identical([1, 1], 2)
        assert F(opt_cover(two)[0]) / mixed_expected_cover(two, MixedProfile.uniform(2, 2)).expected_cover == 2
        note["detail"] = f"({', '.join(vals)})"


def test_criterion_11_related_covering():
    with criterion(11, "related covering: zero cover, two-machine anarchy and stability") as note:
        c = gen_cover_related("zero_cover", s=2, m=3)
        assert is_nash(c.instance, c.ne).is_ne
        assert objective(c.instance, c.ne, "cover") == 0
        assert empirical_ratio(c.instance, "cover", "ne", "worst") is INFINITE
        for s in (F(6, 5), F(3, 2), F(7, 4)):
            c = gen_cover_related("two_poa", s=s)
            assert empirical_ratio(c.instance, "cover", "ne", "worst") == poa_two_related_formula(s)
        s, eps = F(19, 10), F(1, 1000)
        c = gen_cover_related("two_pos", s=s, eps=eps)
        pos = empirical_ratio(c.instance, "cover", "ne", "best")
        assert pos == (2 - 1 / s) / (1 + eps)
        note["detail"] = f"(POS {pos})"


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
