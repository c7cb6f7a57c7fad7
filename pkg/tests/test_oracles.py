import itertools
from fractions import Fraction as F

import pytest

from selfishgames import (
    INFINITE,
    UNAVAILABLE,
    Assignment,
    BinPackInstance,
    EnumerationBudget,
    SchedInstance,
    SearchBudgetExceeded,
    WrongModel,
    canonical_assignments,
    empirical_ratio,
    enumerate_equilibria,
    is_nash,
    load_vector,
    objective,
    opt_bins,
    opt_cover,
    opt_envy,
    opt_makespan,
    opt_value,
    ratio,
    sorted_loads,
)

from helpers import rand_identical, rand_related, rand_unrelated, rng_for


def _labelled(inst):
    for t in itertools.product(range(inst.m), repeat=inst.n):
        a = Assignment(t, inst.m)
        try:
            load_vector(inst, a)
        except Exception:
            continue
        yield a


def _stirling2(n, k):
    if n == k:
        return 1
    if k == 0 or k > n:
        return 0
    return k * _stirling2(n - 1, k) + _stirling2(n - 1, k - 1)


class TestEnumeration:
    @pytest.mark.parametrize("n,m", [(0, 2), (3, 2), (5, 3), (6, 4)])
    def test_identical_counts_set_partitions(self, n, m):
        inst = SchedInstance.identical([1] * n, m)
        got = sum(1 for _ in canonical_assignments(inst))
        assert got == (1 if n == 0 else sum(_stirling2(n, k) for k in range(1, m + 1)))

    def test_unlabelled_covers_every_orbit(self):
        rng = rng_for(71)
        for _ in range(40):
            inst = rand_related(rng, m_max=3, n_max=5)
            canon = {self._orbit_key(inst, a) for a in canonical_assignments(inst)}
            full = {self._orbit_key(inst, a) for a in canonical_assignments(inst, canonical=False)}
            assert canon == full

    @staticmethod
    def _orbit_key(inst, a):
        # machines of equal speed are interchangeable: compare the multiset of (speed, job set)
        groups = [frozenset(g) for g in a.groups()] + [frozenset()] * (inst.m - a.resource_count)
        return tuple(sorted((str(inst.speeds[i]), tuple(sorted(groups[i]))) for i in range(inst.m)))

    def test_unavailable_skipped(self):
        inst = SchedInstance.unrelated([[1, UNAVAILABLE], [2, 3]])
        got = {a.target for a in canonical_assignments(inst)}
        assert got == {(0, 0), (0, 1)}

    def test_budget(self):
        with pytest.raises(SearchBudgetExceeded):
            list(canonical_assignments(SchedInstance.identical([1] * 6, 3), max_profiles=10))
        with pytest.raises(ValueError):
            EnumerationBudget(max_profiles=0)


class TestOptima:
    def test_against_brute_force(self):
        rng = rng_for(72)
        for _ in range(150):
            inst = rng.choice([rand_identical, rand_related, rand_unrelated])(rng, n_max=5)
            profiles = list(_labelled(inst))
            spans = [objective(inst, a, "makespan") for a in profiles]
            covers = [objective(inst, a, "cover") for a in profiles]
            assert opt_makespan(inst)[0] == min(spans)
            assert opt_cover(inst)[0] == max(covers)
            v, w = opt_makespan(inst)
            assert objective(inst, w, "makespan") == v
            v, w = opt_cover(inst)
            assert objective(inst, w, "cover") == v

    def test_envy_against_brute_force(self):
        rng = rng_for(73)
        for _ in range(60):
            inst = rand_identical(rng, m_min=2, n_min=2, n_max=5)
            best = min(objective(inst, a, "envy") for a in _labelled(inst))
            assert opt_envy(inst)[0] == best

    def test_cover_of_too_few_jobs_is_zero(self):
        assert opt_cover(SchedInstance.identical([3], 2))[0] == 0

    def test_opt_value_dispatch(self):
        inst = SchedInstance.identical([1, 2, 3], 2)
        assert opt_value(inst, "makespan")[0] == 3
        assert opt_value(inst, "cover")[0] == 3
        assert opt_value(BinPackInstance((F(1, 2), F(1, 2))), "bins")[0] == 1

    def test_opt_bins_model(self):
        with pytest.raises(WrongModel):
            opt_bins(SchedInstance.identical([1], 1))

    def test_opt_bins_small_cases(self):
        assert opt_bins(BinPackInstance((F(1, 2),) * 3))[0] == 2
        assert opt_bins(BinPackInstance((F(2, 5),) * 5))[0] == 3


class TestRatio:
    def test_conventions(self):
        assert ratio("makespan", 3, 2) == F(3, 2)
        assert ratio("cover", 2, 3) == F(3, 2)
        assert ratio("cover", 0, 3) is INFINITE
        assert ratio("cover", 0, 0) == 1
        assert ratio("envy", INFINITE, INFINITE) == 1
        assert ratio("envy", INFINITE, 2) is INFINITE


class TestEquilibriumSets:
    def test_ne_list_is_exact(self):
        rng = rng_for(74)
        for _ in range(40):
            inst = rand_unrelated(rng, n_max=4)
            want = sorted(a.target for a in _labelled(inst) if is_nash(inst, a).is_ne)
            got = sorted(a.target for a in enumerate_equilibria(inst, "ne", canonical=False))
            assert got == want

    def test_canonical_keeps_every_load_profile(self):
        rng = rng_for(75)
        for _ in range(40):
            inst = rand_identical(rng, m_max=3, n_max=5)
            a = {sorted_loads(load_vector(inst, x)).loads for x in enumerate_equilibria(inst, "ne")}
            b = {sorted_loads(load_vector(inst, x)).loads for x in enumerate_equilibria(inst, "ne", canonical=False)}
            assert a == b

    def test_concept_nesting(self):
        rng = rng_for(76)
        for _ in range(30):
            inst = rand_unrelated(rng, n_max=4)
            ne = {a.target for a in enumerate_equilibria(inst, "ne")}
            sne = {a.target for a in enumerate_equilibria(inst, "sne")}
            spo = {a.target for a in enumerate_equilibria(inst, "spo_ne")}
            wpo = {a.target for a in enumerate_equilibria(inst, "wpo_ne")}
            assert sne <= wpo <= ne and spo <= wpo

    def test_unknown_concept(self):
        with pytest.raises(ValueError):
            enumerate_equilibria(SchedInstance.identical([1], 1), "mixed")
        with pytest.raises(ValueError):
            empirical_ratio(SchedInstance.identical([1], 1), "makespan", "ne", "median")

    def test_pos_never_above_poa(self):
        rng = rng_for(77)
        for _ in range(40):
            inst = rand_related(rng, n_min=1, n_max=5)
            assert empirical_ratio(inst, "makespan", "ne", "best") <= empirical_ratio(inst, "makespan", "ne", "worst")
