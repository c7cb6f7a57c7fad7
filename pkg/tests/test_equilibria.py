import itertools
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selfishgames import (
    Assignment,
    BinPackInstance,
    IterationCapExceeded,
    MovePolicy,
    NotAnEquilibrium,
    SchedInstance,
    SearchBudgetExceeded,
    WrongModel,
    agent_costs,
    all_packings,
    best_response_dynamics,
    canonical_assignments,
    costs_equal,
    gen_preserving_fixture,
    gen_wpo_unrelated,
    improving_moves,
    is_nash,
    is_strict_pareto,
    is_strong_nash,
    is_weak_pareto,
    load_vector,
    objective,
    opt_makespan,
    preserving_deviations,
    recognize_spo_related,
    sorted_loads,
)

from helpers import EIGHT_NE, EIGHT_UNSTABLE, eight_jobs, rand_assignment, rand_binpack, rand_identical, rand_related, rand_unrelated, rng_for

FIVE = BinPackInstance((F(1, 2), F(1, 2), F(1, 3), F(1, 3), F(1, 3)))
FIVE_UNSTABLE = Assignment((2, 2, 0, 1, 1), 3)  # a lone 1/3 next to a 2/3 bin
FIVE_NE = Assignment((0, 1, 0, 1, 2), 3)  # {1/2,1/3}|{1/2,1/3}|{1/3}
FIVE_SNE = Assignment((0, 0, 1, 1, 1), 2)  # two full bins

FAST = SchedInstance.related([2, 2], [1, 2])


def _labelled(inst):
    return [Assignment(t, inst.m) for t in itertools.product(range(inst.m), repeat=inst.n)]


class TestImprovingMoves:
    def test_lone_third_moves(self):
        moves = improving_moves(FIVE, FIVE_UNSTABLE)
        assert any(m.agent == 2 and m.target == 1 for m in moves)
        m = is_nash(FIVE, FIVE_UNSTABLE).witness_move
        assert (m.agent, m.source, m.target, m.old_cost, m.new_cost) == (2, 0, 1, 1, F(1, 3))

    def test_small_job_leaves_heaviest(self):
        moves = improving_moves(eight_jobs(), EIGHT_UNSTABLE)
        small = [m for m in moves if m.agent in (6, 7)]
        assert small and all(m.old_cost == F(7, 5) and m.new_cost == F(13, 10) for m in small)

    def test_single_agent(self):
        assert improving_moves(SchedInstance.identical([3], 4), Assignment((2,), 4)) == []
        assert improving_moves(BinPackInstance((F(1, 2),)), Assignment((0,), 1)) == []

    def test_moves_strictly_improve(self):
        rng = rng_for(11)
        for _ in range(100):
            inst = rng.choice([rand_identical, rand_related, rand_unrelated])(rng)
            a = rand_assignment(rng, inst) if inst.n else Assignment((), inst.m)
            for m in improving_moves(inst, a):
                assert m.new_cost < m.old_cost
                assert agent_costs(inst, a.move(m.agent, m.target))[m.agent] == m.new_cost


class TestNash:
    def test_both_on_fast_is_ne(self):
        assert is_nash(FAST, Assignment((1, 1), 2)).is_ne

    def test_eight_jobs(self):
        assert is_nash(eight_jobs(), EIGHT_NE).is_ne
        assert not is_nash(eight_jobs(), EIGHT_UNSTABLE).is_ne

    def test_mixed_bins_is_ne(self):
        assert is_nash(FIVE, FIVE_NE).is_ne

    def test_binpack_matches_move_list(self):
        rng = rng_for(12)
        for _ in range(60):
            inst = rand_binpack(rng, n_max=6)
            for p in all_packings(inst):
                assert is_nash(inst, p).is_ne == (improving_moves(inst, p) == [])


class TestStrongNash:
    def test_two_full_bins(self):
        assert is_strong_nash(FIVE, FIVE_SNE).is_sne
        assert is_strong_nash(FIVE, FIVE_SNE, method="search").is_sne

    @pytest.mark.parametrize("method", ["fresh-bin", "search"])
    def test_mixed_bins_coalition(self, method):
        rep = is_strong_nash(FIVE, FIVE_NE, method=method)
        assert not rep.is_sne
        w = rep.witness_coalition
        before, after = agent_costs(FIVE, FIVE_NE), agent_costs(FIVE, w.deviation)
        assert all(after[k] < before[k] for k in w.agents)

    def test_single_item(self):
        assert is_strong_nash(BinPackInstance((F(2, 3),)), Assignment((0,), 1)).is_sne

    def test_fresh_bin_agrees_with_search(self):
        rng = rng_for(13)
        checked = 0
        for _ in range(40):
            inst = rand_binpack(rng, n_max=6, den_max=12)
            for p in all_packings(inst):
                fast = is_strong_nash(inst, p, method="fresh-bin").is_sne
                slow = is_strong_nash(inst, p, method="search").is_sne
                assert fast == slow, (inst, p)
                checked += 1
        assert checked > 100

    def test_coalition_cap_one_is_nash(self):
        rng = rng_for(14)
        for _ in range(40):
            inst = rand_identical(rng, n_max=5, m_min=2)
            a = rand_assignment(rng, inst)
            assert is_strong_nash(inst, a, max_coalition=1).is_sne == is_nash(inst, a).is_ne

    def test_sne_implies_ne_and_wpo(self):
        rng = rng_for(15)
        for _ in range(30):
            inst = rng.choice([rand_identical, rand_related])(rng, m_max=3, n_max=4)
            for a in canonical_assignments(inst):
                if is_strong_nash(inst, a).is_sne:
                    assert is_nash(inst, a).is_ne
                    assert is_weak_pareto(inst, a, method="enumerate").is_wpo

    def test_budget(self):
        inst = SchedInstance.identical([1] * 6, 3)
        with pytest.raises(SearchBudgetExceeded):
            is_strong_nash(inst, Assignment((0, 1, 2, 0, 1, 2), 3), max_nodes=5)


class TestPareto:
    def test_both_on_fast(self):
        a = Assignment((1, 1), 2)
        assert is_weak_pareto(FAST, a, method="enumerate").is_wpo
        rep = is_strict_pareto(FAST, a, method="enumerate")
        assert not rep.is_spo
        assert sorted(rep.witness_profile.target) == [0, 1]

    def test_two_unrelated_witness(self):
        w = gen_wpo_unrelated(2)
        assert w.instance.time(0, 0) == w.instance.time(0, 1) == w.instance.time(1, 0) == 1
        assert w.instance.time(1, 1) == 2
        assert is_nash(w.instance, w.schedule).is_ne
        assert is_weak_pareto(w.instance, w.schedule).is_wpo
        assert objective(w.instance, w.schedule, "makespan") == 2

    def test_optimal_schedules_are_wpo(self):
        rng = rng_for(16)
        for _ in range(40):
            inst = rng.choice([rand_identical, rand_related, rand_unrelated])(rng, n_max=4)
            if not inst.n:
                continue
            _, opt = opt_makespan(inst)
            assert is_weak_pareto(inst, opt, method="enumerate").is_wpo

    def test_shortcuts_agree_with_enumeration(self):
        rng = rng_for(17)
        for _ in range(40):
            inst = rng.choice([rand_identical, rand_related])(rng, m_max=3, n_max=5)
            for a in _labelled(inst):
                assert is_weak_pareto(inst, a).is_wpo == is_weak_pareto(inst, a, method="enumerate").is_wpo
                assert is_strict_pareto(inst, a).is_spo == is_strict_pareto(inst, a, method="enumerate").is_spo

    def test_spo_implies_wpo(self):
        rng = rng_for(18)
        for _ in range(30):
            inst = rand_unrelated(rng, n_max=4)
            for a in _labelled(inst):
                if is_strict_pareto(inst, a, method="enumerate").is_spo:
                    assert is_weak_pareto(inst, a, method="enumerate").is_wpo

    def test_binpack_pareto(self):
        # two full bins cannot be improved for anyone
        assert is_strict_pareto(FIVE, FIVE_SNE).is_spo
        assert not is_weak_pareto(FIVE, FIVE_NE).is_wpo


class TestRecognition:
    def test_fast_example(self):
        assert not recognize_spo_related(FAST, Assignment((1, 1), 2)).is_spo
        assert recognize_spo_related(FAST, Assignment((0, 1), 2)).is_spo

    def test_no_empty_machine(self):
        inst = SchedInstance.related([1, 2, 3], [1, 2, 3])
        a = Assignment((0, 1, 2), 3)
        assert is_nash(inst, a).is_ne
        assert recognize_spo_related(inst, a).is_spo

    def test_unrelated_rejected(self):
        with pytest.raises(WrongModel):
            recognize_spo_related(SchedInstance.unrelated([[1, 2]]), Assignment((0,), 2))

    def test_identical_ne_is_spo(self):
        rng = rng_for(19)
        for _ in range(60):
            inst = rand_identical(rng, m_max=4, n_max=6)
            for a in canonical_assignments(inst):
                if is_nash(inst, a).is_ne:
                    assert recognize_spo_related(inst, a).is_spo

    def test_related_ne_is_wpo_exhaustively(self):
        rng = rng_for(20)
        for _ in range(40):
            inst = rand_related(rng, m_max=3, n_max=5)
            for a in canonical_assignments(inst):
                if is_nash(inst, a).is_ne:
                    assert is_weak_pareto(inst, a, method="enumerate").is_wpo


class TestDynamics:
    def test_eight_jobs_unstable(self):
        a, trace = best_response_dynamics(eight_jobs(), EIGHT_UNSTABLE)
        assert is_nash(eight_jobs(), a).is_ne
        assert trace
        assert objective(eight_jobs(), a, "cover") in (1, F(6, 5), F(13, 10))

    def test_already_ne(self):
        a, trace = best_response_dynamics(eight_jobs(), EIGHT_NE)
        assert a == EIGHT_NE and trace == []

    def test_two_halves_merge(self):
        inst = BinPackInstance((F(1, 2), F(1, 2)))
        a, trace = best_response_dynamics(inst, Assignment((0, 1), 2))
        assert len(trace) == 1
        assert len(set(a.target)) == 1

    @pytest.mark.parametrize("policy", ["lowest", "largest_gain"])
    def test_always_reaches_ne(self, policy):
        rng = rng_for(21)
        for _ in range(80):
            kind = rng.randrange(4)
            if kind == 0:
                inst = rand_binpack(rng, n_max=10)
                start = Assignment(tuple(range(inst.n)), inst.n)
            else:
                inst = [rand_identical, rand_related, rand_unrelated][kind - 1](rng, m_min=1, n_max=8)
                start = rand_assignment(rng, inst) if inst.n else Assignment((), inst.m)
            a, _ = best_response_dynamics(inst, start, MovePolicy(policy))
            assert is_nash(inst, a).is_ne

    def test_cap(self):
        with pytest.raises(IterationCapExceeded):
            best_response_dynamics(eight_jobs(), EIGHT_UNSTABLE, max_steps=0)

    def test_policy_validated(self):
        with pytest.raises(ValueError):
            MovePolicy("random")


class TestPreserving:
    def test_identical_sorted_loads_match(self):
        rng = rng_for(22)
        for _ in range(30):
            inst = rand_identical(rng, m_max=3, n_max=6)
            for a in canonical_assignments(inst):
                if not is_nash(inst, a).is_ne:
                    continue
                for b in preserving_deviations(inst, a):
                    assert b != a and costs_equal(inst, a, b)
                    assert sorted_loads(load_vector(inst, a)) == sorted_loads(load_vector(inst, b))

    def test_65_machines(self):
        inst, x, y = gen_preserving_fixture()
        assert inst.m == 65 and inst.n == 64
        assert costs_equal(inst, x, y)
        assert sorted_loads(load_vector(inst, x)) != sorted_loads(load_vector(inst, y))

    def test_distinct_costs(self):
        inst = SchedInstance.unrelated([[1, 2], [3, 5]])
        a = Assignment((1, 0), 2)
        assert is_nash(inst, a).is_ne
        assert preserving_deviations(inst, a) == []

    def test_requires_ne(self):
        with pytest.raises(NotAnEquilibrium):
            preserving_deviations(eight_jobs(), EIGHT_UNSTABLE)


@given(st.lists(st.integers(1, 12), min_size=1, max_size=6), st.integers(1, 3))
@settings(max_examples=40, deadline=None)
def test_identical_ne_with_no_empty_machine_is_spo(sizes, m):
    inst = SchedInstance.identical(sizes, m)
    for a in canonical_assignments(inst):
        if len(set(a.target)) == m and is_nash(inst, a).is_ne:
            assert is_strict_pareto(inst, a, method="enumerate").is_spo
