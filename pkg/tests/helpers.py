"""Seeded random instance makers shared by the test modules."""

import random
from fractions import Fraction

from selfishgames import BinPackInstance, SchedInstance


def rng_for(seed):
    return random.Random(seed)


def rand_binpack(rng, n_min=1, n_max=8, den_max=60):
    n = rng.randint(n_min, n_max)
    items = []
    for _ in range(n):
        den = rng.randint(1, den_max)
        items.append(Fraction(rng.randint(1, den), den))
    return BinPackInstance(tuple(items))


def rand_identical(rng, m_max=3, n_max=6, top=6, m_min=1, n_min=0):
    m = rng.randint(m_min, m_max)
    n = rng.randint(n_min, n_max)
    return SchedInstance.identical([Fraction(rng.randint(1, top), rng.randint(1, 2)) for _ in range(n)], m)


def rand_related(rng, m_max=3, n_max=6, top=6, m_min=1, n_min=0):
    m = rng.randint(m_min, m_max)
    n = rng.randint(n_min, n_max)
    speeds = [Fraction(1)] + [rng.choice([Fraction(1), Fraction(3, 2), Fraction(2), Fraction(3)]) for _ in range(m - 1)]
    rng.shuffle(speeds)
    return SchedInstance.related([Fraction(rng.randint(1, top)) for _ in range(n)], speeds)


def rand_unrelated(rng, m_max=3, n_max=5, top=5, m_min=1, n_min=1):
    m = rng.randint(m_min, m_max)
    n = rng.randint(n_min, n_max)
    return SchedInstance.unrelated([[Fraction(rng.randint(1, top)) for _ in range(m)] for _ in range(n)])


def rand_assignment(rng, inst):
    from selfishgames import Assignment

    return Assignment(tuple(rng.randrange(inst.m) for _ in range(inst.n)), inst.m)


# three jobs 0.8 (0-2), three 0.4 (3-5), two 0.1 (6-7) on three identical machines
EIGHT_SIZES = [Fraction(8, 10)] * 3 + [Fraction(4, 10)] * 3 + [Fraction(1, 10)] * 2


def eight_jobs():
    return SchedInstance.identical(EIGHT_SIZES, 3)


def _eight_job_assignments():
    from selfishgames import Assignment

    # NE with cover 1: {0.4,0.4,0.1,0.1} | {0.8,0.8} | {0.8,0.4}
    left = Assignment((1, 1, 2, 0, 0, 2, 0, 0), 3)
    # {0.8,0.4} on each machine, both 0.1 jobs on the last: loads 1.2,1.2,1.4
    right = Assignment((0, 1, 2, 0, 1, 2, 2, 2), 3)
    return left, right


EIGHT_NE, EIGHT_UNSTABLE = _eight_job_assignments()
