import math
import random

import numpy as np
import pytest

from shortcycles import exact, montecarlo as mc
from shortcycles.errors import DomainError


def test_single_sample_invariants():
    for n in (1, 2, 7, 1000):
        vec = mc.sample_cycle_counts(n, 42)
        assert vec.n == n and len(vec.counts) == n
        assert sum(j * k for j, k in enumerate(vec.counts, 1)) == n
    assert mc.sample_cycle_counts(1, 9).counts == (1,)
    assert mc.sample_cycle_counts(0, 9).counts == ()


def test_seed_replay():
    assert mc.sample_cycle_counts(50, 123) == mc.sample_cycle_counts(50, 123)
    assert mc.sample_poisson(10, 5) == mc.sample_poisson(10, 5)


def test_n2_is_uniform():
    draws = 100_000
    fixed = sum(mc.sample_cycle_counts(2, s).counts == (2, 0) for s in range(draws))
    sigma = math.sqrt(0.25 / draws)
    assert abs(fixed / draws - 0.5) <= 3 * sigma


def test_cycle_counts_of():
    assert mc.cycle_counts_of([1, 0, 2, 4, 5, 3]) == [1, 1, 1, 0, 0, 0]


def test_estimate_trivial_case():
    est = mc.estimate_density(10, 5, mc.KAPPA, 10 ** 6, 2024)
    assert abs(est.estimate - 0.1) <= 3 * est.stderr
    assert est.algorithm == "PCG64"


def test_estimate_derangements():
    est = mc.estimate_density(10, 1, mc.KAPPA, 10 ** 6, 99)
    assert abs(est.estimate - float(exact.kappa_exact(10, 1))) <= 3 * est.stderr


def test_nu_certain():
    est = mc.estimate_density(5, 5, mc.NU, 1000, 1)
    assert est.estimate == 1.0 and est.stderr == 0.0


def test_independent_of_worker_count():
    a = mc.estimate_density(12, 3, mc.NU, 200_000, 8)
    b = mc.estimate_density(12, 3, mc.NU, 200_000, 8, workers=4)
    assert a == b


def test_random_grid_agrees_with_exact():
    rng = random.Random(11)
    for i in range(30):
        n = rng.randint(2, 40)
        r = rng.randint(1, n)
        mode = rng.choice([mc.KAPPA, mc.NU])
        est = mc.estimate_density(n, r, mode, 20_000, 1000 + i)
        ref = float(exact.kappa_exact(n, r) if mode == mc.KAPPA else exact.nu_exact(n, r))
        # when the estimate is 0 or 1 the binomial stderr vanishes
        slack = max(4 * est.stderr, 4 * math.sqrt(ref * (1 - ref) / 20_000), 1e-12)
        assert abs(est.estimate - ref) <= slack


def test_large_n_path():
    est = mc.estimate_density(300, 150, mc.KAPPA, 3000, 5)
    assert abs(est.estimate - 1 / 300) <= max(4 * est.stderr, 4 * math.sqrt(1 / 300 / 3000))


@pytest.mark.parametrize("n", range(1, 9))
def test_cycle_type_chi_square(n):
    stat, dof, p = mc.cycle_type_chi_square(n, 10 ** 6, 500 + n)
    assert p >= 1e-3


def test_poisson_means():
    draws = mc.poisson_batch(20, 10 ** 6, 77)
    lam = 1.0 / np.arange(1, 21)
    z = np.abs(draws.mean(axis=0) - lam) / np.sqrt(lam / 10 ** 6)
    assert np.all(z <= 5)


def test_domain():
    with pytest.raises(DomainError):
        mc.estimate_density(10, 3, "rho", 10, 1)
    with pytest.raises(DomainError):
        mc.estimate_density(10, 3, mc.KAPPA, 0, 1)
    with pytest.raises(DomainError):
        mc.sample_cycle_counts(-1, 1)


def test_csv():
    est = mc.estimate_density(6, 2, mc.KAPPA, 100, 3)
    head, row = mc.to_csv([est]).splitlines()
    assert head == "n,r,mode,samples,estimate,stderr,seed"
    assert row.startswith("6,2,kappa,100,")
