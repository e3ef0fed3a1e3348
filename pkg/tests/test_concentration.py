import math
from fractions import Fraction as F

import numpy as np
import pytest

from scpwalk.chain import build_bases_exchange, build_mcmc, two_state
from scpwalk.concentration import (herbst_check, lipschitz_constant, pemantle_peres_check,
                                   quad_variation)
from scpwalk.decompose import certify_main
from scpwalk.errors import PreconditionError
from scpwalk.lattice_measure import homogeneity
from scpwalk.suite import corpus, random_lipschitz


def coord_sum(m, coords):
    return np.array([sum((s >> (m.n - c)) & 1 for c in coords) for s in m.support], dtype=float)


def test_quad_variation_examples(swap2):
    Q = two_state(1, 1)
    assert quad_variation(Q, [3.0, 3.0]) == 0
    assert quad_variation(Q, [0.0, 1.0]) == 1
    assert quad_variation(build_mcmc(swap2), [0.0, 1.0]) == pytest.approx(0.25)


@pytest.mark.parametrize("c", [0.0, 0.5, 3.0])
def test_quad_variation_scaling(c, slice42):
    Q = build_mcmc(slice42)
    f = np.random.default_rng(0).normal(size=slice42.size)
    assert quad_variation(Q, c * f) == pytest.approx(c * c * quad_variation(Q, f))


def test_lipschitz_examples(cube2):
    assert lipschitz_constant(coord_sum(cube2, [1, 2]), cube2) == 1
    assert lipschitz_constant(2 * coord_sum(cube2, [1]), cube2) == 2
    assert lipschitz_constant(np.ones(4), cube2) == 0


def test_flip_swap_metric(slice42):
    f = coord_sum(slice42, [1, 2])
    assert lipschitz_constant(f, slice42, "hamming") == 0.5
    assert lipschitz_constant(f, slice42, "flip_swap") == 1.0


def test_herbst_constant_f(triangle):
    Q = build_bases_exchange(triangle)
    rep = herbst_check(triangle, Q, np.ones(3), F(1, 3))
    assert rep.all_pass and rep.vacuous
    assert np.all(rep.exact_tail[rep.grid > 0] == 0)


def test_herbst_slice(slice42):
    Q = build_mcmc(slice42)
    rep = herbst_check(slice42, Q, coord_sum(slice42, [1, 2]), F(1, 16), [0.5, 1.0])
    np.testing.assert_allclose(rep.exact_tail, [1 / 6, 1 / 6])
    assert rep.all_pass


def test_herbst_triangle(triangle):
    Q = build_bases_exchange(triangle)
    alpha = certify_main(triangle, Q, "alpha").best
    assert alpha == F(1, 3)
    rep = herbst_check(triangle, Q, coord_sum(triangle, [1]), alpha)
    assert rep.all_pass
    assert np.all(np.diff(rep.exact_tail) <= 0)


def test_pp_examples(slice42, triangle):
    rep = pemantle_peres_check(slice42, coord_sum(slice42, [1, 2]), [0.0, 1.0])
    assert rep.exact_tail[1] == pytest.approx(1 / 6)
    assert rep.bound[1] == pytest.approx(math.exp(-1 / 16))
    assert rep.bound[0] == 1.0 and rep.all_pass
    rep = pemantle_peres_check(triangle, coord_sum(triangle, [1]), [0.6])
    assert rep.exact_tail[0] == 0 and rep.all_pass


def test_pp_rescales(cube2):
    from scpwalk.lattice_measure import ConditionedSumSpec, build_measure
    m = build_measure(ConditionedSumSpec([F(1, 2)] * 3, 1))
    rep = pemantle_peres_check(m, [0.0, 0.0, 10.0])
    assert rep.rescaled == pytest.approx(5.0)
    with pytest.raises(PreconditionError):
        pemantle_peres_check(cube2, [0.0, 1.0, 1.0, 2.0])


CHAINS = [(n, m) for n, m in corpus() if m.size > 1]


@pytest.mark.parametrize("name,m", CHAINS)
def test_herbst_both_signs_with_certificate(name, m):
    Q = build_mcmc(m)
    alpha = certify_main(m, Q, "alpha", verify_scp=False).best
    rng = np.random.default_rng(5)
    for _ in range(10):
        f = random_lipschitz(m, rng)
        assert herbst_check(m, Q, f, alpha).all_pass
        assert herbst_check(m, Q, -f, alpha).all_pass


@pytest.mark.parametrize("name,m", [(n, m) for n, m in CHAINS if homogeneity(m) is not None])
def test_pp_random_lipschitz(name, m):
    k = homogeneity(m)
    rng = np.random.default_rng(6)
    grid = np.arange(0.25, 2 * k + 1e-9, 0.25)
    for _ in range(50):
        assert pemantle_peres_check(m, random_lipschitz(m, rng), grid).all_pass
