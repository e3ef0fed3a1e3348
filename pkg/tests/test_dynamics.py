import math
from fractions import Fraction as F

import numpy as np
import pytest
from scipy.linalg import expm

from scpwalk.chain import build_bases_exchange, build_mcmc, two_state
from scpwalk.decompose import certify_main
from scpwalk.dynamics import (corollary_bound, evolve, mixing_bound, mixing_bound_detail,
                              mixing_report, mixing_time, poisson_weights, tv)
from scpwalk.errors import DomainError
from scpwalk.suite import corpus

CHAINS = [(name, build_mcmc(m)) for name, m in corpus() if m.size > 1]


def test_evolve_zero_time(triangle):
    Q = build_bases_exchange(triangle)
    np.testing.assert_array_equal(evolve(Q, "101", 0.0), [0.0, 1.0, 0.0])
    with pytest.raises(DomainError):
        evolve(Q, 0, -1.0)
    with pytest.raises(DomainError):
        evolve(Q, "111", 1.0)


@pytest.mark.parametrize("t", [0.05, 0.3, 1.0, 2.5, 7.0])
def test_evolve_symmetric_two_state(t):
    p = evolve(two_state(1, 1), 0, t)
    e = math.exp(-2 * t)
    np.testing.assert_allclose(p, [0.5 + e / 2, 0.5 - e / 2], atol=1e-12)


@pytest.mark.parametrize("name,Q", CHAINS)
def test_evolve_matches_expm(name, Q):
    for t in (0.5, 4.0):
        np.testing.assert_allclose(evolve(Q, 0, t), expm(t * Q.dense())[0], atol=1e-10)


@pytest.mark.parametrize("name,Q", CHAINS)
def test_evolve_mass_monotone_tv_and_balance(name, Q):
    pi = Q.measure.probs
    grid = np.geomspace(0.05, 200, 20)
    last = 1.0
    for t in grid:
        p = evolve(Q, 0, t)
        assert p.min() >= 0 and abs(p.sum() - 1) <= 1e-10
        d = tv(p, pi)
        assert d <= last + 1e-12
        last = d
    x, y = 0, Q.size - 1
    t = 1.7
    assert pi[x] * evolve(Q, x, t)[y] == pytest.approx(pi[y] * evolve(Q, y, t)[x], abs=1e-9)


def test_large_time_reaches_stationarity(triangle):
    Q = build_bases_exchange(triangle)
    assert tv(evolve(Q, 0, 400.0), triangle.probs) <= 1e-8


def test_poisson_tail():
    w = poisson_weights(30.0)
    assert 1 - w.sum() <= 1e-12


def test_tv_examples():
    assert tv([0.2, 0.8], [0.2, 0.8]) == 0
    assert tv([1, 0], [0, 1]) == 1
    assert tv([0.7, 0.3], [0.5, 0.5]) == pytest.approx(0.2)
    with pytest.raises(DomainError):
        tv([1.0], [0.5, 0.5])


def test_mixing_time_two_state():
    Q = two_state(1, 1)
    assert mixing_time(Q, 0, 0.25) == pytest.approx(0.5 * math.log(2), abs=1e-6)
    assert mixing_time(Q, 0, 0.5) == 0.0
    with pytest.raises(DomainError):
        mixing_time(Q, 0, 1.0)


def test_mixing_bound_examples():
    assert mixing_bound("mlsi", 0.25, 1 / 16, 1 / 8) == pytest.approx(
        4 * (math.log(math.log(16)) + math.log(32)))
    assert mixing_bound("mlsi", 0.25, 1 / 16, 1 / 8) == pytest.approx(17.942, abs=1e-3)
    assert mixing_bound("pi", 0.5, 0.25, 0.25) == pytest.approx(2 * math.log(4))


def test_loglog_floor():
    value, floored = mixing_bound_detail("mlsi", 1.0, 0.5, 0.25)
    assert floored and value == pytest.approx(math.log(8))
    with pytest.raises(DomainError):
        mixing_bound("mlsi", 1.0, 0.5, 0.25, floor_loglog=False)
    with pytest.raises(DomainError):
        mixing_bound("mlsi", 1.0, 1.0, 0.25)
    with pytest.raises(DomainError):
        mixing_bound("mlsi", 0.0, 0.1, 0.25)


@pytest.mark.parametrize("k,n", [(2, 4), (3, 6), (1, 5)])
def test_corollary_form_dominates_mlsi_form(k, n):
    # the constant 1/(2kn) plugged into the MLSI mixing bound, vs the stated corollary form
    for px in (1e-3, 0.05, 0.2):
        for eps in (0.25, 0.125):
            a = mixing_bound("mlsi", F(1, 2 * k * n), px, eps)
            b = corollary_bound(k, n, px, eps)
            assert b == pytest.approx(a + 2 * k * n * math.log(4))


def test_triangle_mixing_below_certified_bound(triangle):
    Q = build_bases_exchange(triangle)
    cert = certify_main(triangle, Q, "alpha")
    t = mixing_time(Q, 0, 1 / 8)
    assert t <= mixing_bound("mlsi", cert.best, 1 / 3, 1 / 8)
    rep = mixing_report(Q, "110", 1 / 8)
    assert rep.passed and rep.constants_used["alpha"]["provenance"] == "certificate"


@pytest.mark.parametrize("name,m", [(n, m) for n, m in corpus() if m.size > 1])
def test_headline_mixing_check(name, m):
    Q = build_mcmc(m)
    alpha = certify_main(m, Q, "alpha", verify_scp=False).best
    for x, px in enumerate(m.weights):
        if float(px) >= math.exp(-1):
            continue
        for eps in (0.25, 0.125):
            assert mixing_time(Q, x, eps) <= mixing_bound("mlsi", alpha, float(px), eps)
