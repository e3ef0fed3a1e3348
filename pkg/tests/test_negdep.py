from fractions import Fraction as F

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scpwalk.errors import CeilingError, DomainError, InfeasibleCouplingError, SplitError
from scpwalk.lattice_measure import (BitVector, BooleanMeasure, LEnsembleSpec, ProductSpec,
                                     build_measure)
from scpwalk.negdep import (ADJACENT, check_scp, cover_infeasibility, covers, covers_mask,
                            adjacent_mask, flip_swap_coupling, stochastic_cover_coupling)

from test_lattice_measure import measures


def bv(s):
    return BitVector.from_str(s)


def bern(p):
    p = F(p)
    return BooleanMeasure(1, (0, 1), (1 - p, p))


def test_covers_examples():
    assert covers(bv("100"), bv("000"))
    assert not covers(bv("110"), bv("000"))
    assert covers(bv("011"), bv("011"))
    assert not covers(bv("000"), bv("100"))
    with pytest.raises(DomainError):
        covers(bv("10"), bv("100"))


def test_adjacency():
    assert adjacent_mask(0b110, 0b101)      # swap
    assert adjacent_mask(0b110, 0b100)      # flip
    assert not adjacent_mask(0b110, 0b001)
    assert not adjacent_mask(0b11, 0b11)


@pytest.mark.parametrize("x,y", [(a, b) for a in range(8) for b in range(8)])
def test_covers_antisymmetric(x, y):
    if covers_mask(x, y) and covers_mask(y, x):
        assert x == y


def test_point_masses_couple():
    c = stochastic_cover_coupling(BooleanMeasure(1, (1,), (F(1),)), BooleanMeasure(1, (0,), (F(1),)))
    assert c.mass == {(0, 0): 1}


def test_bernoulli_order():
    assert stochastic_cover_coupling(bern("0.2"), bern("0.8")) is None
    inst = cover_infeasibility(bern("0.2"), bern("0.8"))
    assert inst.flow_value < inst.total_mass
    c = stochastic_cover_coupling(bern("0.8"), bern("0.2"))
    c.validate()
    M = c.matrix()
    assert M[1, 1] == pytest.approx(0.2) and M[1, 0] == pytest.approx(0.6) and M[0, 0] == pytest.approx(0.2)
    assert c.exact


def flow_oracle(mu, nu):
    """Feasibility of mu |> nu by networkx max flow on the same bipartite graph."""
    G = nx.DiGraph()
    for i, w in enumerate(mu.weights):
        G.add_edge("s", ("L", i), capacity=float(w))
    for j, w in enumerate(nu.weights):
        G.add_edge(("R", j), "t", capacity=float(w))
    for i, x in enumerate(mu.support):
        for j, y in enumerate(nu.support):
            if covers_mask(x, y):
                G.add_edge(("L", i), ("R", j))
    if "t" not in G or "s" not in G:
        return False
    return nx.maximum_flow_value(G, "s", "t") >= 1 - 1e-9


@st.composite
def pairs_same_n(draw):
    from test_lattice_measure import random_measure
    n = draw(st.integers(1, 3))
    return random_measure(draw, n), random_measure(draw, n)


@settings(max_examples=150, deadline=None)
@given(pairs_same_n())
def test_coupling_agrees_with_networkx(pair):
    mu, nu = pair
    c = stochastic_cover_coupling(mu, nu)
    assert (c is not None) == flow_oracle(mu, nu)
    if c is not None:
        c.validate()
        for x, y, w in c.pairs():
            assert bin(x).count("1") - bin(y).count("1") in (0, 1)


def test_scp_examples(cube2, correlated, triangle):
    assert check_scp(cube2).holds
    assert check_scp(triangle).holds
    rep = check_scp(correlated)
    assert not rep.holds
    w = rep.witness
    assert list(w.S) == [1] and w.x == "1" and w.y == "0"
    assert "0.8" in w.explanation or "4/5" in w.explanation


@pytest.mark.parametrize("n", range(1, 7))
def test_products_have_scp(n):
    p = np.random.default_rng(n).uniform(0.05, 0.95, n)
    assert check_scp(build_measure(ProductSpec(list(np.round(p, 3))))).holds


def test_dpp_has_scp():
    A = np.random.default_rng(3).standard_normal((4, 4))
    assert check_scp(build_measure(LEnsembleSpec(A @ A.T))).holds


def test_sampled_mode():
    m = build_measure(ProductSpec([F(1, 3)] * 4))
    a = check_scp(m, mode="sampled", seed=5, count=300)
    b = check_scp(m, mode="sampled", seed=5, count=300)
    assert a.holds and a.to_dict() == b.to_dict() and a.seed == 5
    with pytest.raises(DomainError):
        check_scp(m, mode="sampled")


def test_sampled_mode_finds_violation(correlated):
    assert not check_scp(correlated, mode="sampled", seed=0, count=50).holds


def test_ceiling():
    m = build_measure(ProductSpec([F(1, 2)] * 3))
    with pytest.raises(CeilingError):
        check_scp(m, ceiling=2)


def test_flip_swap_coupling_examples(swap2, triangle, cube2):
    c = flip_swap_coupling(swap2, 1)
    assert [(x, y, w) for x, y, w in c.pairs()] == [(0b01, 0b10, 1)]
    c = flip_swap_coupling(triangle, 3)
    assert sorted(c.pairs()) == [(0b110, 0b011, F(1, 2)), (0b110, 0b101, F(1, 2))]
    c = flip_swap_coupling(cube2, 2)
    assert sorted(c.pairs()) == [(0b00, 0b01, F(1, 2)), (0b10, 0b11, F(1, 2))]
    assert c.relation == ADJACENT
    c.validate()


def test_flip_swap_coupling_errors(correlated):
    with pytest.raises(InfeasibleCouplingError):
        flip_swap_coupling(correlated, 1)
    with pytest.raises(SplitError):
        flip_swap_coupling(BooleanMeasure(2, (0b10, 0b11), (F(1, 2), F(1, 2))), 1)


@settings(max_examples=60, deadline=None)
@given(measures(n_max=4))
def test_flip_swap_pairs_are_adjacent_when_scp(m):
    if not check_scp(m).holds:
        return
    from scpwalk.lattice_measure import splittable_coordinates
    for ell in splittable_coordinates(m):
        c = flip_swap_coupling(m, ell)
        c.validate()
        for x, y, w in c.pairs():
            assert adjacent_mask(x, y)


def test_report_json(correlated):
    d = check_scp(correlated).to_dict()
    assert d["holds"] is False and d["witness"]["S"] == [1]
    assert "flow" in d["witness"]
