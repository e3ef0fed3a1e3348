from fractions import Fraction as F
from itertools import combinations

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scpwalk.errors import ConstructionError, DomainError, SplitError, ValidationError
from scpwalk.lattice_measure import (BitVector, BooleanMeasure, ConditionedSumSpec, ExplicitSpec,
                                     LEnsembleSpec, ProductSpec, SpanningTreeSpec, build_measure,
                                     condition, homogeneity, split, splittable_coordinates)

from conftest import TRIANGLE


def test_bitvector_order_and_indexing():
    x = BitVector.from_str("110")
    assert x.bits == 0b110 and x[1] == 1 and x[3] == 0
    assert x.weight == 2
    with pytest.raises(ValueError):
        BitVector(2, 0b100)


def test_triangle_trees(triangle):
    assert triangle.bitstrings() == ["011", "101", "110"]
    assert triangle.weights == (F(1, 3),) * 3


def test_product_half_is_uniform(cube2):
    assert cube2.size == 4 and cube2.is_uniform()


def test_conditioned_sum_symmetric_slice():
    m = build_measure(ConditionedSumSpec([F(1, 2), F(1, 2)], 1))
    assert m.bitstrings() == ["01", "10"] and m.weights == (F(1, 2), F(1, 2))
    assert homogeneity(m) == 1


def kirchhoff(vertices, edges):
    G = nx.MultiGraph()
    G.add_nodes_from(range(vertices))
    G.add_edges_from(edges)
    Lap = nx.laplacian_matrix(G).toarray().astype(float)
    return round(np.linalg.det(Lap[1:, 1:]))


@pytest.mark.parametrize("vertices,edges", [
    (3, TRIANGLE),
    (4, [(0, 1), (1, 2), (2, 3), (0, 3)]),
    (4, list(combinations(range(4), 2))),
    (5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2)]),
])
def test_tree_count_matches_matrix_tree_theorem(vertices, edges):
    m = build_measure(SpanningTreeSpec(vertices, edges))
    assert m.size == kirchhoff(vertices, edges)
    assert homogeneity(m) == vertices - 1


def test_disconnected_graph_is_rejected():
    with pytest.raises(ConstructionError):
        build_measure(SpanningTreeSpec(4, [(0, 1), (2, 3)]))


def test_bad_probabilities():
    with pytest.raises(ConstructionError):
        build_measure(ProductSpec([F(1, 2), 1]))
    with pytest.raises(ConstructionError):
        build_measure(ConditionedSumSpec([F(1, 2)] * 2, 3))


@pytest.mark.parametrize("n", range(1, 6))
def test_diagonal_l_ensemble_is_product(n):
    d = np.random.default_rng(n).uniform(0.2, 3.0, n)
    m = build_measure(LEnsembleSpec(np.diag(d)))
    prod = build_measure(ProductSpec(list(d / (1 + d))))
    assert m.support == prod.support
    np.testing.assert_allclose(m.probs, prod.probs, rtol=1e-12)


def test_l_ensemble_requires_psd():
    with pytest.raises(ValidationError):
        build_measure(LEnsembleSpec([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(ValidationError):
        build_measure(LEnsembleSpec([[1.0, 0.5], [0.0, 1.0]]))


def test_l_ensemble_real_weights_sum_to_one():
    A = np.random.default_rng(0).standard_normal((5, 5))
    m = build_measure(LEnsembleSpec(A @ A.T))
    assert not m.exact
    assert abs(sum(m.weights) - 1) <= 1e-12


def test_measure_validation():
    with pytest.raises(ValidationError):
        BooleanMeasure(2, (1, 0), (F(1, 2), F(1, 2)))
    with pytest.raises(ValidationError):
        BooleanMeasure(2, (0, 1), (F(1, 2), F(1, 3)))
    with pytest.raises(ValidationError):
        BooleanMeasure(2, (0, 1), (F(1), F(0)))


def test_condition_examples(cube2, triangle):
    c = condition(cube2, {1: 1})
    assert c.measure.n == 1 and c.measure.is_uniform()
    c = condition(triangle, {3: 0})
    assert c.measure.bitstrings() == ["11"] and c.coords == (1, 2)
    c = condition(triangle, {3: 1})
    assert c.measure.bitstrings() == ["01", "10"]
    assert [c.lift(s) for s in c.measure.support] == [0b011, 0b101]


def test_condition_on_null_event_carries_assignment(triangle):
    with pytest.raises(DomainError) as err:
        condition(triangle, {1: 0, 2: 0})
    assert err.value.payload == {1: 0, 2: 0}


def test_homogeneity_examples(triangle, cube2):
    assert homogeneity(triangle) == 2
    assert homogeneity(cube2) is None
    assert homogeneity(BooleanMeasure(3, (0,), (F(1),))) == 0


def test_split_examples(swap2, triangle):
    s = split(swap2, 1)
    assert s.projection == (F(1, 2), F(1, 2))
    assert s.block0.size == s.block1.size == 1
    s = split(triangle, 3)
    assert s.projection == (F(1, 3), F(2, 3))
    assert s.block0.bitstrings() == ["110"] and s.block1.bitstrings() == ["011", "101"]
    s = split(build_measure(ProductSpec([F(3, 10)])), 1)
    assert s.projection == (F(7, 10), F(3, 10))
    with pytest.raises(SplitError):
        split(BooleanMeasure(2, (0b10, 0b11), (F(1, 2), F(1, 2))), 1)


def test_splittable_coordinates(triangle):
    assert splittable_coordinates(triangle) == [1, 2, 3]
    m = BooleanMeasure(3, (0b100, 0b110), (F(1, 2), F(1, 2)))
    assert splittable_coordinates(m) == [2]


def random_measure(draw, n):
    size = draw(st.integers(1, 2 ** n))
    support = sorted(draw(st.lists(st.integers(0, 2 ** n - 1), min_size=size, max_size=size, unique=True)))
    raw = draw(st.lists(st.integers(1, 9), min_size=len(support), max_size=len(support)))
    total = sum(raw)
    return BooleanMeasure(n, tuple(support), tuple(F(r, total) for r in raw))


@st.composite
def measures(draw, n_max=4):
    return random_measure(draw, draw(st.integers(2, n_max)))


@settings(max_examples=60, deadline=None)
@given(measures(), st.data())
def test_condition_composes(m, data):
    coords = data.draw(st.permutations(range(1, m.n + 1)))
    k = data.draw(st.integers(1, m.n - 1))
    A = {c: data.draw(st.integers(0, 1)) for c in coords[:1]}
    B = {c: data.draw(st.integers(0, 1)) for c in coords[1:k + 1]}
    try:
        joint = condition(m, {**A, **B})
    except DomainError:
        return
    first = condition(m, A)
    # B re-indexed into the smaller cube
    B_small = {first.coords.index(c) + 1: b for c, b in B.items()}
    second = condition(first.measure, B_small)
    assert second.measure == joint.measure


@settings(max_examples=60, deadline=None)
@given(measures())
def test_split_masses(m):
    for ell in splittable_coordinates(m):
        s = split(m, ell)
        assert s.projection[0] + s.projection[1] == 1
        assert sum(s.block0.weights) == 1 and sum(s.block1.weights) == 1
        for i, w in zip(s.indices0, s.block0.weights):
            assert w == m.weights[i] / s.projection[0]


def test_explicit_spec_drops_zero_weights():
    m = build_measure(ExplicitSpec(2, {0: F(1, 2), 3: F(1, 2), 1: 0}))
    assert m.support == (0, 3)
