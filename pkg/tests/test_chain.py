from fractions import Fraction as F

import numpy as np
import pytest

from scpwalk.chain import (Generator, adjacent_pairs, build_bases_exchange, build_mcmc,
                           generator_from_dict, normalize, two_state, validate)
from scpwalk.errors import DomainError, PreconditionError, ValidationError
from scpwalk.lattice_measure import BooleanMeasure, ConditionedSumSpec, ProductSpec, build_measure


def test_mcmc_on_swap_pair(swap2):
    Q = build_mcmc(swap2)
    # k = 1, n = 2
    assert Q.rates == {(0, 1): F(1, 4), (1, 0): F(1, 4)}
    st = validate(Q)
    assert st.m == st.M == F(1, 4) and st.flip_swap and st.normalized


def test_mcmc_uses_metropolis_ratio():
    m = build_measure(ProductSpec([F(1, 4)]))
    Q = build_mcmc(m)
    # not homogeneous: k = n/2 = 1/2, so 1/(2kn) = 1
    assert Q.rate(0, 1) == F(1, 3) and Q.rate(1, 0) == 1
    st = validate(Q)
    assert st.m == F(1, 3) and st.M == 1


def test_bases_exchange_triangle(triangle):
    Q = build_bases_exchange(triangle)
    st = validate(Q)
    assert st.m == st.M == F(1, 12) and st.delta == F(1, 6)
    assert Q.exact


def test_bases_exchange_preconditions(cube2):
    with pytest.raises(PreconditionError):
        build_bases_exchange(cube2)
    m = build_measure(ConditionedSumSpec([F(1, 3), F(1, 2)], 1))
    with pytest.raises(PreconditionError):
        build_bases_exchange(m)


def test_adjacent_pairs_symmetric(slice42):
    pairs = set(adjacent_pairs(slice42))
    assert all((j, i) in pairs for i, j in pairs)
    # each 2-subset of [4] swaps with 4 others
    assert len(pairs) == 6 * 4


def test_validate_rejects_irreversible(swap2):
    with pytest.raises(ValidationError):
        validate(Generator(swap2, {(0, 1): F(1), (1, 0): F(2)}))
    with pytest.raises(ValidationError):
        validate(Generator(swap2, {(0, 1): F(-1), (1, 0): F(-1)}))


def test_from_dense_checks():
    m = BooleanMeasure(1, (0, 1), (F(1, 2), F(1, 2)))
    Q = Generator.from_dense(m, [[-1.0, 1.0], [1.0, -1.0]])
    assert Q.rate(0, 1) == 1.0
    with pytest.raises(ValidationError):
        Generator.from_dense(m, [[-1.0, 2.0], [1.0, -1.0]])


def test_vacuous_stats():
    m = BooleanMeasure(2, (0b11,), (F(1),))
    st = validate(build_mcmc(m))
    assert st.vacuous and st.m == float("inf")


def test_two_state():
    Q = two_state(2, 3)
    assert Q.measure.weights == (F(3, 5), F(2, 5))
    validate(Q)
    with pytest.raises(DomainError):
        two_state(0, 1)


def test_normalize_and_dense(triangle):
    Q = normalize(build_bases_exchange(triangle))
    assert Q.delta == 1
    D = Q.dense()
    np.testing.assert_allclose(D.sum(axis=1), 0, atol=1e-15)


def test_roundtrip(triangle):
    Q = build_bases_exchange(triangle)
    R = generator_from_dict(Q.to_dict(), triangle)
    assert R.rates == Q.rates
