from fractions import Fraction as F

import pytest

from scpwalk.lattice_measure import (BooleanMeasure, ConditionedSumSpec, ProductSpec,
                                     SpanningTreeSpec, build_measure)

TRIANGLE = [(0, 1), (1, 2), (0, 2)]


@pytest.fixture
def triangle():
    return build_measure(SpanningTreeSpec(3, TRIANGLE))


@pytest.fixture
def slice42():
    return build_measure(ConditionedSumSpec([F(1, 2)] * 4, 2))


@pytest.fixture
def cube2():
    return build_measure(ProductSpec([F(1, 2)] * 2))


@pytest.fixture
def swap2():
    # uniform on {10, 01}
    return BooleanMeasure(2, (0b01, 0b10), (F(1, 2), F(1, 2)))


@pytest.fixture
def correlated():
    return BooleanMeasure.from_table(2, {0b00: F(2, 5), 0b11: F(2, 5), 0b01: F(1, 10), 0b10: F(1, 10)})
