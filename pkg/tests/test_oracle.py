import math
from fractions import Fraction

import numpy as np
import pytest

from spinemc import bbm_model, finite_type_model, martingale_spec
from spinemc.oracle import (EnumerationTooLarge, enumerate_discrete_skeleton, exact_size_biased,
                            expected_population, expected_spine_fissions,
                            many_to_one_type_oracle, oracle_self_check)

half = Fraction(1, 2)


def test_expected_population():
    assert expected_population(1.0, 1.0, 0.0) == 1.0
    assert expected_population(1.0, 1.0, 1.0) == pytest.approx(2.718281828)
    assert expected_population(1.0, 2.0, 1.0) == pytest.approx(7.389056, rel=1e-6)


def test_many_to_one_reduces_to_population():
    m = finite_type_model([1.0, 2.0], [1.5, 1.5], 1.0, [[-1, 1], [1, -1]])
    assert many_to_one_type_oracle(m, [1.0, 1.0], 0, 1.0) == pytest.approx(math.exp(1.5), rel=1e-10)
    assert many_to_one_type_oracle(m, [0.3, 0.7], 1, 0.0) == 0.7


def test_many_to_one_two_type_self_check(two_type):
    v = many_to_one_type_oracle(two_type, [0.0, 1.0], 0, 1.0)
    assert 0 < v < math.exp(2.0)
    assert oracle_self_check(two_type, [0.0, 1.0], 0, 1.0) < 1e-8


def test_spine_fission_mean(bbm):
    assert expected_spine_fissions(bbm, martingale_spec(bbm, 0.5), 0, 2.0) == pytest.approx(4.0)
    m = bbm_model(1.0, offspring=[[0.2, 0.3, 0.5]])
    assert expected_spine_fissions(m, martingale_spec(m, 0.0), 0, 1.0) == pytest.approx(1 + 1.3)


@pytest.mark.parametrize("d", range(5))
def test_binary_passage(d):
    res = enumerate_discrete_skeleton([0, 1], d)
    assert res.passage[d] == Fraction(1, 2 ** d)
    assert res.extension_total[d] == 1


@pytest.mark.parametrize("pmf", [(half, 0, half), (Fraction(1, 3),) * 3, (0, Fraction(1, 4), Fraction(3, 4))])
def test_size_biased_family_exact(pmf):
    res = enumerate_discrete_skeleton(pmf, 4)
    sb = {k: p for k, p in enumerate(exact_size_biased(pmf)) if p > 0}
    assert all(law == sb for law in res.spine_family)
    assert all(t == 1 for t in res.extension_total)


def test_half_half_depth_one():
    res = enumerate_discrete_skeleton([half, 0, half], 1)
    assert res.spine_family[0] == {0: Fraction(1, 4), 2: Fraction(3, 4)}
    assert res.size_law[1] == {1: half, 3: half}
    assert res.size_biased_size_law[1] == {1: Fraction(1, 4), 3: Fraction(3, 4)}


def test_guard():
    with pytest.raises(EnumerationTooLarge):
        enumerate_discrete_skeleton([0, 1], 7)
    with pytest.raises(ValueError):
        enumerate_discrete_skeleton([half, half, half], 1)
