import json

import numpy as np
import pytest

from spinemc.model import (BranchingRate, ModelError, OffspringLaw, PathRecord, bbm_model,
                           degenerate_model, finite_type_model, general_model, load_config,
                           model_from_config, rate_and_mean_along, size_biased_pmf)


def test_binary_default(bbm):
    assert bbm.n_types == 1
    assert bbm.mean_offspring()[0] == 1.0
    assert bbm.m_times_r()[0] == 1.0
    assert bbm.is_tabular


def test_size_biased_half_half():
    law = OffspringLaw(table=[[0.5, 0.0, 0.5]])
    assert np.allclose(size_biased_pmf(law), [0.25, 0.0, 0.75])


def test_size_biased_binary_is_point_mass():
    assert np.array_equal(size_biased_pmf(OffspringLaw(table=[[0.0, 1.0]])), [0.0, 1.0])


@pytest.mark.parametrize("table", [[[0.5, 0.6]], [[-0.1, 1.1]]])
def test_bad_pmf_rejected(table):
    with pytest.raises(ModelError):
        OffspringLaw(table=table)


def test_bad_motion_rejected():
    with pytest.raises(ModelError):
        finite_type_model([1.0, -1.0], [1.0, 1.0], 1.0, [[-1, 1], [1, -1]])
    with pytest.raises(ModelError):
        finite_type_model([1.0, 1.0], [1.0, 1.0], 1.0, [[-1, 1], [2, -1]])
    with pytest.raises(ModelError):
        finite_type_model([1.0, 1.0], [1.0, 1.0], 1.0, [[0, 0], [1, -1]])  # reducible
    with pytest.raises(ModelError):
        bbm_model(0.0)


def test_invariant_measure(two_type):
    assert np.allclose(two_type.motion.pi, [0.5, 0.5])


def test_general_rate_bound_enforced():
    model = general_model(lambda x, y: 5.0, r_max=1.0)
    with pytest.raises(ModelError):
        model.rate(0.0, 0)
    assert not model.is_tabular


def test_rate_integrals_tabular(two_type):
    path = PathRecord(np.array([0.0, 0.5, 1.0]), np.zeros(3), np.array([0, 1, 1]))
    ir, imr = rate_and_mean_along(two_type, path, 1.0)
    assert ir == pytest.approx(0.5 * 1.0 + 0.5 * 2.0)
    assert imr == pytest.approx(ir)
    ir, _ = rate_and_mean_along(two_type, path, 0.25)
    assert ir == pytest.approx(0.25)


def test_rate_integrals_general_trapezoid():
    model = general_model(lambda x, y: 1.0 + x, r_max=10.0)
    path = PathRecord(np.array([0.0, 1.0]), np.array([0.0, 2.0]), np.array([0, 0]))
    ir, _ = rate_and_mean_along(model, path, 1.0)
    assert ir == pytest.approx(2.0)
    with pytest.raises(ValueError):
        rate_and_mean_along(model, path, 1.5)


def test_path_concat():
    a = PathRecord(np.array([0.0, 1.0]), np.array([0.0, 1.0]), np.array([0, 0]))
    b = PathRecord(np.array([1.0, 2.0]), np.array([1.0, 0.5]), np.array([0, 0]))
    c = a.concat(b)
    assert list(c.times) == [0.0, 1.0, 2.0]
    with pytest.raises(ValueError):
        b.concat(b)


def test_config_roundtrip(tmp_path):
    cfg = {"model": {"kind": "finite_type", "a": [1, 2], "r": ["1", "2"], "theta": 1,
                     "Q": [[-1, 1], [1, -1]], "offspring": {"pmf_table": [["1/2", 0, "1/2"]]}}}
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    model = model_from_config(load_config(p)["model"])
    assert model.n_types == 2
    assert np.allclose(model.rates(), [1, 2])
    assert np.allclose(model.offspring.pmf(0, 1), [0.5, 0, 0.5])
    assert model_from_config({"kind": "degenerate", "drift": 1.5}).motion.drift[0] == 1.5
    with pytest.raises(ModelError):
        model_from_config({"kind": "nope"})


def test_degenerate_motion():
    m = degenerate_model(2.0, 1.0)
    assert m.motion.variance[0] == 0.0
