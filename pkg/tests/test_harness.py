import math

import numpy as np
import pytest

from spinemc import SimConfig, bbm_model, finite_type_model, martingale_spec
from spinemc import harness
from spinemc.harness import (ExperimentReport, batch_means, chi2_stat, merge_cells,
                             run_many_to_one_test, run_martingale_test, run_measure_change_test,
                             run_spine_tests, z_score)


def test_batch_means_iid(rng):
    x = rng.normal(2.0, 3.0, 10_000)
    m, se = batch_means(x)
    assert m == pytest.approx(x.mean())
    assert se == pytest.approx(3.0 / 100, rel=0.25)


def test_z_score_degenerate():
    assert z_score(1.0, 0.0, 1.0) == 0.0
    assert z_score(1.0 + 1e-16, 1e-17, 1.0) == 0.0
    assert math.isinf(z_score(1.1, 0.0, 1.0))
    assert z_score(1.2, 0.1, 1.0) == pytest.approx(2.0)


def test_merge_cells():
    o, e = merge_cells([1, 4, 6, 1], [3.0, 3.0, 6.0, 2.0])
    assert list(e) == [6.0, 8.0]
    assert list(o) == [5.0, 7.0]
    stat, df = chi2_stat([5, 0], [2.5, 0.0])
    assert stat == 0.0 and df == 0
    stat, _ = chi2_stat([4, 1], [5.0, 0.0])
    assert math.isinf(stat)


def test_martingale_rows_pass(bbm):
    rows = run_martingale_test(SimConfig(bbm, seed=3), [martingale_spec(bbm, 0.0), martingale_spec(bbm, 0.5)],
                               (0.5, 1.0), 2000)
    assert len(rows) == 12
    assert all(r.passed for r in rows)
    # lambda = 0: zeta is identically 1
    zeta0 = [r for r in rows if r.name.startswith("martingale/zeta/lam=0,")]
    assert all(r.estimate == 1.0 and r.stderr == 0.0 for r in zeta0)


def test_one_type_model_reduces_bitwise(bbm):
    ft = finite_type_model([1.0], [1.0], 1.0, [[0.0]])
    a = run_martingale_test(SimConfig(bbm, seed=4), martingale_spec(bbm, 0.5), (1.0,), 1000)
    b = run_martingale_test(SimConfig(ft, seed=4), martingale_spec(ft, 0.5), (1.0,), 1000)
    assert [r.csv_fields() for r in a] == [r.csv_fields() for r in b]


def test_many_to_one_g_zero_exact(bbm):
    rows = run_many_to_one_test(SimConfig(bbm, t_max=1.0, seed=1), 0.0, 1000)
    mc = [r for r in rows if r.kind == "mc"]
    assert all(r.estimate == 0.0 and r.target == 0.0 and r.passed for r in mc)


def test_many_to_one_general_g(bbm):
    rows = run_many_to_one_test(SimConfig(bbm, t_max=1.0, seed=1), lambda x, y: x * x, 3000)
    assert len(rows) == 1 and rows[0].passed


def test_measure_change_h_one(bbm, spec_half):
    rows = run_measure_change_test(SimConfig(bbm, t_max=1.0, seed=2), spec_half, lambda t, s: 1.0, 3000)
    assert rows[0].passed
    assert rows[0].target == 1.0


def test_spine_rows(bbm_half):
    spec = martingale_spec(bbm_half, 0.5)
    rows = run_spine_tests(SimConfig(bbm_half, t_max=1.0, seed=5), spec, 3000)
    names = {r.name.split("/")[-1] for r in rows}
    assert {"fission_count", "offspring_size_biased", "gibbs_weight_sum", "gibbs_rank_by_class",
            "gibbs_pit"} <= names
    assert all(r.passed for r in rows)


def test_report_csv_and_json_roundtrip(tmp_path):
    rep = harness.run_suite("skeleton", seed=1)
    rep.write(tmp_path)
    text = (tmp_path / "report.csv").read_text()
    assert text.splitlines()[0] == "name,estimate,stderr,target,z,pass"
    back = ExperimentReport.from_json((tmp_path / "report.json").read_text())
    assert back.to_csv() == text
    with pytest.raises(KeyError):
        harness.run_suite("nope")


def test_small_suite_is_deterministic():
    a = harness.run_suite("measure-change", seed=9, replicates=300)
    b = harness.run_suite("measure-change", seed=9, replicates=300)
    assert a.to_csv() == b.to_csv()
    c = harness.run_suite("measure-change", seed=10, replicates=300)
    assert c.to_csv() != a.to_csv()
