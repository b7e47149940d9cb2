import math

import numpy as np
import pytest

from spinemc import (SimConfig, bbm_model, finite_type_model, martingale_spec, simulate_P_tilde,
                     simulate_Q_tilde, simulate_tree_P)
from spinemc.martingale import (conditional_expectation_Q, eval_Z, eval_zeta, eval_zeta_tilde,
                                gibbs_boltzmann_weights, log_zeta_node, spine_decomposition)
from spinemc.model import PathRecord
from spinemc.tree import DomainError, MarkedTree, Spine


def P(times, xs, ys=None):
    return PathRecord(np.array(times, float), np.array(xs, float),
                      np.zeros(len(times), np.int64) if ys is None else np.array(ys))


@pytest.fixture
def hand_tree(bbm):
    """Root splits at 0.3, its first child at 0.8; three particles alive at t = 1."""
    inf = math.inf
    records = {
        (): (0.0, 0.3, 1, P([0.0, 0.3], [0.0, 0.2])),
        (1,): (0.3, 0.8, 1, P([0.3, 0.8], [0.2, -0.1])),
        (2,): (0.3, inf, -1, P([0.3, 1.0], [0.2, 0.5])),
        (1, 1): (0.8, inf, -1, P([0.8, 1.0], [-0.1, 0.4])),
        (1, 2): (0.8, inf, -1, P([0.8, 1.0], [-0.1, -0.3])),
    }
    tree = MarkedTree.from_records(records, 1.0).with_integrals(bbm)
    return tree, Spine.from_label(tree, (1, 2))


def test_zeta_at_zero_and_lambda_zero(bbm, two_type):
    spec = martingale_spec(two_type, 0.8)
    path = P([0.0], [0.3], [1])
    assert eval_zeta(spec, two_type, path, 0.0) == pytest.approx(spec.v[1] * math.exp(0.8 * 0.3))
    spec0 = martingale_spec(bbm, 0.0)
    tr = simulate_tree_P(SimConfig(bbm, t_max=1.0, seed=3))
    assert eval_zeta(spec0, bbm, tr.node_path(0), min(tr.death[0], 1.0)) == pytest.approx(1.0)


def test_lambda_zero_constant_rate_finite_type_zeta_is_one():
    m = finite_type_model([1.0, 3.0], [2.0, 2.0], 1.0, [[-1, 1], [1, -1]])
    spec = martingale_spec(m, 0.0)
    path = P([0.0, 0.4, 1.0], [0.0, 1.0, -2.0], [0, 1, 1])
    assert eval_zeta(spec, m, path, 1.0) == pytest.approx(1.0)


def test_zeta_domain_error(bbm, spec_half):
    with pytest.raises(DomainError):
        eval_zeta(spec_half, bbm, P([0.0, 1.0], [0.0, 1.0]), 2.0)


def test_Z_at_zero(bbm, spec_half):
    tr = simulate_tree_P(SimConfig(bbm, t_max=1.0, seed=1, x0=0.4))
    assert eval_Z(spec_half, bbm, tr, 0.0).value == pytest.approx(math.exp(0.5 * 0.4))


def test_Z_matches_bbm_closed_form(bbm, hand_tree):
    tree, _ = hand_tree
    lam = 0.5
    spec = martingale_spec(bbm, lam)
    z = eval_Z(spec, bbm, tree, 1.0, breakdown=True)
    want = sum(math.exp(-1.0) * math.exp(lam * x - lam * lam / 2) for x in (0.5, 0.4, -0.3))
    assert z.value == pytest.approx(want, rel=1e-13)
    assert sum(z.components.values()) == pytest.approx(z.value, rel=1e-13)
    assert set(z.components) == {(2,), (1, 1), (1, 2)}


def test_lambda_zero_identities(bbm, hand_tree):
    tree, spine = hand_tree
    spec = martingale_spec(bbm, 0.0)
    assert eval_Z(spec, bbm, tree, 1.0).value == pytest.approx(3 * math.exp(-1.0))
    assert eval_zeta_tilde(spec, bbm, tree, spine, 1.0) == pytest.approx(4 * math.exp(-1.0))
    assert eval_zeta_tilde(spec, bbm, tree, spine, 0.2) == pytest.approx(math.exp(-0.2))
    d = spine_decomposition(spec, bbm, tree, spine, 1.0)
    assert d == pytest.approx(math.exp(-0.3) + math.exp(-0.8) + math.exp(-1.0))
    assert spine_decomposition(spec, bbm, tree, spine, 0.2) == pytest.approx(math.exp(-0.2))
    w = gibbs_boltzmann_weights(spec, bbm, tree, 1.0)
    assert all(v == pytest.approx(1 / 3) for v in w.values())


def test_conditional_expectation(bbm, hand_tree):
    tree, _ = hand_tree
    w = gibbs_boltzmann_weights(martingale_spec(bbm, 0.0), bbm, tree, 1.0)
    assert conditional_expectation_Q(lambda u: 1.0, w) == pytest.approx(1.0)
    assert conditional_expectation_Q({u: float(u == (2,)) for u in w}, w) == pytest.approx(w[(2,)])
    pos = {(2,): 0.5, (1, 1): 0.4, (1, 2): -0.3}
    assert conditional_expectation_Q(pos, w) == pytest.approx(0.6 / 3)
    with pytest.raises(DomainError):
        conditional_expectation_Q({(2,): 1.0}, w)


def test_multitype_zeta_tilde_form(two_type):
    spec = martingale_spec(two_type, 0.6)
    tr, sp = simulate_Q_tilde(SimConfig(two_type, "Q-tilde", spec, t_max=1.0, seed=12))
    i = int(sp.nodes[-1])
    k = tr.path_end[i] - 1
    x, y = tr.px[k], int(tr.py[k])
    prod = np.prod([1 + tr.n_extra[v] for v in sp.nodes[:-1]])
    want = prod * spec.v[y] * math.exp(0.6 * x - spec.E * 1.0) * math.exp(tr.pcr[k] - tr.pcmr[k])
    assert eval_zeta_tilde(spec, two_type, tr, sp, 1.0) == pytest.approx(want, rel=1e-12)
    assert math.exp(log_zeta_node(spec, two_type, tr, i, 1.0)) == pytest.approx(
        spec.v[y] * math.exp(0.6 * x - spec.E + tr.pcr[k]), rel=1e-12)


def test_weights_sum_to_one(two_type):
    spec = martingale_spec(two_type, 1.3)
    for r in range(30):
        tr = simulate_tree_P(SimConfig(two_type, t_max=1.5, seed=2, replicate=r))
        w = gibbs_boltzmann_weights(spec, two_type, tr, 1.5)
        assert abs(math.fsum(w.values()) - 1.0) <= 1e-12
        assert all(0 <= v <= 1 for v in w.values())


def test_large_lambda_stays_finite(bbm):
    spec = martingale_spec(bbm, 40.0)
    tr = simulate_tree_P(SimConfig(bbm, t_max=2.0, seed=5))
    z = eval_Z(spec, bbm, tr, 2.0)
    assert math.isfinite(z.log_value)
    w = gibbs_boltzmann_weights(spec, bbm, tr, 2.0)
    assert abs(sum(w.values()) - 1.0) < 1e-12


def test_projection_of_zeta_tilde_onto_tree(bbm, spec_half):
    """Averaging zeta-tilde over uniform spines of a fixed tree recovers Z (MC)."""
    from spinemc.simulate import attach_uniform_spine
    from spinemc.rng import stream_key
    tr = simulate_tree_P(SimConfig(bbm, t_max=1.5, seed=31))
    vals = np.array([eval_zeta_tilde(spec_half, bbm, tr, attach_uniform_spine(tr, stream_key(7, k)), 1.5)
                     for k in range(4000)])
    z = eval_Z(spec_half, bbm, tr, 1.5).value
    assert abs(vals.mean() - z) <= 4 * vals.std() / math.sqrt(vals.size) + 1e-12
