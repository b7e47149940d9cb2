import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinemc import SimConfig, simulate_P_tilde, simulate_Q_tilde, simulate_tree_P
from spinemc.martingale import eval_Z
from spinemc.tree import (ROOT, DomainError, LabelNotFound, MarkedTree, Spine, alive_at,
                          dump_tree, extended_path, extract_subtree, format_label, graft,
                          is_ancestor, load_tree, parse_label, path_at, path_integrals,
                          spine_generation, spine_node_at, validate_tree)


@pytest.fixture
def tree(bbm):
    return simulate_tree_P(SimConfig(bbm, t_max=2.0, seed=4, checkpoints=(0.5, 1.0)))


def test_labels():
    assert parse_label("-") == ROOT
    assert parse_label("1.2.1") == (1, 2, 1)
    assert format_label((1, 2)) == "1.2"
    assert format_label(ROOT) == "-"
    assert is_ancestor((1,), (1, 2))
    assert not is_ancestor((1, 2), (1, 2))


def test_simulated_tree_is_valid(tree):
    assert validate_tree(tree) == []
    assert tree.n_nodes > 1
    labs = tree.labels()
    assert labs[0] == ROOT
    for i, lab in enumerate(labs):
        assert tree.index(lab) == i
    with pytest.raises(LabelNotFound):
        tree.index((9, 9, 9))


def test_alive_sets(tree):
    assert alive_at(tree, 0.0) == {ROOT}
    end = alive_at(tree, 2.0)
    assert all(tree.death[tree.index(u)] == math.inf for u in end)
    with pytest.raises(DomainError):
        alive_at(tree, 2.5)


def test_path_at_follows_ancestors(tree):
    leaf = next(u for u in alive_at(tree, 2.0) if len(u) >= 1)
    x0, y0 = path_at(tree, leaf, 0.0)
    assert (x0, y0) == (0.0, 0)
    assert path_at(tree, ROOT, 0.0) == (0.0, 0)


def test_extended_path_covers_zero_to_t(tree):
    i = tree.n_nodes - 1
    path = extended_path(tree, i, 1.7) if tree.birth[i] <= 1.7 else extended_path(tree, 0, 0.1)
    assert path.times[0] == 0.0
    assert np.all(np.diff(path.times) >= 0)
    if tree.death[0] < 2.0:
        with pytest.raises(DomainError):
            extended_path(tree, 0, 1.99)


def test_dump_load_roundtrip_is_exact(bbm, spec_half):
    tr, sp = simulate_Q_tilde(SimConfig(bbm, "Q-tilde", spec_half, t_max=1.5, seed=8))
    text = dump_tree(tr, sp)
    back, sp2 = load_tree(text, bbm)
    assert dump_tree(back, sp2) == text
    assert np.array_equal(back.pcr, tr.pcr) and np.array_equal(back.pcmr, tr.pcmr)
    assert list(sp2.nodes) == list(sp.nodes)
    assert eval_Z(spec_half, bbm, back, 1.5).log_value == eval_Z(spec_half, bbm, tr, 1.5).log_value


def test_extract_graft_roundtrip(tree):
    u = tree.label(tree.n_nodes // 2)
    sub, (birth, (x, y)) = extract_subtree(tree, u)
    assert sub.label(0) == ROOT
    assert birth == tree.birth[tree.index(u)]
    assert validate_tree(sub) == []
    back = graft(tree, u, sub)
    assert dump_tree(back) == dump_tree(tree)


def test_graft_foreign_subtree_breaks_timing(bbm, tree):
    other = simulate_tree_P(SimConfig(bbm, t_max=2.0, seed=99))
    u = tree.label(tree.n_nodes - 1)
    if not u:
        pytest.skip("tree has a single node")
    bad = graft(tree, u, other)
    assert validate_tree(bad) != []


def test_validate_catches_corruption(tree):
    if tree.n_nodes < 2:
        pytest.skip("single node")
    n_extra = tree.n_extra.copy()
    n_extra[0] = n_extra[0] + 1
    broken = dataclasses.replace(tree, n_extra=n_extra)
    assert any("children" in e for e in validate_tree(broken))
    birth = tree.birth.copy()
    birth[1] += 0.01
    assert any("timing" in e for e in validate_tree(dataclasses.replace(tree, birth=birth)))


def test_path_integrals_match_kernel(two_type):
    tr = simulate_tree_P(SimConfig(two_type, t_max=1.5, seed=2))
    pcr, pcmr = path_integrals(tr, two_type)
    assert np.array_equal(pcr, tr.pcr) and np.array_equal(pcmr, tr.pcmr)


def test_spine_queries(bbm):
    tr, sp = simulate_P_tilde(SimConfig(bbm, t_max=2.0, seed=6))
    assert spine_node_at(tr, sp, 0.0) == ROOT
    leaf = sp.labels(tr)[-1]
    assert spine_node_at(tr, sp, 2.0) == leaf
    assert spine_generation(tr, sp, 2.0) == len(leaf)
    assert list(Spine.from_label(tr, leaf).nodes) == list(sp.nodes)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32), t_max=st.floats(0.1, 2.5), lam=st.floats(-1.0, 1.0))
def test_property_q_trees_valid(seed, t_max, lam):
    from spinemc import bbm_model, martingale_spec
    m = bbm_model(1.0, offspring=[[0.5, 0.0, 0.5]])
    spec = martingale_spec(m, lam)
    tr, sp = simulate_Q_tilde(SimConfig(m, "Q-tilde", spec, t_max=t_max, seed=seed))
    assert validate_tree(tr) == []
    assert tr.death[sp.nodes[-1]] == math.inf
    for a, b in zip(sp.nodes[:-1], sp.nodes[1:]):
        assert tr.parent[b] == a
