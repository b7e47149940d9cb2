"""Martingale evaluators on realised trees and spines.

One path functional does all the work: for a particle at (x, y) at local
time t whose ancestral line has accumulated ``cr = int R`` and
``cmr = int m R``,

    log zeta = cr + log v(y) + lam x - E t        (typed form)
    log zeta = lam x - E t                        (bbm form)

and its contribution to Z(t) is ``exp(log zeta - cmr)``.  Everything is kept
in log space until the caller asks for a value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Union

import numpy as np

from . import kernels
from .eigen import MartingaleSpec
from .model import ModelSpec, PathRecord, rate_and_mean_along
from .tree import DomainError, MarkedTree, Spine, alive_indices, spine_node_index


@dataclass(frozen=True)
class MartingaleValue:
    """Z(t) with an optional label -> contribution breakdown."""

    log_value: float
    components: Optional[dict] = None

    @property
    def value(self) -> float:
        return math.exp(self.log_value)

    def __float__(self) -> float:
        return self.value


def log_zeta(spec: MartingaleSpec, x, y, cr, t):
    """The single-particle functional in log space (vectorised over x, y, cr)."""
    x = np.asarray(x, dtype=float)
    if spec.form == "typed":
        return np.asarray(cr, dtype=float) + spec.log_v[np.asarray(y)] + spec.lam * x - spec.E * t
    return spec.lam * x - spec.E * t


def _with_integrals(tree: MarkedTree, model: ModelSpec) -> MarkedTree:
    return tree if tree.has_integrals else tree.with_integrals(model)


def _state_at_path(path: PathRecord, t: float):
    times = path.times
    if not (times[0] <= t <= times[-1]):
        raise DomainError(f"path covers [{times[0]}, {times[-1]}], asked for t={t}")
    k = int(np.searchsorted(times, t, side="right")) - 1
    k = min(k, times.size - 1)
    if times[k] == t or k == times.size - 1:
        return float(path.xs[k]), int(path.ys[k])
    f = (t - times[k]) / (times[k + 1] - times[k])
    return float(path.xs[k] + f * (path.xs[k + 1] - path.xs[k])), int(path.ys[k])


def eval_zeta(spec: MartingaleSpec, model: ModelSpec, path: PathRecord, t: float) -> float:
    """zeta(t) along a single path that starts at time 0."""
    if path.times[0] != 0.0:
        raise DomainError("path must start at time 0")
    x, y = _state_at_path(path, t)
    cr, _ = rate_and_mean_along(model, path, t)
    return math.exp(float(log_zeta(spec, x, y, cr, t)))


def log_zeta_node(spec: MartingaleSpec, model: ModelSpec, tree: MarkedTree, node: int,
                  t: float) -> float:
    """log zeta(t) on the extended path of ``node`` (no rate discount)."""
    tree = _with_integrals(tree, model)
    T = tree._check_time(t)
    if not tree.birth[node] <= T < tree.death[node]:
        raise DomainError(f"node {node} is not alive at t={t}")
    xs, ys, crs, _ = kernels.states_at(tree.path_start, tree.path_end, tree.pt, tree.px, tree.py,
                                       tree.pcr, tree.pcmr, np.array([node], np.int64), T)
    return float(log_zeta(spec, xs[0], ys[0], crs[0], t))


def log_terms(spec: MartingaleSpec, model: ModelSpec, tree: MarkedTree, t: float, nodes=None):
    """(nodes, log of each alive particle's discounted term in Z(t))."""
    tree = _with_integrals(tree, model)
    T = tree._check_time(t)
    if nodes is None:
        nodes = kernels.alive_nodes(tree.birth, tree.death, T)
    xs, ys, crs, cmrs = kernels.states_at(tree.path_start, tree.path_end, tree.pt, tree.px, tree.py,
                                          tree.pcr, tree.pcmr, np.asarray(nodes, np.int64), T)
    return nodes, log_zeta(spec, xs, ys, crs, t) - cmrs


def eval_Z(spec: MartingaleSpec, model: ModelSpec, tree: MarkedTree, t: float,
           breakdown: bool = False) -> MartingaleValue:
    """Z(t): the sum of the discounted single-particle terms over N_t."""
    nodes, lt = log_terms(spec, model, tree, t)
    comps = None
    if breakdown:
        comps = {tree.label(int(i)): math.exp(l) for i, l in zip(nodes, lt)}
    return MartingaleValue(float(kernels.logsumexp(lt)), comps)


def log_zeta_tilde(spec: MartingaleSpec, model: ModelSpec, tree: MarkedTree, spine: Spine,
                   t: float) -> float:
    i = spine_node_index(tree, spine, t)
    _, lt = log_terms(spec, model, tree, t, np.array([i], np.int64))
    anc = spine.nodes[: int(np.searchsorted(spine.nodes, i))]
    return float(np.sum(np.log1p(tree.n_extra[anc].astype(float))) + lt[0])


def eval_zeta_tilde(spec: MartingaleSpec, model: ModelSpec, tree: MarkedTree, spine: Spine,
                    t: float) -> float:
    """Offspring factor along the spine times its discounted zeta term."""
    return math.exp(log_zeta_tilde(spec, model, tree, spine, t))


def log_spine_decomposition(spec: MartingaleSpec, model: ModelSpec, tree: MarkedTree,
                            spine: Spine, t: float) -> float:
    tree = _with_integrals(tree, model)
    i = spine_node_index(tree, spine, t)
    parts = list(log_terms(spec, model, tree, t, np.array([i], np.int64))[1])
    for v in spine.nodes:
        if v == i:
            break
        a = int(tree.n_extra[v])
        if a <= 0:
            continue
        k = tree.path_end[v] - 1  # left limit at the fission time
        s_local = tree.pt[k] - tree.origin
        lz = float(log_zeta(spec, tree.px[k], tree.py[k], tree.pcr[k], s_local))
        parts.append(math.log(a) + lz - tree.pcmr[k])
    return float(kernels.logsumexp(np.asarray(parts)))


def spine_decomposition(spec: MartingaleSpec, model: ModelSpec, tree: MarkedTree, spine: Spine,
                        t: float) -> float:
    """E[Z(t) | spine information]: fission-time contributions plus the spine term."""
    return math.exp(log_spine_decomposition(spec, model, tree, spine, t))


def gibbs_boltzmann_weights(spec: MartingaleSpec, model: ModelSpec, tree: MarkedTree,
                            t: float) -> dict:
    """label -> conditional probability that the spine sits at that particle at time t."""
    nodes, lt = log_terms(spec, model, tree, t)
    if nodes.size == 0:
        raise DomainError("no particle alive")
    w = np.exp(lt - kernels.logsumexp(lt))
    total = math.fsum(w)
    if not (total > 0 and math.isfinite(total)):
        raise FloatingPointError("weights underflowed")
    w = w / total
    return {tree.label(int(i)): float(wi) for i, wi in zip(nodes, w)}


def conditional_expectation_Q(f: Union[Mapping, Callable], weights: Mapping) -> float:
    """sum_u f_u w_u, i.e. the Q-tilde conditional mean of f at the spine.

    ``f`` is a label -> value mapping over the same labels as ``weights``, or
    a callable on labels.
    """
    if callable(f):
        return math.fsum(f(u) * w for u, w in weights.items())
    if set(f) != set(weights):
        raise DomainError("f and the weights are indexed by different label sets")
    return math.fsum(f[u] * w for u, w in weights.items())
