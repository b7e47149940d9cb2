"""Forward samplers for trees with and without a spine.

* ``P``: the branching process itself.
* ``P-tilde``: a P tree plus a spine that follows a uniformly chosen child at
  every fission.
* ``Q-tilde``: the spine moves under the zeta-changed law, fissions at rate
  (1+m)R with size-biased family sizes and continues through a uniform child;
  every other child starts an independent P subtree.

Tabular models (rates and offspring depending on type only) run through the
compiled kernel.  Location-dependent rates go through a pure-Python sampler
that thins a rate-``r_max`` Poisson stream.
"""

from __future__ import annotations

import dataclasses
import enum
import functools
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kernels
from .eigen import MartingaleSpec
from .model import ModelSpec, size_biased_pmf
from .rng import Stream, child_key_py, salted_py, stream_key
from .tree import MarkedTree, Spine

DEFAULT_GRID = 1.0 / 64.0
DEFAULT_MAX_NODES = 1_000_000

SPINE_SALT = 0x5350494E45  # "SPINE"
SINGLE_SALT = 0x53494E474C45  # "SINGLE"


class ExplosionError(RuntimeError):
    """The population exceeded the configured node cap."""


class Measure(str, enum.Enum):
    P = "P"
    P_TILDE = "P-tilde"
    Q_TILDE = "Q-tilde"

    @classmethod
    def parse(cls, text) -> "Measure":
        if isinstance(text, Measure):
            return text
        key = str(text).lower().replace("-", "").replace("_", "").replace("~", "")
        table = {"p": cls.P, "ptilde": cls.P_TILDE, "qtilde": cls.Q_TILDE}
        if key not in table:
            raise ValueError(f"unknown measure {text!r}")
        return table[key]


@dataclass(frozen=True)
class SimConfig:
    model: ModelSpec
    measure: Measure = Measure.P
    spec: Optional[MartingaleSpec] = None
    t_max: float = 1.0
    grid_step: float = DEFAULT_GRID
    seed: int = 0
    replicate: int = 0
    x0: float = 0.0
    y0: int = 0
    checkpoints: tuple = ()
    max_nodes: int = DEFAULT_MAX_NODES
    # Q-tilde only: reseeds the off-spine subtrees, the spine skeleton is kept
    salt: int = 0

    def __post_init__(self):
        object.__setattr__(self, "measure", Measure.parse(self.measure))
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if not self.grid_step > 0:
            raise ValueError("grid step must be positive")
        if self.measure is Measure.Q_TILDE and self.spec is None:
            raise ValueError("Q-tilde needs a MartingaleSpec")
        if not 0 <= self.y0 < self.model.n_types:
            raise ValueError(f"start type {self.y0} outside 0..{self.model.n_types - 1}")
        object.__setattr__(self, "checkpoints", tuple(sorted(float(c) for c in self.checkpoints)))

    def replace(self, **kw) -> "SimConfig":
        return dataclasses.replace(self, **kw)


# ---------------------------------------------------------------- kernel params

@dataclass(frozen=True, eq=False)
class Dynamics:
    drift: np.ndarray
    var: np.ndarray
    gen: np.ndarray
    rate: np.ndarray
    pmf_cum: np.ndarray


def _cum(table):
    c = np.cumsum(table, axis=1)
    c[:, -1] = 1.0
    return c


@functools.lru_cache(maxsize=128)
def base_dynamics(model: ModelSpec) -> Dynamics:
    n = model.n_types
    m = model.motion
    return Dynamics(np.array(m.drift), np.array(m.variance), np.array(m.generator),
                    model.rates(), _cum(model.offspring.table_for(n)))


@functools.lru_cache(maxsize=128)
def spine_dynamics(model: ModelSpec, spec: MartingaleSpec) -> Dynamics:
    """Spine law under Q-tilde: tilted motion, (1+m)R fission, size-biased A."""
    n = model.n_types
    gen = spec.spine_generator(model) if spec.form == "typed" else np.array(model.motion.generator)
    sb = np.array([size_biased_pmf(model.offspring, 0.0, y) for y in range(n)])
    rate = (1.0 + model.mean_offspring()) * model.rates()
    return Dynamics(spec.spine_drift(model), np.array(model.motion.variance), gen, rate, _cum(sb))


@functools.lru_cache(maxsize=128)
def _mr(model: ModelSpec) -> np.ndarray:
    return model.m_times_r()


def _checkpoints(config: SimConfig) -> np.ndarray:
    return np.array([c for c in config.checkpoints if 0 < c < config.t_max], dtype=np.float64)


def _from_kernel(out, config: SimConfig) -> tuple:
    (status, n_nodes, parent, child_j, depth, birth, death, n_extra, first_child, spine,
     keys, pstart, pend, pt, px, py, pcr, pcmr) = out
    if status != kernels.OK:
        raise ExplosionError(f"population exceeded {config.max_nodes} nodes before t={config.t_max}")
    tree = MarkedTree(parent, child_j, depth, birth, death, n_extra, first_child, pstart, pend,
                      pt, px, py, float(config.t_max), pcr=pcr, pcmr=pcmr, keys=keys)
    return tree, spine


def _grow(config: SimConfig, key: int, spine_mode: bool, fission: bool = True):
    model = config.model
    if not model.is_tabular:
        return _grow_general(config, key, spine_mode, fission)
    base = base_dynamics(model)
    sp = spine_dynamics(model, config.spec) if (spine_mode and config.spec is not None) else base
    out = kernels.grow_tree(
        np.uint64(key), int(config.salt), float(config.x0), int(config.y0), 0.0, 0.0, 0.0,
        float(config.t_max), float(config.grid_step), _checkpoints(config),
        base.drift, base.var, base.gen, base.rate, _mr(model), base.pmf_cum,
        sp.drift, sp.gen, sp.rate, sp.pmf_cum, bool(spine_mode), bool(fission),
        int(config.max_nodes))
    return _from_kernel(out, config)


def _spine_from_flags(flags) -> Spine:
    return Spine(np.flatnonzero(flags == 1).astype(np.int64))


# ---------------------------------------------------------------- public samplers

def simulate_tree_P(config: SimConfig) -> MarkedTree:
    """Tree under P (any spine information in ``config.measure`` is ignored)."""
    tree, _ = _grow(config, stream_key(config.seed, config.replicate), False)
    return tree


def attach_uniform_spine(tree: MarkedTree, rng) -> Spine:
    """Choose a spine root-down, uniformly among the 1+A children at each fission.

    ``rng`` is a :class:`~spinemc.rng.Stream` or an integer key; the choice at
    node u uses the stream of u's label, so it does not depend on tree layout.
    """
    key = rng.key if isinstance(rng, Stream) else int(rng)
    nodes = [0]
    i = 0
    k = key
    while tree.first_child[i] >= 0:
        a = int(tree.n_extra[i])
        j = 1 + min(int(Stream(k).uniform() * (a + 1)), a)
        i = int(tree.first_child[i] + j - 1)
        k = child_key_py(k, j)
        nodes.append(i)
    return Spine(np.asarray(nodes, dtype=np.int64))


def simulate_P_tilde(config: SimConfig) -> tuple:
    tree = simulate_tree_P(config)
    spine = attach_uniform_spine(tree, stream_key(config.seed, config.replicate, SPINE_SALT))
    return tree, spine


def simulate_Q_tilde(config: SimConfig) -> tuple:
    """(tree, spine) under Q-tilde; ``config.salt`` reseeds only the off-spine subtrees."""
    if config.spec is None:
        raise ValueError("Q-tilde needs a MartingaleSpec")
    tree, flags = _grow(config, stream_key(config.seed, config.replicate), True)
    return tree, _spine_from_flags(flags)


def simulate(config: SimConfig) -> tuple:
    """Dispatch on ``config.measure``; returns (tree, spine or None)."""
    if config.measure is Measure.P:
        return simulate_tree_P(config), None
    if config.measure is Measure.P_TILDE:
        return simulate_P_tilde(config)
    return simulate_Q_tilde(config)


def simulate_single_particle(config: SimConfig, changed: bool = False) -> MarkedTree:
    """One particle's path on [0, t_max] with branching switched off.

    ``changed=False`` samples the motion law itself; ``changed=True`` samples
    it under the zeta-changed law (tilted drift, h-transformed type chain).
    The returned one-node tree carries the rate integrals of the model.
    """
    if changed and config.spec is None:
        raise ValueError("the changed law needs a MartingaleSpec")
    cfg = config if changed else config.replace(spec=None)
    tree, _ = _grow(cfg, stream_key(config.seed, config.replicate, SINGLE_SALT), changed, fission=False)
    return tree


# ---------------------------------------------------------------- Cox fission times

def sample_cox_fission(rates, times, rng: Stream) -> float:
    """First arrival of a Cox process with intensity ``rates[k]`` on [times[k], times[k+1]).

    Exact inversion of the cumulative hazard; returns ``inf`` when no arrival
    happens before ``times[-1]``.
    """
    target = rng.exponential()
    hazard = 0.0
    for k in range(len(times) - 1):
        r = float(rates[k])
        dt = times[k + 1] - times[k]
        if r > 0 and hazard + r * dt >= target:
            return times[k] + (target - hazard) / r
        hazard += r * dt
    return math.inf


def sample_cox_fission_thinning(rate_fn: Callable, r_max: float, advance: Callable, rng: Stream,
                                t0: float, t_max: float) -> float:
    """First arrival of a Cox process with intensity ``rate_fn(state)`` by thinning.

    ``advance(t)`` moves the concurrently simulated motion forward to time t
    and returns its state there.  Proposals come at rate ``r_max`` and are
    kept with probability ``rate_fn(state)/r_max``.
    """
    if r_max <= 0:
        return math.inf
    t = t0
    while True:
        t += rng.exponential(r_max)
        if t >= t_max:
            return math.inf
        state = advance(t)
        if rng.uniform() * r_max < rate_fn(state):
            return t


# ---------------------------------------------------------------- general rates

def _grow_general(config: SimConfig, key: int, spine_mode: bool, fission: bool):
    """Python twin of the kernel for location-dependent rates (thinning)."""
    model = config.model
    spec = config.spec if spine_mode else None
    motion = model.motion
    base_drift, var = motion.drift, motion.variance
    base_gen = motion.generator
    if spec is not None:
        s_drift = spec.spine_drift(model)
        s_gen = spec.spine_generator(model) if spec.form == "typed" else base_gen
    else:
        s_drift, s_gen = base_drift, base_gen
    bound = model.rate.r_max
    s_bound = (1.0 + model.offspring.k_max) * bound if spec is not None else bound
    cks = list(_checkpoints(config))
    grid = config.grid_step
    t_max = config.t_max

    parent, child_j, depth, birth, death, n_extra, first_child = [-1], [0], [0], [0.0], [], [], []
    spine, keys, bx, by, bcr, bcmr = [1 if spine_mode else 0], [key], [config.x0], [config.y0], [0.0], [0.0]
    pstart, pend, pt, px, py, pcr, pcmr = [], [], [], [], [], [], []

    def rate_at(x, y):
        return model.rate(x, y)

    i = 0
    while i < len(parent):
        rng = Stream(keys[i])
        on_spine = spine[i] == 1 and spec is not None
        drift = s_drift if on_spine else base_drift
        gen = s_gen if on_spine else base_gen
        lam_bound = s_bound if on_spine else bound
        t, x, y, cr, cmr = birth[i], bx[i], by[i], bcr[i], bcmr[i]
        pstart.append(len(pt))
        pt.append(t); px.append(x); py.append(y); pcr.append(cr); pcmr.append(cmr)
        q = -gen[y, y]
        t_type = t + rng.exponential(q) if q > 0 else math.inf
        t_prop = t + rng.exponential(lam_bound) if (fission and lam_bound > 0) else math.inf
        g_next = (math.floor(t / grid) + 1.0) * grid
        while g_next <= t:
            g_next += grid
        died = False
        while True:
            nxt = min(g_next, t_type, t_prop, t_max)
            for c in cks:
                if t < c < nxt:
                    nxt = c
                    break
            dt = nxt - t
            r0 = rate_at(x, y)
            m0 = model.mean_at(x, y)
            x = x + drift[y] * dt + math.sqrt(var[y] * dt) * rng.normal()
            r1 = rate_at(x, y)
            m1 = model.mean_at(x, y)
            cr = cr + 0.5 * (r0 + r1) * dt
            cmr = cmr + 0.5 * (m0 * r0 + m1 * r1) * dt
            t = nxt
            if t >= t_max:
                break
            if t == t_prop:
                actual = (1.0 + m1) * r1 if on_spine else r1
                if rng.uniform() * lam_bound < actual:
                    died = True
                    break
                t_prop = t + rng.exponential(lam_bound)
            if t == t_type:
                row = np.where(np.arange(gen.shape[0]) == y, 0.0, gen[y]) / q
                y = rng.categorical(np.cumsum(row))
                q = -gen[y, y]
                t_type = t + rng.exponential(q) if q > 0 else math.inf
            if t >= g_next:
                g_next += grid
            pt.append(t); px.append(x); py.append(y); pcr.append(cr); pcmr.append(cmr)
        pt.append(t); px.append(x); py.append(y); pcr.append(cr); pcmr.append(cmr)
        pend.append(len(pt))
        if not died:
            death.append(math.inf); n_extra.append(-1); first_child.append(-1)
            i += 1
            continue
        death.append(t)
        pmf = size_biased_pmf(model.offspring, x, y) if on_spine else model.offspring.pmf(x, y)
        a = rng.categorical(np.cumsum(pmf))
        js = 1 + min(int(rng.uniform() * (a + 1)), a) if on_spine else 0
        n_extra.append(a)
        first_child.append(len(parent))
        if len(parent) + a + 1 > config.max_nodes:
            raise ExplosionError(f"population exceeded {config.max_nodes} nodes before t={t_max}")
        for j in range(1, a + 2):
            parent.append(i); child_j.append(j); depth.append(depth[i] + 1); birth.append(t)
            bx.append(x); by.append(y); bcr.append(cr); bcmr.append(cmr)
            ck = child_key_py(keys[i], j)
            if spine[i] == 1 and spine_mode and j == js:
                spine.append(1)
            else:
                spine.append(0)
                if spine[i] == 1 and spine_mode:
                    ck = salted_py(ck, config.salt)
            keys.append(ck)
        i += 1

    arr = lambda v, dt=np.float64: np.asarray(v, dtype=dt)
    tree = MarkedTree(arr(parent, np.int64), arr(child_j, np.int64), arr(depth, np.int64), arr(birth),
                      arr(death), arr(n_extra, np.int64), arr(first_child, np.int64),
                      arr(pstart, np.int64), arr(pend, np.int64), arr(pt), arr(px), arr(py, np.int64),
                      float(t_max), pcr=arr(pcr), pcmr=arr(pcmr), keys=arr(keys, np.uint64))
    return tree, arr(spine, np.int64)
