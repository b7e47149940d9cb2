"""Branching Markov process specifications.

A model is the triple (motion, branching rate, offspring law).  Motions are
typed diffusions on J = R x {0..n-1}: while in type y a particle diffuses with
variance ``a[y]`` and drift ``b[y]`` and the type jumps with rate matrix
``theta * Q``.  BBM is the one-type case and the degenerate test motion is the
one-type case with zero variance.

Rates and offspring laws are either tables indexed by type (the fast,
exactly-integrable case) or general callables ``f(x, y)`` with a declared
bound.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np


class ModelError(ValueError):
    """Invalid model ingredients."""


PMF_TOL = 1e-12
GENERATOR_TOL = 1e-12
INVARIANT_TOL = 1e-10


# ---------------------------------------------------------------- offspring

@dataclass(frozen=True, eq=False)
class OffspringLaw:
    """Law of A, the number of *extra* children (a dying particle leaves 1 + A).

    ``table`` has one pmf row per type (a single row is shared by all types);
    ``func(x, y)`` returns a pmf of length ``k_max + 1`` for the general case.
    """

    table: Optional[np.ndarray] = None
    func: Optional[Callable[[float, int], Sequence[float]]] = None
    k_max: int = 1

    def __post_init__(self):
        if self.table is not None:
            t = np.atleast_2d(np.asarray(self.table, dtype=float))
            if np.any(t < 0) or np.any(np.abs(t.sum(axis=1) - 1.0) > PMF_TOL):
                raise ModelError(f"offspring pmf rows must be nonnegative and sum to 1: {t.tolist()}")
            t.setflags(write=False)
            object.__setattr__(self, "table", t)
            object.__setattr__(self, "k_max", t.shape[1] - 1)
        elif self.func is None:
            raise ModelError("offspring law needs a pmf table or a callable")

    @property
    def is_tabular(self) -> bool:
        return self.table is not None

    def pmf(self, x: float = 0.0, y: int = 0) -> np.ndarray:
        if self.table is not None:
            return self.table[y if self.table.shape[0] > 1 else 0]
        p = np.asarray(self.func(x, y), dtype=float)
        if p.shape != (self.k_max + 1,) or np.any(p < 0) or abs(p.sum() - 1.0) > PMF_TOL:
            raise ModelError(f"offspring callable returned an invalid pmf at ({x}, {y}): {p}")
        return p

    def mean(self, x: float = 0.0, y: int = 0) -> float:
        p = self.pmf(x, y)
        return float(np.dot(np.arange(p.size), p))

    def means(self, n_types: int) -> np.ndarray:
        """Per-type means (tabular laws only)."""
        return np.array([self.mean(0.0, y) for y in range(n_types)])

    def table_for(self, n_types: int) -> np.ndarray:
        if self.table is None:
            raise ModelError("offspring law is not tabular")
        if self.table.shape[0] == 1:
            return np.repeat(self.table, n_types, axis=0)
        if self.table.shape[0] != n_types:
            raise ModelError(f"offspring table has {self.table.shape[0]} rows for {n_types} types")
        return np.array(self.table)


def as_offspring(spec) -> OffspringLaw:
    """Coerce ``None`` (binary), a pmf sequence, or a law into an OffspringLaw."""
    if spec is None:
        return OffspringLaw(table=[[0.0, 1.0]])
    if isinstance(spec, OffspringLaw):
        return spec
    return OffspringLaw(table=np.atleast_2d(np.asarray(spec, dtype=float)))


BINARY = OffspringLaw(table=[[0.0, 1.0]])


def size_biased_pmf(law: OffspringLaw, x: float = 0.0, y: int = 0) -> np.ndarray:
    """Size-biased law (1+k) p_k / (1+m) of the extra-children count."""
    p = law.pmf(x, y)
    k = np.arange(p.size)
    w = (1.0 + k) * p
    return w / w.sum()


# ---------------------------------------------------------------- rates

@dataclass(frozen=True, eq=False)
class BranchingRate:
    """Fission rate R(x, y): per-type table or a bounded callable."""

    values: Optional[np.ndarray] = None
    func: Optional[Callable[[float, int], float]] = None
    r_max: float = 0.0

    def __post_init__(self):
        if self.values is not None:
            v = np.atleast_1d(np.asarray(self.values, dtype=float))
            if np.any(v < 0) or not np.all(np.isfinite(v)):
                raise ModelError(f"branching rates must be finite and nonnegative: {v}")
            v.setflags(write=False)
            object.__setattr__(self, "values", v)
            object.__setattr__(self, "r_max", float(v.max()))
        elif self.func is None:
            raise ModelError("branching rate needs values or a callable")
        elif not (np.isfinite(self.r_max) and self.r_max >= 0):
            raise ModelError("a general branching rate must declare a finite bound r_max")

    @property
    def is_tabular(self) -> bool:
        return self.values is not None

    def __call__(self, x: float = 0.0, y: int = 0) -> float:
        if self.values is not None:
            return float(self.values[y if self.values.size > 1 else 0])
        r = float(self.func(x, y))
        if r < 0 or r > self.r_max * (1 + 1e-12):
            raise ModelError(f"rate {r} at ({x}, {y}) outside [0, r_max={self.r_max}]")
        return r

    def table_for(self, n_types: int) -> np.ndarray:
        if self.values is None:
            raise ModelError("branching rate is not tabular")
        if self.values.size == 1:
            return np.repeat(self.values, n_types)
        if self.values.size != n_types:
            raise ModelError(f"rate table has {self.values.size} entries for {n_types} types")
        return np.array(self.values)


# ---------------------------------------------------------------- motion

def invariant_measure(Q: np.ndarray) -> np.ndarray:
    n = Q.shape[0]
    lhs = np.vstack([Q.T, np.ones((1, n))])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    return pi


def _is_irreducible(Q: np.ndarray) -> bool:
    n = Q.shape[0]
    adj = (Q > 0) | np.eye(n, dtype=bool)
    reach = adj.copy()
    for _ in range(n):
        reach = reach | ((reach.astype(int) @ adj.astype(int)) > 0)
    return bool(reach.all())


@dataclass(frozen=True, eq=False)
class MotionLaw:
    kind: str
    variance: np.ndarray
    drift: np.ndarray
    theta: float = 1.0
    Q: np.ndarray = field(default_factory=lambda: np.zeros((1, 1)))

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.variance, dtype=float))
        b = np.atleast_1d(np.asarray(self.drift, dtype=float))
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        n = a.size
        if b.size == 1 and n > 1:
            b = np.repeat(b, n)
        if Q.shape != (n, n) or b.size != n:
            raise ModelError(f"inconsistent motion shapes: a {a.shape}, drift {b.shape}, Q {Q.shape}")
        if self.kind == "degenerate":
            if np.any(a != 0):
                raise ModelError("degenerate motion has zero variance")
        elif np.any(a <= 0):
            raise ModelError(f"variances must be positive: {a}")
        if self.theta <= 0:
            raise ModelError("theta must be positive")
        off = Q - np.diag(np.diag(Q))
        if np.any(off < 0):
            raise ModelError("Q has negative off-diagonal entries")
        if np.any(np.abs(Q.sum(axis=1)) > GENERATOR_TOL):
            raise ModelError(f"Q rows must sum to zero: {Q.sum(axis=1)}")
        if n > 1 and not _is_irreducible(Q):
            raise ModelError("Q is reducible")
        for arr in (a, b, Q):
            arr.setflags(write=False)
        object.__setattr__(self, "variance", a)
        object.__setattr__(self, "drift", b)
        object.__setattr__(self, "Q", Q)
        pi = invariant_measure(Q)
        if np.max(np.abs(pi @ Q)) > INVARIANT_TOL:
            raise ModelError("could not find an invariant measure for Q")
        object.__setattr__(self, "_pi", pi)

    @property
    def n_types(self) -> int:
        return self.variance.size

    @property
    def generator(self) -> np.ndarray:
        return self.theta * self.Q

    @property
    def pi(self) -> np.ndarray:
        return self._pi


@dataclass(frozen=True, eq=False)
class ModelSpec:
    motion: MotionLaw
    rate: BranchingRate
    offspring: OffspringLaw
    name: str = ""

    def __post_init__(self):
        n = self.motion.n_types
        if self.rate.is_tabular:
            self.rate.table_for(n)
        if self.offspring.is_tabular:
            self.offspring.table_for(n)

    @property
    def n_types(self) -> int:
        return self.motion.n_types

    @property
    def is_tabular(self) -> bool:
        """Rates and offspring depend on type only (exact kernels apply)."""
        return self.rate.is_tabular and self.offspring.is_tabular

    def rates(self) -> np.ndarray:
        return self.rate.table_for(self.n_types)

    def mean_offspring(self) -> np.ndarray:
        return self.offspring.means(self.n_types)

    def m_times_r(self) -> np.ndarray:
        return self.mean_offspring() * self.rates()

    def mean_at(self, x: float, y: int) -> float:
        return self.offspring.mean(x, y)


def bbm_model(r: float, offspring=None, variance: float = 1.0, drift: float = 0.0) -> ModelSpec:
    """Branching Brownian motion with constant rate ``r`` (binary by default)."""
    if not r > 0:
        raise ModelError("BBM rate must be positive")
    motion = MotionLaw("bbm", [variance], [drift], 1.0, [[0.0]])
    return ModelSpec(motion, BranchingRate(values=[r]), as_offspring(offspring), name="bbm")


def finite_type_model(a, r, theta: float, Q, offspring=None) -> ModelSpec:
    """Typed branching diffusion: variance a(y), rate r(y), type chain theta*Q."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    motion = MotionLaw("finite_type", a, np.zeros(a.size), float(theta), Q)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if r.size != a.size:
        raise ModelError("need one rate per type")
    return ModelSpec(motion, BranchingRate(values=r), as_offspring(offspring), name="finite_type")


def degenerate_model(c: float, r: float, offspring=None) -> ModelSpec:
    """Zero-variance motion with constant drift ``c``; paths are x0 + c t."""
    motion = MotionLaw("degenerate", [0.0], [c], 1.0, [[0.0]])
    return ModelSpec(motion, BranchingRate(values=[r]), as_offspring(offspring), name="degenerate")


def general_model(rate_fn, r_max: float, offspring_fn=None, k_max: int = 1,
                  motion: Optional[MotionLaw] = None, offspring=None) -> ModelSpec:
    """Model with a location-dependent rate ``rate_fn(x, y)`` bounded by ``r_max``."""
    motion = motion or MotionLaw("bbm", [1.0], [0.0], 1.0, [[0.0]])
    if offspring_fn is not None:
        law = OffspringLaw(func=offspring_fn, k_max=k_max)
    else:
        law = as_offspring(offspring)
    return ModelSpec(motion, BranchingRate(func=rate_fn, r_max=r_max), law, name="general")


# ---------------------------------------------------------------- paths

@dataclass(frozen=True, eq=False)
class PathRecord:
    """Piecewise path on [times[0], times[-1]].

    ``xs[k]`` is the position at ``times[k]``; the type on
    ``[times[k], times[k+1])`` is ``ys[k]`` (the last entry of ``ys`` is the
    left-limit type at the final time).
    """

    times: np.ndarray
    xs: np.ndarray
    ys: np.ndarray

    def concat(self, other: "PathRecord") -> "PathRecord":
        """Append ``other``, which must start where ``self`` ends."""
        if other.times[0] != self.times[-1]:
            raise ValueError("paths do not meet")
        return PathRecord(np.concatenate([self.times[:-1], other.times]),
                          np.concatenate([self.xs[:-1], other.xs]),
                          np.concatenate([self.ys[:-1], other.ys]))


def rate_and_mean_along(model: ModelSpec, path: PathRecord, t: float):
    """Return (int_0^t R ds, int_0^t m R ds) along ``path``.

    Tabular models integrate the piecewise-constant integrand exactly; general
    callables use the trapezoidal rule on the stored breakpoints (first-order
    bias in the breakpoint spacing).
    """
    times, xs, ys = path.times, path.xs, path.ys
    if t < times[0] or t > times[-1]:
        raise ValueError(f"path covers [{times[0]}, {times[-1]}], asked for t={t}")
    int_r = 0.0
    int_mr = 0.0
    if model.is_tabular:
        rates = model.rates()
        mr = model.m_times_r()
        for k in range(times.size - 1):
            if times[k] >= t:
                break
            dt = min(times[k + 1], t) - times[k]
            y = int(ys[k])
            int_r += rates[y] * dt
            int_mr += mr[y] * dt
        return int_r, int_mr
    for k in range(times.size - 1):
        if times[k] >= t:
            break
        t1 = min(times[k + 1], t)
        y = int(ys[k])
        x1 = xs[k + 1] if t1 == times[k + 1] else xs[k] + (xs[k + 1] - xs[k]) * (t1 - times[k]) / (times[k + 1] - times[k])
        r0, r1 = model.rate(xs[k], y), model.rate(x1, y)
        m0, m1 = model.mean_at(xs[k], y), model.mean_at(x1, y)
        dt = t1 - times[k]
        int_r += 0.5 * (r0 + r1) * dt
        int_mr += 0.5 * (m0 * r0 + m1 * r1) * dt
    return int_r, int_mr


# ---------------------------------------------------------------- config

def _real(v) -> float:
    if isinstance(v, str):
        return float(Fraction(v)) if "/" in v else float(v)
    return float(v)


def _reals(v):
    if isinstance(v, (list, tuple)):
        return [_reals(e) for e in v]
    return _real(v)


def model_from_config(cfg: dict) -> ModelSpec:
    """Build a model from the ``model`` section of a config (see docs/config.md)."""
    kind = cfg.get("kind", "bbm")
    off = cfg.get("offspring")
    if isinstance(off, dict):
        off = off.get("pmf_table", off.get("pmf"))
    offspring = None if off is None else _reals(off)
    if kind == "bbm":
        return bbm_model(_real(cfg.get("rate", 1)), offspring,
                         variance=_real(cfg.get("variance", 1)), drift=_real(cfg.get("drift", 0)))
    if kind == "finite_type":
        return finite_type_model(_reals(cfg["a"]), _reals(cfg["r"]), _real(cfg.get("theta", 1)),
                                 _reals(cfg["Q"]), offspring)
    if kind == "degenerate":
        return degenerate_model(_real(cfg.get("drift", 0)), _real(cfg.get("rate", 1)), offspring)
    raise ModelError(f"unknown model kind {kind!r}")


def load_config(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
