"""Deterministic ground truth for the Monte Carlo checks."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .eigen import UnsupportedModelError, expm_apply
from .model import ModelSpec

MAX_SKELETON_DEPTH = 6
MAX_SKELETON_CONFIGS = 200_000


class EnumerationTooLarge(ValueError):
    pass


def expected_population(r: float, m: float, t: float) -> float:
    """E|N_t| = exp(m r t) for constant rate and mean."""
    return math.exp(m * r * t)


def many_to_one_matrix(model: ModelSpec) -> np.ndarray:
    if not model.is_tabular:
        raise UnsupportedModelError("the Many-to-One oracle needs a tabular model")
    return model.motion.generator + np.diag(model.m_times_r())


def many_to_one_type_oracle(model: ModelSpec, g, y0: int, t: float) -> float:
    """E[sum over N_t of g(type)] = (exp(t (theta Q + diag(m r))) g)(y0)."""
    g = np.broadcast_to(np.asarray(g, dtype=float), (model.n_types,))
    return float(expm_apply(many_to_one_matrix(model), t, g)[y0])


def oracle_self_check(model: ModelSpec, g, y0: int, t: float, steps: int = 2) -> float:
    """|exp(tM)g - (exp(tM/steps))^steps g| at y0, relative to the value."""
    g = np.broadcast_to(np.asarray(g, dtype=float), (model.n_types,))
    M = many_to_one_matrix(model)
    direct = expm_apply(M, t, g)
    stepped = g.copy()
    for _ in range(steps):
        stepped = expm_apply(M, t / steps, stepped)
    scale = max(abs(direct[y0]), 1e-300)
    return float(abs(direct[y0] - stepped[y0]) / scale)


# ---------------------------------------------------------------- skeletons

@dataclass(frozen=True)
class SkeletonResult:
    """Exact generation-level facts for a discrete Galton-Watson skeleton.

    Each particle leaves 1 + A children with Prob(A = k) = pmf[k].

    * ``passage[k]``: Prob(the label 1.1...1 at depth k lies on a uniform spine).
    * ``extension_total[k]``: E[sum over generation k of prod_{v<u} 1/(1+A_v)].
    * ``spine_family[k]``: law of A at the spine's depth-k node under the
      size-biased measure (density prod (1+A_v)/(1+m) along the spine).
    * ``size_law[k]`` / ``size_biased_size_law[k]``: law of the generation
      size under P and under the size-biased measure; ``None`` when the
      whole-generation enumeration would exceed the configuration guard.
    """

    depth: int
    pmf: tuple
    passage: tuple
    extension_total: tuple
    spine_family: tuple
    size_law: tuple
    size_biased_size_law: tuple


def _exact_pmf(pmf) -> tuple:
    out = []
    for p in pmf:
        if isinstance(p, float):
            p = Fraction(p).limit_denominator(10**12)
        out.append(Fraction(p))
    if sum(out) != 1:
        raise ValueError(f"pmf sums to {sum(out)}, not 1")
    return tuple(out)


def exact_size_biased(pmf) -> tuple:
    pmf = _exact_pmf(pmf)
    m = sum(k * p for k, p in enumerate(pmf))
    return tuple((1 + k) * p / (1 + m) for k, p in enumerate(pmf))


def enumerate_discrete_skeleton(pmf, depth: int) -> SkeletonResult:
    """Brute-force enumeration of a discrete skeleton in exact arithmetic.

    Spine quantities only involve the families met along one line of
    descent, so they are enumerated over every sequence of family sizes and
    every child choice down to ``depth``.  Generation-size laws need whole
    generations and are enumerated only while that stays below
    ``MAX_SKELETON_CONFIGS`` configurations.
    """
    if depth < 0 or depth > MAX_SKELETON_DEPTH:
        raise EnumerationTooLarge(f"depth {depth} outside 0..{MAX_SKELETON_DEPTH}")
    pmf = _exact_pmf(pmf)
    support = [k for k, p in enumerate(pmf) if p > 0]
    m = sum(k * p for k, p in enumerate(pmf))

    passage = [Fraction(1)]
    ext = [Fraction(1)]
    family = []
    for d in range(1, depth + 1):
        pas = Fraction(0)
        tot = Fraction(0)
        for seq in itertools.product(support, repeat=d):
            p_line = Fraction(1)
            w = Fraction(1)
            n_labels = 1
            for a in seq:
                p_line *= pmf[a]
                w /= 1 + a
                n_labels *= 1 + a
            pas += p_line * w  # the label 1.1...1 always exists
            tot += p_line * n_labels * w
        passage.append(pas)
        ext.append(tot)
    for level in range(depth):
        law = {k: Fraction(0) for k in support}
        for seq in itertools.product(support, repeat=depth):
            q = Fraction(1)
            for a in seq:
                # P-tilde: family law times uniform child choice (1+a choices
                # each of prob 1/(1+a)); size-biased density (1+a)/(1+m)
                q *= pmf[a] * Fraction(1 + a) / (1 + m)
            law[seq[level]] += q
        family.append(dict(sorted(law.items())))

    size_law, sb_size = _generation_sizes(pmf, support, m, depth)
    return SkeletonResult(depth, pmf, tuple(passage), tuple(ext), tuple(family), size_law, sb_size)


def _generation_sizes(pmf, support, m, depth):
    states = {1: Fraction(1)}  # generation size -> probability
    laws = [dict(states)]
    for d in range(1, depth + 1):
        if sum(len(support) ** w for w in states) > MAX_SKELETON_CONFIGS:
            return None, None
        new = {}
        for width, prob in states.items():
            for fam in itertools.product(support, repeat=width):
                p = prob
                for a in fam:
                    p *= pmf[a]
                n = width + sum(fam)
                new[n] = new.get(n, Fraction(0)) + p
        states = dict(sorted(new.items()))
        laws.append(states)
    # size-biasing by the discrete additive martingale |gen d| / (1+m)^d
    sb = [{n: p * n / (1 + m) ** d for n, p in law.items()} for d, law in enumerate(laws)]
    return tuple(laws), tuple(sb)


def expected_spine_fissions(model: ModelSpec, spec, y0: int, t: float) -> float:
    """E of the number of spine fissions in [0, t] under the changed law.

    The spine's type follows the h-transformed chain with generator G and
    fissions at rate f = (1 + m) R, so the mean is int_0^t (e^{sG} f)(y0) ds,
    read off the exponential of the augmented matrix [[G, f], [0, 0]].
    """
    if not model.is_tabular:
        raise UnsupportedModelError("needs a tabular model")
    n = model.n_types
    G = spec.spine_generator(model) if spec.form == "typed" else model.motion.generator
    aug = np.zeros((n + 1, n + 1))
    aug[:n, :n] = G
    aug[:n, n] = (1.0 + model.mean_offspring()) * model.rates()
    e = np.zeros(n + 1)
    e[n] = 1.0
    return float(expm_apply(aug, t, e)[y0])
