"""Verification runs: Monte Carlo rows, exact rows and named suites.

Every row compares an estimate with a target whose provenance is recorded
(an oracle name or an analytic constant).  Monte Carlo rows pass when
``|z| <= threshold``; exact rows pass when the error is within tolerance;
chi-square rows pass when the p-value is at least ``CHI2_LEVEL``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats

from . import kernels
from .eigen import MartingaleSpec, expm_apply, martingale_spec
from .martingale import log_spine_decomposition, log_terms, log_zeta_node, log_zeta_tilde
from .model import bbm_model, finite_type_model, size_biased_pmf
from .oracle import (enumerate_discrete_skeleton, exact_size_biased, expected_population,
                     expected_spine_fissions, many_to_one_type_oracle, oracle_self_check)
from .rng import Stream, derive_seed, stream_key
from .simulate import (Measure, SimConfig, simulate_P_tilde, simulate_Q_tilde,
                       simulate_single_particle, simulate_tree_P)
from .tree import alive_indices

DEFAULT_THRESHOLD = 4.0
N_CHUNKS = 100
CHI2_LEVEL = 1e-3
MIN_EXPECTED = 5.0


# ---------------------------------------------------------------- rows

@dataclass
class ReportRow:
    name: str
    estimate: float
    stderr: float
    target: float
    z: float
    passed: bool
    kind: str = "mc"  # mc | exact | chi2
    provenance: str = ""
    detail: dict = field(default_factory=dict)

    def csv_fields(self) -> list:
        return [self.name, _num(self.estimate), _num(self.stderr), _num(self.target), _num(self.z),
                "true" if self.passed else "false"]


def _num(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return repr(float(v))


def batch_means(samples, n_chunks: int = N_CHUNKS) -> tuple:
    """(mean, standard error) with the error from ``n_chunks`` contiguous batches."""
    x = np.asarray(samples, dtype=float)
    n = x.size
    if n == 0:
        raise ValueError("no samples")
    mean = float(np.mean(x))
    k = min(n_chunks, n)
    if k < 2:
        return mean, math.nan
    chunks = np.array([c.mean() for c in np.array_split(x, k)])
    # unequal chunk sizes differ by at most one sample; weighting ignored
    return mean, float(np.std(chunks, ddof=1) / math.sqrt(k))


DEGENERATE_RTOL = 1e-12


def z_score(estimate: float, stderr: float, target: float) -> float:
    """(estimate - target) / stderr.

    A standard error below ``DEGENERATE_RTOL`` relative to the target is
    rounding noise of an (almost surely) constant sample; such rows are
    judged by exact agreement to that relative tolerance instead.
    """
    diff = estimate - target
    scale = max(1.0, abs(target))
    if stderr > DEGENERATE_RTOL * scale and math.isfinite(stderr):
        return diff / stderr
    return 0.0 if abs(diff) <= DEGENERATE_RTOL * scale else math.copysign(math.inf, diff)


def mc_row(name, samples, target, provenance, threshold=DEFAULT_THRESHOLD) -> ReportRow:
    est, se = batch_means(samples)
    z = z_score(est, se, target)
    return ReportRow(name, est, se, float(target), z, abs(z) <= threshold, "mc", provenance)


def two_sample_row(name, a, b, provenance, threshold=DEFAULT_THRESHOLD) -> ReportRow:
    """Row comparing two independent Monte Carlo means; target is the mean of ``b``."""
    ea, sa = batch_means(a)
    eb, sb = batch_means(b)
    se = math.hypot(sa, sb)
    z = z_score(ea, se, eb)
    return ReportRow(name, ea, se, eb, z, abs(z) <= threshold, "mc", provenance)


def exact_row(name, error, tolerance, provenance) -> ReportRow:
    error = float(error)
    return ReportRow(name, error, 0.0, float(tolerance), math.nan, error <= tolerance, "exact",
                     provenance)


def chi2_row(name, stat, df, provenance) -> ReportRow:
    p = float(stats.chi2.sf(stat, df)) if df > 0 else 1.0
    return ReportRow(name, p, math.nan, CHI2_LEVEL, math.nan, p >= CHI2_LEVEL, "chi2", provenance,
                     {"statistic": float(stat), "df": int(df)})


def merge_cells(observed, expected, min_expected: float = MIN_EXPECTED) -> tuple:
    """Merge adjacent cells until each expected count is at least ``min_expected``."""
    obs, exp = [], []
    co = ce = 0.0
    for o, e in zip(observed, expected):
        co += o
        ce += e
        if ce >= min_expected:
            obs.append(co)
            exp.append(ce)
            co = ce = 0.0
    if ce > 0 or co > 0:
        if exp:
            obs[-1] += co
            exp[-1] += ce
        else:
            obs.append(co)
            exp.append(ce)
    return np.asarray(obs), np.asarray(exp)


def chi2_stat(observed, expected) -> tuple:
    """Pearson statistic and df after merging; observed mass in a zero-probability cell is fatal."""
    observed = np.asarray(observed, float)
    expected = np.asarray(expected, float)
    impossible = (expected <= 0) & (observed > 0)
    if np.any(impossible):
        return math.inf, 1
    keep = expected > 0
    o, e = merge_cells(observed[keep], expected[keep])
    if o.size < 2:
        return 0.0, 0
    return float(np.sum((o - e) ** 2 / e)), int(o.size - 1)


# ---------------------------------------------------------------- report

@dataclass
class ExperimentReport:
    suite: str
    seed: int
    threshold: float
    config: dict
    rows: list = field(default_factory=list)
    runtime: float = 0.0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "estimate", "stderr", "target", "z", "pass"])
        for r in self.rows:
            w.writerow(r.csv_fields())
        return buf.getvalue()

    def to_json(self) -> str:
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
            if isinstance(v, dict):
                return {k: clean(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [clean(x) for x in v]
            return v
        doc = {"suite": self.suite, "seed": self.seed, "threshold": self.threshold,
               "config": self.config, "runtime_seconds": self.runtime, "passed": self.passed,
               "rows": [asdict(r) for r in self.rows]}
        return json.dumps(clean(doc), indent=2, sort_keys=True)

    def write(self, out_dir) -> None:
        import os
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "report.csv"), "w") as fh:
            fh.write(self.to_csv())
        with open(os.path.join(out_dir, "report.json"), "w") as fh:
            fh.write(self.to_json() + "\n")

    @classmethod
    def from_json(cls, text: str) -> "ExperimentReport":
        doc = json.loads(text)
        def num(v):
            if v is None:
                return math.nan
            return float(v)
        rows = [ReportRow(r["name"], num(r["estimate"]), num(r["stderr"]), num(r["target"]),
                          num(r["z"]), bool(r["passed"]), r["kind"], r["provenance"], r["detail"])
                for r in doc["rows"]]
        return cls(doc["suite"], doc["seed"], doc["threshold"], doc["config"], rows,
                   doc.get("runtime_seconds", 0.0))


# ---------------------------------------------------------------- helpers

def _specs(specs) -> list:
    if isinstance(specs, MartingaleSpec):
        return [specs]
    return list(specs)


def _fmt(v) -> str:
    return f"{float(v):g}"


# ---------------------------------------------------------------- tests

def run_martingale_test(config: SimConfig, specs, checkpoints: Sequence[float], replicates: int,
                        threshold: float = DEFAULT_THRESHOLD, prefix: str = "martingale") -> list:
    """Mean of Z(t), zeta(t) and zeta-tilde(t) against their t=0 values.

    Z uses P trees, zeta the unbranched single-particle law, zeta-tilde P
    trees with a uniform spine.  One tree per replicate is shared by all
    tilts and checkpoints.
    """
    specs = _specs(specs)
    cks = sorted(float(t) for t in checkpoints)
    t_max = cks[-1]
    model = config.model
    cfg = config.replace(t_max=t_max, checkpoints=tuple(cks), measure=Measure.P, spec=None)
    nl, nt = len(specs), len(cks)
    Z = np.empty((nl, nt, replicates))
    zeta = np.empty((nl, nt, replicates))
    zt = np.empty((nl, nt, replicates))
    for rep in range(replicates):
        c = cfg.replace(replicate=rep)
        tree = simulate_tree_P(c)
        for j, t in enumerate(cks):
            nodes, _ = log_terms(specs[0], model, tree, t)
            for i, spec in enumerate(specs):
                Z[i, j, rep] = math.exp(kernels.logsumexp(log_terms(spec, model, tree, t, nodes)[1]))
        single = simulate_single_particle(c)
        for j, t in enumerate(cks):
            for i, spec in enumerate(specs):
                zeta[i, j, rep] = math.exp(log_zeta_node(spec, model, single, 0, t))
        ptree, spine = simulate_P_tilde(c)
        for j, t in enumerate(cks):
            for i, spec in enumerate(specs):
                zt[i, j, rep] = math.exp(log_zeta_tilde(spec, model, ptree, spine, t))
    rows = []
    for i, spec in enumerate(specs):
        z0 = spec.zeta0(config.x0, config.y0)
        for j, t in enumerate(cks):
            tag = f"lam={_fmt(spec.lam)},t={_fmt(t)}"
            rows.append(mc_row(f"{prefix}/Z/{tag}", Z[i, j], z0, "Z(0) = zeta(0)", threshold))
            rows.append(mc_row(f"{prefix}/zeta/{tag}", zeta[i, j], z0, "zeta(0)", threshold))
            rows.append(mc_row(f"{prefix}/zeta_tilde/{tag}", zt[i, j], z0, "zeta-tilde(0) = zeta(0)",
                               threshold))
    return rows


def run_many_to_one_test(config: SimConfig, g, replicates: int, threshold: float = DEFAULT_THRESHOLD,
                         prefix: str = "many_to_one") -> list:
    """E_P[sum over N_t of g] three ways: tree MC, weighted single-particle MC, oracle.

    ``g`` is a vector over types or a callable ``g(x, y)``; t is ``config.t_max``.
    """
    model = config.model
    t = config.t_max
    cfg = config.replace(measure=Measure.P, spec=None)
    if callable(g):
        g_fn = g
        g_vec = None
    else:
        g_vec = np.broadcast_to(np.asarray(g, dtype=float), (model.n_types,)).copy()
        g_fn = lambda x, y: g_vec[y]
    lhs = np.empty(replicates)
    rhs = np.empty(replicates)
    for rep in range(replicates):
        c = cfg.replace(replicate=rep)
        tree = simulate_tree_P(c)
        nodes = alive_indices(tree, t)
        xs, ys, _, _ = kernels.states_at(tree.path_start, tree.path_end, tree.pt, tree.px, tree.py,
                                         tree.pcr, tree.pcmr, nodes, t)
        lhs[rep] = math.fsum(g_fn(x, y) for x, y in zip(xs, ys))
        single = simulate_single_particle(c)
        k = single.path_end[0] - 1
        rhs[rep] = math.exp(single.pcmr[k]) * g_fn(single.px[k], int(single.py[k]))
    rows = []
    if g_vec is not None and model.is_tabular:
        target = many_to_one_type_oracle(model, g_vec, config.y0, t)
        rows.append(mc_row(f"{prefix}/tree_vs_oracle", lhs, target, "many_to_one_type_oracle",
                           threshold))
        rows.append(mc_row(f"{prefix}/single_vs_oracle", rhs, target, "many_to_one_type_oracle",
                           threshold))
        err = oracle_self_check(model, g_vec, config.y0, t)
        rows.append(exact_row(f"{prefix}/oracle_step_halving", err, 1e-8,
                              "expm(tM) vs expm(tM/2)^2"))
    rows.append(two_sample_row(f"{prefix}/tree_vs_single", lhs, rhs,
                               "single-particle MC of e^{int mR} g", threshold))
    return rows


def run_measure_change_test(config: SimConfig, spec: MartingaleSpec, h: Callable, replicates: int,
                            threshold: float = DEFAULT_THRESHOLD, name: str = "measure_change") -> list:
    """E_P[h Z(t)/Z(0)] against E_Q[h], t = ``config.t_max``.

    ``h(tree, t)`` is a bounded functional of the tree (the spine is not
    passed to it).
    """
    model = config.model
    t = config.t_max
    z0 = spec.zeta0(config.x0, config.y0)
    lhs = np.empty(replicates)
    rhs = np.empty(replicates)
    cfg_p = config.replace(measure=Measure.P, spec=None)
    cfg_q = config.replace(measure=Measure.Q_TILDE, spec=spec)
    for rep in range(replicates):
        tree = simulate_tree_P(cfg_p.replace(replicate=rep))
        _, lt = log_terms(spec, model, tree, t)
        lhs[rep] = h(tree, t) * math.exp(kernels.logsumexp(lt)) / z0
    for rep in range(replicates):
        tree, _ = simulate_Q_tilde(cfg_q.replace(replicate=rep))
        rhs[rep] = h(tree, t)
    return [two_sample_row(name, lhs, rhs, "E_Q-tilde[h] (Monte Carlo under simulate_Q_tilde)",
                           threshold)]


def run_spine_tests(config: SimConfig, spec: MartingaleSpec, replicates: int,
                    threshold: float = DEFAULT_THRESHOLD, prefix: str = "spine",
                    gibbs_t: Optional[float] = None) -> list:
    """Spine fission count, spine offspring law and Gibbs-Boltzmann placement.

    Fission counts and offspring use [0, t_max]; the placement test uses
    ``gibbs_t`` (default t_max).
    """
    model = config.model
    t = config.t_max
    tg = t if gibbs_t is None else gibbs_t
    cfg = config.replace(measure=Measure.Q_TILDE, spec=spec,
                         checkpoints=tuple(sorted(set(config.checkpoints) | {tg})))
    n = model.n_types
    k_max = model.offspring.k_max
    counts = np.empty(replicates)
    fam = np.zeros((n, k_max + 1))
    n_fam_by_type = np.zeros(n)
    gibbs = {}  # |N_t| -> (observed rank counts, expected rank mass)
    pit = np.empty(replicates)
    wsum_err = 0.0
    u_stream = Stream(stream_key(derive_seed(config.seed, prefix + "/pit"), 0))
    for rep in range(replicates):
        tree, spine = simulate_Q_tilde(cfg.replace(replicate=rep))
        fissions = spine.nodes[:-1]
        counts[rep] = fissions.size
        for v in fissions:
            k = tree.path_end[v] - 1
            y = int(tree.py[k])
            fam[y, tree.n_extra[v]] += 1
            n_fam_by_type[y] += 1
        nodes, lt = log_terms(spec, model, tree, tg)
        w = np.exp(lt - kernels.logsumexp(lt))
        wsum_err = max(wsum_err, abs(math.fsum(w) - 1.0))
        at = int(np.flatnonzero(np.isin(nodes, spine.nodes))[0])
        order = np.argsort(-w, kind="stable")
        rank = int(np.flatnonzero(order == at)[0])
        m_alive = nodes.size
        obs, exp = gibbs.setdefault(m_alive, (np.zeros(m_alive), np.zeros(m_alive)))
        obs[rank] += 1
        exp += w[order]
        pit[rep] = math.fsum(w[order[:rank]]) + Stream(u_stream.key, rep).uniform() * w[at]

    rows = []
    if model.is_tabular:
        target = expected_spine_fissions(model, spec, config.y0, t)
        rows.append(mc_row(f"{prefix}/fission_count", counts, target,
                           "expected_spine_fissions: int (1+m)R along the spine chain", threshold))
    stat, df = 0.0, 0
    for y in range(n):
        if n_fam_by_type[y] == 0:
            continue
        p = size_biased_pmf(model.offspring, 0.0, y) if model.is_tabular else None
        if p is None:
            continue
        s, d = chi2_stat(fam[y], n_fam_by_type[y] * np.asarray(p))
        stat += s
        df += d
    if n_fam_by_type.sum() > 0 and model.is_tabular:
        rows.append(chi2_row(f"{prefix}/offspring_size_biased", stat, df, "size_biased_pmf"))
    rows.append(exact_row(f"{prefix}/gibbs_weight_sum", wsum_err, 1e-12, "weights sum to 1"))
    stat, df = 0.0, 0
    for m_alive in sorted(gibbs):
        obs, exp = gibbs[m_alive]
        if obs.sum() < MIN_EXPECTED:
            continue
        s, d = chi2_stat(obs, exp)
        stat += s
        df += d
    rows.append(chi2_row(f"{prefix}/gibbs_rank_by_class", stat, df,
                         "gibbs_boltzmann_weights (rank cells within |N_t| classes)"))
    hist = np.histogram(pit, bins=20, range=(0.0, 1.0))[0]
    s, d = chi2_stat(hist, np.full(20, replicates / 20.0))
    rows.append(chi2_row(f"{prefix}/gibbs_pit", s, d, "gibbs_boltzmann_weights (randomised PIT)"))
    return rows


def run_decomposition_test(config: SimConfig, spec: MartingaleSpec, n_skeletons: int,
                           resamples: int, threshold: float = DEFAULT_THRESHOLD,
                           prefix: str = "decomposition") -> list:
    """Nested Monte Carlo check of the spine decomposition.

    Q-tilde skeletons with at least one spine fission before t are kept
    fixed; the off-spine subtrees are redrawn ``resamples`` times (by salt)
    and the mean Z(t) compared with the decomposition formula.
    """
    model = config.model
    t = config.t_max
    cfg = config.replace(measure=Measure.Q_TILDE, spec=spec)
    rows = []
    rep = 0
    found = 0
    while found < n_skeletons:
        base = cfg.replace(replicate=rep)
        rep += 1
        tree, spine = simulate_Q_tilde(base)
        if spine.nodes.size < 2:
            continue
        target = math.exp(log_spine_decomposition(spec, model, tree, spine, t))
        zs = np.empty(resamples)
        for s in range(resamples):
            tr, _ = simulate_Q_tilde(base.replace(salt=s + 1))
            zs[s] = math.exp(kernels.logsumexp(log_terms(spec, model, tr, t)[1]))
        rows.append(mc_row(f"{prefix}/skeleton_{found:02d}", zs, target, "spine_decomposition",
                           threshold))
        found += 1
    return rows


def extension_identity_rows(config: SimConfig, times: Sequence[float], replicates: int,
                            prefix: str = "extension") -> list:
    """Max over P-tilde trees of |sum over N_t of prod 1/(1+A_v) - 1|."""
    cfg = config.replace(t_max=max(times), checkpoints=tuple(times))
    worst = {t: 0.0 for t in times}
    for rep in range(replicates):
        tree, _ = simulate_P_tilde(cfg.replace(replicate=rep))
        for t in times:
            nodes = alive_indices(tree, t)
            s = kernels.extension_sum(tree.parent, tree.n_extra, nodes)
            worst[t] = max(worst[t], abs(s - 1.0))
    return [exact_row(f"{prefix}/t={_fmt(t)}", worst[t], 1e-9, "exact identity = 1")
            for t in times]


def random_metzler(rng: np.random.Generator, n: int, lam: float = None) -> tuple:
    """A random valid finite-type model matrix (irreducible Q, positive a and r)."""
    a = rng.uniform(0.2, 2.0, n)
    r = rng.uniform(0.0, 2.0, n)
    Q = rng.uniform(0.1, 1.0, (n, n))
    np.fill_diagonal(Q, 0.0)
    np.fill_diagonal(Q, -Q.sum(axis=1))
    theta = rng.uniform(0.5, 2.0)
    lam = rng.uniform(-1.5, 1.5) if lam is None else lam
    model = finite_type_model(a, r, theta, Q)
    return model, lam


def eigen_rows(seed: int, n_matrices: int = 100, prefix: str = "eigen") -> list:
    rng = np.random.default_rng(derive_seed(seed, prefix))
    worst_res = 0.0
    worst_semi = 0.0
    for k in range(n_matrices):
        n = int(rng.integers(2, 9))
        model, lam = random_metzler(rng, n)
        spec = martingale_spec(model, lam)
        M = spec.matrix
        resid = float(np.max(np.abs(M @ spec.v - spec.E * spec.v)))
        worst_res = max(worst_res, resid)
        s, t = rng.uniform(0.1, 1.0, 2)
        g = rng.uniform(0.0, 1.0, n)
        A = model.motion.generator + np.diag(model.m_times_r())
        whole = expm_apply(A, s + t, g)
        split = expm_apply(A, s, expm_apply(A, t, g))
        worst_semi = max(worst_semi, float(np.max(np.abs(whole - split)) / np.max(np.abs(whole))))
    return [exact_row(f"{prefix}/residual", worst_res, 1e-10, "|Mv - Ev|_inf"),
            exact_row(f"{prefix}/expm_semigroup", worst_semi, 1e-8, "e^{(s+t)M} = e^{sM} e^{tM}")]


def skeleton_rows(max_depth: int = 4, prefix: str = "skeleton") -> list:
    """Exact-arithmetic checks of spine passage and size-biased laws."""
    half = Fraction(1, 2)
    cases = {"binary": (0, 1), "p0=p2=1/2": (half, 0, half),
             "uniform3": (Fraction(1, 3), Fraction(1, 3), Fraction(1, 3))}
    mismatches = 0
    checked = 0
    for name, pmf in cases.items():
        sb = exact_size_biased(pmf)
        sb_law = {k: p for k, p in enumerate(sb) if p > 0}
        for d in range(max_depth + 1):
            res = enumerate_discrete_skeleton(pmf, d)
            checked += 1
            if res.extension_total[d] != 1:
                mismatches += 1
            if name == "binary" and res.passage[d] != Fraction(1, 2 ** d):
                mismatches += 1
            for law in res.spine_family:
                if law != sb_law:
                    mismatches += 1
            if res.size_biased_size_law is not None and sum(res.size_biased_size_law[d].values()) != 1:
                mismatches += 1
    return [exact_row(f"{prefix}/exact_mismatches", mismatches, 0, "enumerate_discrete_skeleton")]


# ---------------------------------------------------------------- suites

def _indicator_pop(k: int):
    def h(tree, t):
        return 1.0 if alive_indices(tree, t).size >= k else 0.0
    return h


def _models():
    return {"bbm": bbm_model(1.0),
            "half": bbm_model(1.0, offspring=[[0.5, 0.0, 0.5]]),
            "two": finite_type_model([1.0, 2.0], [1.0, 2.0], 1.0, [[-1.0, 1.0], [1.0, -1.0]])}


def criterion_rows(k: int, seed: int = 0, reps: Optional[int] = None,
                   threshold: float = DEFAULT_THRESHOLD) -> list:
    """Rows for acceptance criterion ``k`` (1-9) at full scale, or with ``reps`` replicates."""
    R = lambda full: full if reps is None else max(int(reps), 10)
    sd = lambda tag: derive_seed(seed, tag)
    mods = _models()
    bbm, half, two = mods["bbm"], mods["half"], mods["two"]
    rows = []
    if k == 1:
        for tag, model in (("binary", bbm), ("p0=p2", half)):
            rows += extension_identity_rows(SimConfig(model, seed=sd("extension/" + tag)),
                                            (0.5, 1.0, 2.0), R(10_000), f"extension/{tag}")
    elif k == 2:
        specs = [martingale_spec(bbm, lam) for lam in (0.0, 0.5, 1.0)]
        rows += run_martingale_test(SimConfig(bbm, seed=sd("martingale")), specs, (0.5, 1.0, 2.0),
                                    R(100_000), threshold)
    elif k == 3:
        rows += run_many_to_one_test(SimConfig(bbm, t_max=1.0, seed=sd("m2o/bbm")), 1.0,
                                     R(100_000), threshold, "many_to_one/bbm_g=1")
        pop = expected_population(1.0, 1.0, 1.0)
        oracle = many_to_one_type_oracle(bbm, [1.0], 0, 1.0)
        rows.append(exact_row("many_to_one/bbm_oracle_vs_e", abs(oracle - pop), 1e-10,
                              "expected_population = e^{mrt}"))
        rows += run_many_to_one_test(SimConfig(two, t_max=1.0, seed=sd("m2o/two")), [0.0, 1.0],
                                     R(100_000), threshold, "many_to_one/two_type_g=1{y=1}")
    elif k == 4:
        rows += run_measure_change_test(SimConfig(bbm, t_max=2.0, seed=sd("measure")),
                                        martingale_spec(bbm, 0.5), _indicator_pop(4), R(100_000),
                                        threshold, "measure_change/h=1{|N_2|>=4}")
    elif k == 5:
        rows += [r for r in run_spine_tests(SimConfig(bbm, t_max=2.0, seed=sd("spine/binary")),
                                            martingale_spec(bbm, 0.5), R(100_000), threshold,
                                            "spine/binary") if "fission" in r.name]
        rows += [r for r in run_spine_tests(SimConfig(half, t_max=2.0, seed=sd("spine/p0p2")),
                                            martingale_spec(half, 0.5), R(100_000), threshold,
                                            "spine/p0=p2") if "offspring" in r.name]
    elif k == 6:
        rows += [r for r in run_spine_tests(SimConfig(bbm, t_max=1.0, seed=sd("gibbs")),
                                            martingale_spec(bbm, 0.5), R(10_000), threshold, "gibbs")
                 if "/gibbs_" in r.name]
    elif k == 7:
        rows += run_decomposition_test(SimConfig(bbm, t_max=1.0, seed=sd("decomposition")),
                                       martingale_spec(bbm, 0.5), 50 if reps is None else 5,
                                       R(1000), threshold)
    elif k == 8:
        rows += eigen_rows(seed)
    elif k == 9:
        rows += skeleton_rows(4)
    else:
        raise ValueError(f"no criterion {k}")
    return rows


_SUITE_PARTS = {"extension": (1,), "martingale": (2,), "many-to-one": (3,), "measure-change": (4,),
                "spine": (5, 6, 7), "eigen": (8,), "skeleton": (9,), "exact": (1, 8, 9),
                "acceptance": tuple(range(1, 10)), "quick": tuple(range(1, 10))}


SUITES = tuple(_SUITE_PARTS)
QUICK_REPLICATES = 2000


def run_suite(name: str, seed: int = 0, replicates: Optional[int] = None,
              threshold: float = DEFAULT_THRESHOLD) -> ExperimentReport:
    """Run a named suite.  ``replicates`` overrides every replicate count."""
    if name == "quick" and replicates is None:
        replicates = QUICK_REPLICATES
    if name not in _SUITE_PARTS:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    start = time.perf_counter()
    rows = []
    for k in _SUITE_PARTS[name]:
        rows += criterion_rows(k, int(seed), replicates, float(threshold))
    echo = {"suite": name, "replicates": replicates, "criteria": list(_SUITE_PARTS[name])}
    report = ExperimentReport(name, int(seed), float(threshold), echo, rows)
    report.runtime = time.perf_counter() - start
    return report
