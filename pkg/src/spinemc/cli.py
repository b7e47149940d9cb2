"""Command line entry point: ``spinemc <subcommand> ...``."""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import math
import os
import sys

import numpy as np

from . import harness
from .eigen import martingale_spec
from .martingale import (eval_Z, eval_zeta_tilde, gibbs_boltzmann_weights, log_zeta_node,
                         spine_decomposition)
from .model import load_config, model_from_config, _real, _reals
from .oracle import expected_population, many_to_one_type_oracle
from .simulate import DEFAULT_GRID, Measure, SimConfig, simulate
from .tree import alive_indices, dump_tree, format_label, load_tree, spine_node_index

DEFAULT_CONFIG = {"model": {"kind": "bbm", "rate": 1.0}, "martingale": {"lambda": 0.5},
                  "simulation": {"t_max": 1.0}}


def _load(path):
    cfg = dict(DEFAULT_CONFIG) if path is None else load_config(path)
    model = model_from_config(cfg.get("model", {}))
    lam = _real(cfg.get("martingale", {}).get("lambda", 0.0))
    return cfg, model, lam


def _sim_config(cfg, model, lam, args) -> SimConfig:
    sim = cfg.get("simulation", {})
    measure = Measure.parse(args.measure or sim.get("measure", "P"))
    t_max = args.tmax if args.tmax is not None else _real(sim.get("t_max", 1.0))
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    spec = martingale_spec(model, lam) if measure is Measure.Q_TILDE else None
    return SimConfig(model, measure, spec, t_max=t_max,
                     grid_step=_real(sim.get("grid_step", DEFAULT_GRID)), seed=seed,
                     replicate=getattr(args, "replicate", 0) or 0,
                     x0=_real(sim.get("x0", 0.0)), y0=int(sim.get("y0", 0)),
                     checkpoints=tuple(_reals(sim.get("checkpoints", []))),
                     max_nodes=int(sim.get("max_nodes", 1_000_000)))


def _out(path):
    if path in (None, "-"):
        return contextlib.nullcontext(sys.stdout)
    return open(path, "w")


def cmd_simulate(args) -> int:
    """Per-replicate summary CSV: population, Z and spine facts at t_max."""
    cfg, model, lam = _load(args.config)
    base = _sim_config(cfg, model, lam, args)
    spec = martingale_spec(model, lam)
    t = base.t_max
    with _out(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["replicate", "n_nodes", "n_alive", "Z", "spine_generation", "zeta_tilde"])
        for rep in range(args.replicates):
            tree, spine = simulate(base.replace(replicate=rep))
            row = [rep, tree.n_nodes, alive_indices(tree, t).size,
                   repr(eval_Z(spec, model, tree, t).value)]
            if spine is not None:
                i = spine_node_index(tree, spine, t)
                row += [int(tree.depth[i]), repr(eval_zeta_tilde(spec, model, tree, spine, t))]
            else:
                row += ["", ""]
            w.writerow(row)
    return 0


def cmd_dump_tree(args) -> int:
    cfg, model, lam = _load(args.config)
    tree, spine = simulate(_sim_config(cfg, model, lam, args))
    with _out(args.out) as fh:
        fh.write(dump_tree(tree, spine))
    return 0


def cmd_eval(args) -> int:
    """zeta, Z, zeta-tilde, the spine decomposition and the weight table for a dumped tree."""
    cfg, model, lam = _load(args.config)
    if args.lam is not None:
        lam = args.lam
    with open(args.tree) as fh:
        tree, spine = load_tree(fh.read(), model)
    t = tree.horizon if args.t is None else args.t
    spec = martingale_spec(model, lam)
    with _out(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["quantity", "value"])
        w.writerow(["Z", repr(eval_Z(spec, model, tree, t).value)])
        if spine is not None:
            i = spine_node_index(tree, spine, t)
            w.writerow(["zeta", repr(math.exp(log_zeta_node(spec, model, tree, i, t)))])
            w.writerow(["zeta_tilde", repr(eval_zeta_tilde(spec, model, tree, spine, t))])
            w.writerow(["spine_decomposition", repr(spine_decomposition(spec, model, tree, spine, t))])
        w.writerow([])
        w.writerow(["label", "weight"])
        for lab, wt in sorted(gibbs_boltzmann_weights(spec, model, tree, t).items()):
            w.writerow([format_label(lab), repr(wt)])
    return 0


def cmd_oracle(args) -> int:
    cfg, model, lam = _load(args.config)
    sim = cfg.get("simulation", {})
    t = args.tmax if args.tmax is not None else _real(sim.get("t_max", 1.0))
    y0 = int(sim.get("y0", 0))
    spec = martingale_spec(model, lam)
    out = {"t": t, "y0": y0, "lambda": lam, "E": spec.E, "v": spec.v.tolist()}
    if model.is_tabular:
        out["expected_population"] = many_to_one_type_oracle(model, np.ones(model.n_types), y0, t)
        out["expected_by_type"] = [many_to_one_type_oracle(model, np.eye(model.n_types)[k], y0, t)
                                   for k in range(model.n_types)]
        mr = model.m_times_r()
        if np.all(mr == mr[0]):
            out["expected_population_closed_form"] = expected_population(
                float(model.rates()[0]), float(model.mean_offspring()[0]), t)
    with _out(args.out) as fh:
        fh.write(json.dumps(out, indent=2) + "\n")
    return 0


def cmd_verify(args) -> int:
    report = harness.run_suite(args.suite, seed=args.seed or 0, replicates=args.replicates,
                               threshold=args.threshold)
    if args.out:
        report.write(args.out)
    else:
        sys.stdout.write(report.to_csv())
    n_fail = sum(not r.passed for r in report.rows)
    print(f"{args.suite}: {len(report.rows) - n_fail}/{len(report.rows)} rows passed "
          f"in {report.runtime:.1f}s", file=sys.stderr)
    return 0 if n_fail == 0 else 1


def cmd_report(args) -> int:
    path = args.input
    if os.path.isdir(path):
        path = os.path.join(path, "report.json")
    with open(path) as fh:
        report = harness.ExperimentReport.from_json(fh.read())
    with _out(args.out) as fh:
        if args.format == "csv":
            fh.write(report.to_csv())
        elif args.format == "json":
            fh.write(report.to_json() + "\n")
        else:
            for r in report.rows:
                fh.write(f"{'PASS' if r.passed else 'FAIL'}  {r.name}  estimate={r.estimate:.6g}  "
                         f"target={r.target:.6g}  z={r.z:.3g}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spinemc", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def sim_flags(sp):
        sp.add_argument("--config", help="JSON config (see docs/config.md)")
        sp.add_argument("--measure", choices=["P", "P-tilde", "Q-tilde"])
        sp.add_argument("--tmax", type=float)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output file (default stdout)")

    sp = sub.add_parser("simulate", help="simulate replicates and print a per-replicate CSV")
    sim_flags(sp)
    sp.add_argument("--replicates", type=int, default=10)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("dump-tree", help="simulate one tree and write it in the text format")
    sim_flags(sp)
    sp.add_argument("--replicate", type=int, default=0)
    sp.set_defaults(func=cmd_dump_tree)

    sp = sub.add_parser("eval", help="evaluate the martingales on a dumped tree")
    sp.add_argument("tree")
    sp.add_argument("--config")
    sp.add_argument("--lam", type=float)
    sp.add_argument("--t", type=float)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("oracle", help="print oracle values for a config")
    sp.add_argument("--config")
    sp.add_argument("--tmax", type=float)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("verify", help="run a named verification suite")
    sp.add_argument("--suite", default="quick", choices=harness.SUITES)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--replicates", type=int)
    sp.add_argument("--threshold", type=float, default=harness.DEFAULT_THRESHOLD)
    sp.add_argument("--out", help="directory for report.csv and report.json")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("report", help="render a saved report")
    sp.add_argument("input", help="report.json or the directory holding it")
    sp.add_argument("--format", choices=["csv", "json", "text"], default="text")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
