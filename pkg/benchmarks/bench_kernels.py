"""Compiled kernels vs the pure-Python fallback.

Runs the same workload twice in fresh interpreters, once with numba and once
with SPINEMC_DISABLE_JIT=1, checks that both produce identical trees, and
prints the timings.

    python benchmarks/bench_kernels.py [--trees N] [--tmax T]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import hashlib, json, sys, time
from spinemc import SimConfig, bbm_model, martingale_spec, simulate_Q_tilde, simulate_tree_P, dump_tree
from spinemc.martingale import eval_Z
n, t_max = int(sys.argv[1]), float(sys.argv[2])
m = bbm_model(1.0)
spec = martingale_spec(m, 0.5)
cfg = SimConfig(m, t_max=t_max, seed=1)
simulate_tree_P(cfg.replace(t_max=0.1))  # compile outside the timed region
simulate_Q_tilde(cfg.replace(t_max=0.1, measure="Q-tilde", spec=spec))
h = hashlib.sha256()
nodes = 0
start = time.perf_counter()
for r in range(n):
    tree = simulate_tree_P(cfg.replace(replicate=r))
    nodes += tree.n_nodes
    h.update(repr(eval_Z(spec, m, tree, t_max).log_value).encode())
    if r < 20:
        h.update(dump_tree(tree).encode())
elapsed = time.perf_counter() - start
print(json.dumps({"seconds": elapsed, "nodes": nodes, "digest": h.hexdigest()}))
"""


def run(n, t_max, disable):
    env = dict(os.environ, SPINEMC_DISABLE_JIT="1" if disable else "0")
    out = subprocess.run([sys.executable, "-c", WORKER, str(n), str(t_max)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trees", type=int, default=300)
    ap.add_argument("--tmax", type=float, default=2.0)
    args = ap.parse_args()
    jit = run(args.trees, args.tmax, False)
    py = run(args.trees, args.tmax, True)
    same = jit["digest"] == py["digest"]
    print(f"{'backend':<10}{'trees':>8}{'nodes':>10}{'seconds':>10}{'us/node':>10}")
    for name, r in (("numba", jit), ("python", py)):
        print(f"{name:<10}{args.trees:>8}{r['nodes']:>10}{r['seconds']:>10.3f}"
              f"{1e6 * r['seconds'] / max(r['nodes'], 1):>10.2f}")
    print(f"speedup {py['seconds'] / jit['seconds']:.1f}x, identical output: {same}")
    return 0 if same else 1


if __name__ == "__main__":
    sys.exit(main())
