import os
import subprocess
import sys

import numpy as np

from spinemc.rng import Stream, child_key_k, child_key_py, derive_seed, salted_k, salted_py, stream_key


def test_stream_is_deterministic():
    a = Stream.for_replicate(7, 3)
    b = Stream.for_replicate(7, 3)
    assert [a.uniform() for _ in range(5)] == [b.uniform() for _ in range(5)]


def test_replicates_and_salts_give_distinct_keys():
    keys = {stream_key(1, r) for r in range(1000)}
    keys |= {stream_key(1, r, salt=5) for r in range(1000)}
    assert len(keys) == 2000


def test_uniform_open_interval_and_moments():
    s = Stream(stream_key(0))
    u = np.array([s.uniform() for _ in range(20000)])
    assert u.min() > 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.01
    z = np.array([s.normal() for _ in range(20000)])
    assert abs(z.mean()) < 0.03 and abs(z.std() - 1.0) < 0.03


def test_python_and_compiled_child_keys_agree():
    k = stream_key(99, 4)
    for j in range(1, 6):
        assert int(child_key_k(np.uint64(k), j)) == child_key_py(k, j)
        assert int(salted_k(np.uint64(k), j)) == salted_py(k, j)
    assert int(salted_k(np.uint64(k), 0)) == k


def test_categorical_and_integer():
    s = Stream(stream_key(3))
    draws = [s.categorical(np.array([0.2, 0.5, 1.0])) for _ in range(5000)]
    freq = np.bincount(draws, minlength=3) / 5000
    assert np.allclose(freq, [0.2, 0.3, 0.5], atol=0.03)
    assert all(0 <= s.integer(4) < 4 for _ in range(100))


def test_derive_seed_depends_on_name():
    assert derive_seed(1, "a") != derive_seed(1, "b")
    assert derive_seed(1, "a") == derive_seed(1, "a")


def test_fallback_matches_compiled_bits():
    code = ("from spinemc import bbm_model, SimConfig, simulate_tree_P, dump_tree;"
            "print(dump_tree(simulate_tree_P(SimConfig(bbm_model(1.0), t_max=1.5, seed=11))))")
    env = dict(os.environ)
    out_jit = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                             env={**env, "SPINEMC_DISABLE_JIT": "0"}, check=True).stdout
    out_py = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                            env={**env, "SPINEMC_DISABLE_JIT": "1"}, check=True).stdout
    assert out_jit == out_py
    assert out_jit.count("\n") > 3
