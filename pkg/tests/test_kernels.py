"""Compiled-path vs plain-numpy-path agreement for the hot kernels.

The same kernel sources run JIT-compiled by default and as plain Python
when PWLPOLICY_DISABLE_NUMBA is set; results must agree to float tolerance
(not necessarily bit-for-bit: summation order differs between the paths).
"""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from pwlpolicy import accel

_DRIVER = r"""
import json
import numpy as np
from pwlpolicy import problems as pb, solvers, simplicial as sim, neural
from pwlpolicy.solvers.simplex import solve_inequality_lp

out = {}

# simplex pivot loop
p = pb.builtin_problem("example1")
res = solvers.solve_lp(p, [0.37])
out["lp_x"] = res.x.tolist()
out["lp_obj"] = res.objective

# ADMM chunk
qp = pb.generate_random_qp(3, 3, seed=6)
r = solvers.solve_qp(qp, np.array([0.5, -1.0, 2.0]))
out["qp_x"] = r.x.tolist()
out["qp_obj"] = r.objective

# locate walk
pts = np.random.default_rng(4).uniform(-1, 1, size=(30, 2))
t = sim.build_triangulation(pts, seed=4)
queries = np.random.default_rng(5).uniform(-0.4, 0.4, size=(200, 2))
idx, lam = sim.locate_many(t, queries)
out["loc_idx"] = idx.tolist()
out["loc_lam_sum"] = float(lam.sum())

# training kernel (short run)
rng = np.random.default_rng(1)
th = rng.uniform(0, 1, size=(32, 1))
xs = 2.0 * th - 0.25
model = neural.train((th, xs), neural.TrainConfig(
    epochs=40, batch_size=8, hidden=(6,), seed=3))
out["train_loss"] = model.train_meta["final_train_loss"]
out["w_sum"] = float(sum(np.abs(w).sum() for w in model.weights))

print(json.dumps(out))
"""


def _run(disable: bool):
    env = dict(os.environ)
    if disable:
        env[accel.ENV_FLAG] = "1"
    else:
        env.pop(accel.ENV_FLAG, None)
    proc = subprocess.run([sys.executable, "-c", _DRIVER], env=env,
                          capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0, proc.stderr
    return json.loads(proc.stdout.strip().splitlines()[-1])


@pytest.fixture(scope="module")
def both_paths():
    return _run(disable=False), _run(disable=True)


def test_env_flag_recognized():
    assert accel.ENV_FLAG == "PWLPOLICY_DISABLE_NUMBA"


def test_lp_results_agree(both_paths):
    jit, plain = both_paths
    assert np.allclose(jit["lp_x"], plain["lp_x"], atol=1e-12)
    assert jit["lp_obj"] == pytest.approx(plain["lp_obj"], abs=1e-12)


def test_qp_results_agree(both_paths):
    jit, plain = both_paths
    assert np.allclose(jit["qp_x"], plain["qp_x"], atol=1e-7)
    assert jit["qp_obj"] == pytest.approx(plain["qp_obj"], abs=1e-7)


def test_locate_results_agree(both_paths):
    jit, plain = both_paths
    assert jit["loc_idx"] == plain["loc_idx"]
    assert jit["loc_lam_sum"] == pytest.approx(plain["loc_lam_sum"], abs=1e-9)


def test_training_agrees(both_paths):
    jit, plain = both_paths
    assert jit["train_loss"] == pytest.approx(plain["train_loss"], rel=1e-6)
    assert jit["w_sum"] == pytest.approx(plain["w_sum"], rel=1e-6)
