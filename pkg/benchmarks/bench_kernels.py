#!/usr/bin/env python3
"""Compare the jitted hot kernels against the pure-numpy fallback.

The accelerated path is chosen once at import time, so each side runs in its
own subprocess: one inheriting the current environment, one with
PWLPOLICY_DISABLE_NUMBA=1.  Workloads hit the four kernels behind the public
API: the simplex pivot loop, the ADMM iteration chunk, simplex walk point
location, and the minibatch training loop.

    python3 benchmarks/bench_kernels.py [--repeats 3]
"""

import argparse
import json
import os
import subprocess
import sys
import time

WORKLOADS = ("lp_pivot", "qp_admm", "locate", "nn_train")


def _time_best(fn, repeats):
    fn()                                    # warmup (absorbs JIT compilation)
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def run_workloads(repeats):
    import numpy as np

    from pwlpolicy import accel, neural, simplicial, solvers
    from pwlpolicy import problems as pb

    rng = np.random.default_rng(0)
    results = {"numba_enabled": accel.NUMBA_ENABLED}

    lp = pb.generate_random_lp(6, 6, seed=3)
    lp_thetas = rng.uniform(-2, 2, size=(400, lp.k))

    def lp_pivot():
        for th in lp_thetas:
            solvers.solve_lp(lp, th)

    qp = pb.generate_random_qp(10, 10, seed=3)
    qp_thetas = rng.uniform(-2, 2, size=(60, qp.k))

    def qp_admm():
        for th in qp_thetas:
            solvers.solve_qp(qp, th)

    cloud = rng.uniform(-1, 1, size=(400, 2))
    tri = simplicial.build_triangulation(cloud, seed=0)
    hull_mix = rng.dirichlet(np.ones(3), size=200_000)
    picks = rng.integers(len(tri.simplices), size=200_000)
    queries = np.einsum("tl,tlk->tk", hull_mix,
                        tri.vertices[tri.simplices[picks]])

    def locate():
        simplicial.locate_many(tri, queries)

    train_thetas = np.linspace(0.0, 2.0, 512).reshape(-1, 1)
    train_xs = np.stack([np.sin(train_thetas[:, 0]),
                         np.cos(train_thetas[:, 0])], axis=1)
    cfg = neural.TrainConfig(epochs=400, batch_size=64, hidden=(32, 32), seed=0)

    def nn_train():
        neural.train((train_thetas, train_xs), cfg)

    for name, fn in (("lp_pivot", lp_pivot), ("qp_admm", qp_admm),
                     ("locate", locate), ("nn_train", nn_train)):
        results[name] = _time_best(fn, repeats)
    return results


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()

    if args.child:
        json.dump(run_workloads(args.repeats), sys.stdout)
        return

    timings = {}
    for mode in ("numba", "numpy"):
        env = dict(os.environ)
        env.pop("PWLPOLICY_DISABLE_NUMBA", None)
        if mode == "numpy":
            env["PWLPOLICY_DISABLE_NUMBA"] = "1"
        out = subprocess.run(
            [sys.executable, os.path.abspath(__file__),
             "--child", "--repeats", str(args.repeats)],
            env=env, capture_output=True, text=True, check=True)
        timings[mode] = json.loads(out.stdout)
        print(f"{mode}: numba_enabled={timings[mode]['numba_enabled']}")
    if not timings["numba"]["numba_enabled"]:
        print("note: numba unavailable; both columns ran the fallback")

    print(f"\n{'workload':<12}{'numba':>10}{'numpy':>10}{'speedup':>9}")
    for name in WORKLOADS:
        a, b = timings["numba"][name], timings["numpy"][name]
        print(f"{name:<12}{a:>9.3f}s{b:>9.3f}s{b / a:>8.1f}x")


if __name__ == "__main__":
    main()
