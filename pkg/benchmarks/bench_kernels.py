"""Compare the numba-compiled kernels with their plain numpy versions.

    python benchmarks/bench_kernels.py [--repeat 3]

Each kernel exposes the uncompiled function as ``.py_func``; with
SCPWALK_NUMBA=0 both columns run numpy code.
"""

import argparse
import time

import numpy as np

from scpwalk import _kernels
from scpwalk.chain import build_mcmc
from scpwalk.dynamics import poisson_weights
from scpwalk.functional import _KIND_CODE
from scpwalk.suite import corpus


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--starts", type=int, default=8)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    measures = {name: m for name, m in corpus() if name in ("cube4", "slice63", "trees_k4", "dpp5")}
    print(f"backend: {_kernels.BACKEND}")
    print(f"{'case':<22}{'compiled [s]':>14}{'numpy [s]':>12}{'speedup':>10}{'max |diff|':>12}")

    # warm-up so compile time is not counted
    Q = build_mcmc(measures["cube4"])
    W, pi = Q.flux(), Q.measure.probs
    _kernels.descend(W, pi, rng.standard_normal(Q.size), 1, 10, 1e-12)
    _kernels.uniformized_row(np.eye(2), 0, np.ones(2))

    for name, m in measures.items():
        Q = build_mcmc(m)
        W = np.ascontiguousarray(Q.flux())
        pi = np.ascontiguousarray(m.probs)
        starts = [rng.standard_normal(Q.size) for _ in range(args.starts)]
        for kind in ("mlsi", "lsi"):
            code = _KIND_CODE[kind]

            def run(f):
                return min(f(W, pi, g, code, 2000, 1e-12)[1] for g in starts)

            tc, vc = best_of(lambda: run(_kernels.descend), args.repeat)
            tp, vp = best_of(lambda: run(_kernels.descend.py_func), args.repeat)
            print(f"{'descend ' + kind + ' ' + name:<22}{tc:>14.4f}{tp:>12.4f}{tp / tc:>10.1f}{abs(vc - vp):>12.2e}")

        P = np.eye(Q.size) + Q.dense() / float(Q.delta)
        w = poisson_weights(float(Q.delta) * 50.0)
        tc, rc = best_of(lambda: _kernels.uniformized_row(P, 0, w), args.repeat)
        tp, rp = best_of(lambda: _kernels.uniformized_row.py_func(P, 0, w), args.repeat)
        print(f"{'uniformize ' + name:<22}{tc:>14.4f}{tp:>12.4f}{tp / tc:>10.1f}{np.abs(rc - rp).max():>12.2e}")


if __name__ == "__main__":
    main()
