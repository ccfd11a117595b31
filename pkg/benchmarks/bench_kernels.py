"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel is timed on a workload sized like one Monte Carlo step block
(8192 paths) and the speedup of the compiled version is printed.
"""
import argparse
import timeit

import numpy as np

from kklab import _kernels_py
from kklab.lie import build_su2, class_bump, haar_quadrature

try:
    from kklab import _kernels as _compiled
except ImportError:  # pragma: no cover
    _compiled = None

N = 8192


def workloads(rng):
    d = 4
    x = rng.uniform(-1, 1, (N, d))
    drift = rng.normal(size=(N, d))
    frame = rng.normal(size=(N, d, d))
    dw = rng.normal(size=(N, d)) * 0.03
    lower, upper = np.full(d, -10.0), np.full(d, 10.0)
    periodic = np.array([1, 0, 0, 0], dtype=np.uint8)

    def em(mod):
        xx = x.copy()
        alive = np.ones(N, dtype=np.uint8)
        return lambda: mod.em_step(xx, drift, frame, dw, 1e-3, 1.0, lower, upper, periodic, alive)

    _, gc = build_su2()
    quad = haar_quadrature(gc, 8)
    nodes = np.ascontiguousarray(gc.embedding(quad.nodes))
    q = rng.normal(size=(N, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    norm = class_bump(gc, 4.0).norm
    weights = np.ascontiguousarray(quad.weights)

    vals = rng.normal(size=10 * N)
    g = np.einsum("nij,nkj->nik", frame, frame) + 0.5 * np.eye(d)
    g5 = np.stack([np.eye(5)] * N) + 0.1 * np.einsum("ni,nj->nij", *rng.normal(size=(2, N, 5)))
    g5 = 0.5 * (g5 + np.swapaxes(g5, 1, 2)) + np.eye(5)

    return {
        "em_step (4-d)": em,
        "class_bump_sum (SU(2), 2048 nodes)": lambda mod: (lambda: mod.class_bump_sum(q, nodes, weights, 4.0, norm, 1)),
        "neumaier_sum (81920 values)": lambda mod: (lambda: mod.neumaier_sum(vals)),
        "spd_inv_det (4x4)": lambda mod: (lambda: mod.spd_inv_det(g)),
        "spd_inv_sqrt (5x5)": lambda mod: (lambda: mod.spd_inv_sqrt(g5)),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _compiled is None:
        print("compiled extension not built; only the numpy timings are available")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<38}{'python [ms]':>14}{'compiled [ms]':>16}{'speedup':>10}")
    for name, make in workloads(rng).items():
        t_py = min(timeit.repeat(make(_kernels_py), number=1, repeat=args.repeat)) * 1e3
        if _compiled is None:
            print(f"{name:<38}{t_py:>14.2f}{'-':>16}{'-':>10}")
            continue
        t_c = min(timeit.repeat(make(_compiled), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<38}{t_py:>14.2f}{t_c:>16.2f}{t_py / t_c:>9.1f}x")


if __name__ == "__main__":
    main()
