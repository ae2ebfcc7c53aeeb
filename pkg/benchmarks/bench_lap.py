"""Time the compiled and numpy assignment kernels on filling-volume cost matrices.

    python3 benchmarks/bench_lap.py [--sizes 100,300,1000] [--repeat 3]
"""
import argparse
import time

import numpy as np

from fillvol import lap
from fillvol.models import sample_iid_zero_cycle
from fillvol.transport import boundary_distance


def savings_matrix(N, d, seed):
    Z = sample_iid_zero_cycle(N, d, seed)
    b = boundary_distance(Z.positions)
    pos, neg = Z.signs > 0, Z.signs < 0
    rows, cols = (pos, neg) if pos.sum() <= neg.sum() else (neg, pos)
    X, Y = Z.positions[rows], Z.positions[cols]
    dist = np.sqrt(((X[:, None] - Y[None]) ** 2).sum(axis=2))
    return np.minimum(0.0, dist - b[rows][:, None] - b[cols][None, :])


def best_time(fn, repeat):
    out = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        out = min(out, time.perf_counter() - t)
    return out


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--sizes", default="100,300,1000,2000")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    backends = ["python"] + (["cython"] if lap.BACKEND == "cython" else [])
    print(f"{'N':>6} {'rows x cols':>12} " + " ".join(f"{b:>10}" for b in backends) + "    speedup")
    for N in (int(s) for s in args.sizes.split(",")):
        C = savings_matrix(N, args.d, N)
        times = {b: best_time(lambda: lap.solve_assignment(C, backend=b), args.repeat) for b in backends}
        ref = lap.solve_assignment(C, backend="python")[0]
        for b in backends:
            assert np.array_equal(lap.solve_assignment(C, backend=b)[0], ref)
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        shape = f"{C.shape[0]}x{C.shape[1]}"
        print(f"{N:>6} {shape:>12} " + " ".join(f"{times[b]:>9.4f}s" for b in backends) + f"    {speed:6.1f}x")


if __name__ == "__main__":
    main()
