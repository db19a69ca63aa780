"""Time the compiled SINR kernel against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--trials 20000] [--points 60] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from mmcov import _kernels_py

try:
    from mmcov import _kernels as compiled
except ImportError:
    compiled = None


def make_batch(n_trials, mean_points, seed=0):
    rng = np.random.default_rng(seed)
    counts = rng.poisson(mean_points, n_trials)
    offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    n = int(offsets[-1])
    gain = rng.random(n) ** -2
    signal = gain * rng.gamma(3.0, 1 / 3, n) * 100.0
    interf = gain * rng.gamma(3.0, 1 / 3, n) * rng.choice([0.01, 0.1, 1.0, 100.0], n)
    return gain, signal, interf, offsets


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--trials", type=int, default=20000)
    p.add_argument("--points", type=float, default=60.0, help="mean points per trial")
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)

    batch = make_batch(args.trials, args.points)
    impls = {"numpy": _kernels_py.sinr_batch_full}
    if compiled is not None:
        impls["cython"] = compiled.sinr_batch_full
    else:
        print("compiled kernel not built; timing the numpy fallback only")

    ref = None
    best = {}
    for name, fn in impls.items():
        out = fn(*batch, 1e-3)
        if ref is None:
            ref = out
        else:
            assert np.array_equal(out[1], ref[1]) and np.allclose(out[0], ref[0], rtol=1e-12)
        best[name] = min(timeit.repeat(lambda: fn(*batch, 1e-3), number=1, repeat=args.repeat))
    points = int(batch[3][-1])
    for name, t in best.items():
        print(f"{name:7s} {t * 1e3:9.2f} ms  {points / t / 1e6:7.1f} Mpoints/s")
    if len(best) == 2:
        print(f"speedup {best['numpy'] / best['cython']:.2f}x")


if __name__ == "__main__":
    main()
