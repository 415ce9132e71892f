"""Time the compiled Lloyd kernel against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Both kernels run from the same k-means++ seeds on spectral embeddings of the
size produced by the reference scenarios, and must return identical labels.
"""
import argparse
import time

import numpy as np

from scsid import kernels
from scsid.clustering import _kmeanspp


def embedding(n, K, seed):
    # K noisy clusters in R^K, like the Laplacian kernel coordinates
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((K, K))
    lab = rng.integers(0, K, n)
    return centers[lab] + 0.3 * rng.standard_normal((n, K))


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--restarts", type=int, default=20)
    args = ap.parse_args(argv)
    if kernels.BACKEND != "cython":
        print("compiled kernel not built; only the fallback is available")
        return 1
    from scsid._lloyd import lloyd as compiled
    print(f"{'N':>6} {'K':>3} {'cython ms':>10} {'numpy ms':>10} {'speedup':>8}")
    for n, K in [(400, 2), (1600, 2), (1600, 4), (10000, 3), (50000, 3)]:
        X = embedding(n, K, n + K)
        inits = [_kmeanspp(X, K, np.random.default_rng([0, r])) for r in range(args.restarts)]

        def go(fn):
            return [fn(X, C.copy(), 300, 50)[0] for C in inits]

        tc, lc = best_of(lambda: go(compiled), args.repeat)
        tp, lp = best_of(lambda: go(kernels.python_lloyd), args.repeat)
        assert all(np.array_equal(a, b) for a, b in zip(lc, lp)), "kernels disagree"
        print(f"{n:>6} {K:>3} {1e3 * tc:>10.2f} {1e3 * tp:>10.2f} {tp / tc:>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
