"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel runs on inputs shaped like a Z-in-Z_2 construction at a few
hundred steps; the two backends must agree before timing is reported.
"""

import argparse
import random
import timeit

from discgen import kernels


def _inputs(rng, n_centers=13_000, n_points=400):
    centers, levels = kernels.IntArray(), kernels.IntArray()
    for _ in range(n_centers):
        centers.append(rng.randrange(-20_000, 20_000))
        levels.append(rng.randrange(5, 40))
    points = rng.sample(range(-7_000, 7_000), n_points)
    probes = [rng.randrange(-30_000, 30_000) for _ in range(200)]
    return centers, levels, points, probes


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if kernels.BACKEND != "cython":
        print("compiled extension not built; only the Python backend is available")
        return 1
    rng = random.Random(20240601)
    centers, levels, points, probes = _inputs(rng)
    targets = list(range(1, 31))
    cases = {
        "zp_first_hit x200": lambda b: [kernels.zp_first_hit(g, centers, levels, 2, backend=b)
                                        for g in probes],
        "zp_max_valuation x200": lambda b: [kernels.zp_max_valuation(g, centers, 2, backend=b)
                                            for g in probes],
        "int_difference_set |A|=400": lambda b: kernels.int_difference_set(points, backend=b),
        "int_pair_counts |A|=400": lambda b: kernels.int_pair_counts(points, targets, backend=b),
    }
    print(f"{'kernel':<28} {'python ms':>10} {'cython ms':>10} {'speedup':>8}")
    for name, fn in cases.items():
        assert fn("python") == fn("cython"), name
        t_py = min(timeit.repeat(lambda: fn("python"), number=1, repeat=args.repeat))
        t_cy = min(timeit.repeat(lambda: fn("cython"), number=1, repeat=args.repeat))
        print(f"{name:<28} {t_py * 1e3:>10.2f} {t_cy * 1e3:>10.2f} {t_py / t_cy:>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
