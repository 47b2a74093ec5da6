"""Compiled vs pure-Python kernels on the three hot paths.

    python benchmarks/bench_kernels.py [--points 30] [--repeat 3]
"""
import argparse
import time

import numpy as np

from cechecg import _kernels
from cechecg.complex import build_cech_filtration


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=30, help="cloud size for the full filtration")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    pts = rng.normal(size=(args.points, 3))
    tets = np.array([rng.choice(args.points, 4, replace=False) for _ in range(20_000)])
    filt = build_cech_filtration(pts, max_dim=3)
    indptr, indices = filt.boundary()

    cases = {
        "meb_diameters (20k tetrahedra)": lambda k: k.meb_diameters(pts, tets),
        f"cech build ({len(filt)} simplices)": None,
        "boundary reduction": lambda k: k.reduce_boundary(indptr, indices),
    }
    backends = _kernels.available_backends()
    if len(backends) < 2:
        print("compiled kernels not built; only the Python backend is timed")
    timings = {}
    saved = _kernels._active
    try:
        for name in backends:
            mod = _kernels.get_backend(name)
            _kernels._active = mod
            for case, fn in cases.items():
                run = (lambda: build_cech_filtration(pts, max_dim=3)) if fn is None else (lambda: fn(mod))
                timings[case, name] = best_of(run, args.repeat)
    finally:
        _kernels._active = saved

    width = max(map(len, cases))
    print(f"{'case':<{width}}  " + "  ".join(f"{b:>10}" for b in backends)
          + ("     speedup" if len(backends) > 1 else ""))
    for case in cases:
        row = f"{case:<{width}}  " + "  ".join(f"{timings[case, b]:>9.4f}s" for b in backends)
        if len(backends) > 1:
            row += f"  {timings[case, 'python'] / timings[case, 'compiled']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
