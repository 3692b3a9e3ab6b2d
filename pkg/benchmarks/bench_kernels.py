"""Benchmark the lattice kernels: numpy reference vs numba backend.

Times the staircase triangulation, the determinant sweep and the tiling
check on lattice trapezoids of increasing size, reports the best of
``--repeat`` runs, and confirms both backends return identical results.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from ss_skeleton import _kernels as K

# (W, HL, slope): from the flagship leaf up to a few million triangles
SIZES = [(1, 1, 0), (30, 20, 1), (100, 100, 0), (300, 200, 1), (1000, 1000, 0), (1500, 1000, 1)]


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench(repeat: int) -> list[dict]:
    t0 = time.perf_counter()
    staircase_nb, dets_nb, tiling_nb = K._compile()
    # first calls trigger JIT compilation
    warm = staircase_nb(2, 2, 0)
    dets_nb(warm)
    tiling_nb(warm, 2, 2, 0)
    compile_s = time.perf_counter() - t0
    print(f"numba compile + first call: {compile_s:.2f} s", file=sys.stderr)

    rows = []
    for W, HL, slope in SIZES:
        tris = K.staircase_numpy(W, HL, slope)
        fast = staircase_nb(W, HL, slope)
        if not (
            np.array_equal(tris, fast)
            and np.array_equal(K.dets_numpy(tris), dets_nb(tris))
            and tuple(tiling_nb(tris, W, HL, slope)) == K.tiling_numpy(tris, W, HL, slope)
        ):
            raise AssertionError(f"backends disagree on {(W, HL, slope)}")
        row = {"W": W, "HL": HL, "slope": slope, "triangles": int(tris.shape[0])}
        for name, np_fn, nb_fn in [
            ("staircase", lambda: K.staircase_numpy(W, HL, slope), lambda: staircase_nb(W, HL, slope)),
            ("dets", lambda: K.dets_numpy(tris), lambda: dets_nb(tris)),
            ("tiling", lambda: K.tiling_numpy(tris, W, HL, slope), lambda: tiling_nb(tris, W, HL, slope)),
        ]:
            row[f"{name}_numpy_s"] = best_of(np_fn, repeat)
            row[f"{name}_numba_s"] = best_of(nb_fn, repeat)
        rows.append(row)
    return rows


def main(argv: list[str] | None = None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--json", metavar="PATH", help="also write the raw timings as JSON")
    args = parser.parse_args(argv)

    rows = bench(args.repeat)
    header = f"{'triangles':>10}  " + "  ".join(f"{k:>20}" for k in ("staircase np/nb", "dets np/nb", "tiling np/nb"))
    print(header)
    for r in rows:
        cells = []
        for k in ("staircase", "dets", "tiling"):
            a, b = r[f"{k}_numpy_s"], r[f"{k}_numba_s"]
            cells.append(f"{a * 1e3:8.2f}/{b * 1e3:7.2f} ms")
        print(f"{r['triangles']:>10}  " + "  ".join(f"{c:>20}" for c in cells))
    print(f"auto dispatch switches to numba at {K.NUMBA_THRESHOLD} triangles")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
