"""Throughput comparison of the compiled hot kernels against the numpy fallback.

Runs the two hot paths (displacement-matrix batches and the star-product
phase quadrature) on each available backend and prints a timing table.

    python benchmarks/bench_backends.py [--quick]
"""

import argparse
import time

import numpy as np

from moyal._backend import available_backends, get_backend


def time_call(fn, *args, repeats=3, **kwargs):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args, **kwargs)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_displacement(quick: bool):
    rng = np.random.default_rng(1)
    cases = [(512, 64), (2048, 64), (512, 128)]
    if not quick:
        cases.append((4096, 128))
    rows = []
    for npts, dim in cases:
        gammas = rng.standard_normal(npts) + 1j * rng.standard_normal(npts)
        row = {"case": f"displacement_batch n={npts} dim={dim}"}
        for name in available_backends():
            mod = get_backend(name)
            row[name] = time_call(mod.displacement_batch, gammas, dim)
        rows.append(row)
    return rows


def bench_star(quick: bool):
    rows = []
    sizes = [41, 61] if quick else [41, 61, 81]
    for npts in sizes:
        xs = np.linspace(-6, 6, npts)
        h = xs[1] - xs[0]
        q = np.repeat(xs, npts)
        p = np.tile(xs, npts)
        w = np.full(npts, h)
        w[0] *= 0.5
        w[-1] *= 0.5
        w2 = np.outer(w, w).ravel()
        fa = 2 * np.exp(-((q - 0.7) ** 2 + p**2)) * w2
        fb = 2 * np.exp(-((q + 0.4) ** 2 + (p - 0.6) ** 2)) * w2
        inner = (np.abs(q) <= 3) & (np.abs(p) <= 3)
        oq, op = q[inner], p[inner]
        row = {"case": f"star_quadrature grid={npts}^2 outputs={oq.size}"}
        for name in available_backends():
            mod = get_backend(name)
            row[name] = time_call(
                mod.star_phase_quadrature, fa.astype(complex), q, p,
                fb.astype(complex), q, p, oq, op, 512, repeats=1,
            )
        rows.append(row)
    return rows


def print_table(rows):
    names = [n for n in ("cython", "python") if n in available_backends()]
    width = max(len(r["case"]) for r in rows) + 2
    header = "case".ljust(width) + "".join(f"{n:>12}" for n in names)
    if len(names) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for r in rows:
        line = r["case"].ljust(width) + "".join(f"{r[n]:>11.3f}s" for n in names)
        if len(names) == 2:
            line += f"{r['python'] / r['cython']:>9.2f}x"
        print(line)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="smaller cases only")
    args = parser.parse_args()
    print(f"available backends: {', '.join(available_backends())}\n")
    rows = bench_displacement(args.quick) + bench_star(args.quick)
    print_table(rows)


if __name__ == "__main__":
    main()
