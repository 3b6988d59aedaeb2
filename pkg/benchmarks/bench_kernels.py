#!/usr/bin/env python3
"""Benchmark the numba and pure-numpy backends of the hot kernels.

Runs itself once per backend in a subprocess (the backend is fixed at
import time by ANDERSON_LAB_BACKEND) and prints a timing table for the
full eigendecomposition, the eigenvalue-only path, and the pair/minor
kernels on disordered boxes of several sizes.

Usage: python benchmarks/bench_kernels.py [--sizes 50,100,200,400] [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys
import time


def measure(sizes, repeat):
    from andersonlab import kernels
    from andersonlab.eigensolver import symmetric_eigen, symmetric_eigenvalues
    from andersonlab.lattice import BoxGeometry, PotentialSpec, build_hamiltonian, sample_potential
    from andersonlab.spectral import Interval, chain_report

    spec = PotentialSpec.uniform(-2, 2)
    rows = []
    for n in sizes:
        g = BoxGeometry(1, n)
        h = build_hamiltonian(g, sample_potential(spec, g, 42))
        # warm the jit cache before timing
        chain_report(symmetric_eigen(h), Interval.from_center(0.0, 0.01))
        symmetric_eigenvalues(h)

        t0 = time.perf_counter()
        for _ in range(repeat):
            dec = symmetric_eigen(h)
        t_full = (time.perf_counter() - t0) / repeat

        t0 = time.perf_counter()
        for _ in range(repeat):
            symmetric_eigenvalues(h)
        t_values = (time.perf_counter() - t0) / repeat

        t0 = time.perf_counter()
        for _ in range(repeat):
            chain_report(dec, Interval.from_center(0.0, 0.01))
        t_chain = (time.perf_counter() - t0) / repeat

        rows.append({
            "n": n,
            "eigen_full_ms": t_full * 1e3,
            "eigen_values_ms": t_values * 1e3,
            "chain_report_ms": t_chain * 1e3,
        })
    return {"backend": kernels.BACKEND, "rows": rows}


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--sizes", default="50,100,200,400")
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--inner", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if args.inner:
        print(json.dumps(measure(sizes, args.repeat)))
        return

    results = {}
    for backend in ("numba", "numpy"):
        env = dict(os.environ, ANDERSON_LAB_BACKEND=backend)
        proc = subprocess.run(
            [sys.executable, __file__, "--inner", "--sizes", args.sizes,
             "--repeat", str(args.repeat)],
            env=env, capture_output=True, text=True,
        )
        if proc.returncode != 0:
            print(f"{backend}: failed\n{proc.stderr}", file=sys.stderr)
            continue
        results[backend] = json.loads(proc.stdout.splitlines()[-1])

    header = f"{'n':>6} {'kernel':<16}" + "".join(f"{b:>12}" for b in results)
    print(header)
    print("-" * len(header))
    sizes_done = [row["n"] for row in next(iter(results.values()))["rows"]]
    for i, n in enumerate(sizes_done):
        for key in ("eigen_full_ms", "eigen_values_ms", "chain_report_ms"):
            cells = "".join(
                f"{results[b]['rows'][i][key]:>12.2f}" for b in results
            )
            print(f"{n:>6} {key[:-3]:<16}{cells}")
    if {"numba", "numpy"} <= set(results):
        big = results["numba"]["rows"][-1]
        ref = results["numpy"]["rows"][-1]
        speedup = ref["eigen_full_ms"] / big["eigen_full_ms"]
        print(f"\nnumba speedup on eigen_full at n={big['n']}: {speedup:.1f}x")


if __name__ == "__main__":
    main()
