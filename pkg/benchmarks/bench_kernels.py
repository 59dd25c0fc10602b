#!/usr/bin/env python3
"""Compare the compiled (numba) kernels against the plain-numpy fallback.

The fallback is selected at import time via UWMMSE_NO_NUMBA=1, so each mode
runs in its own subprocess. Both modes execute identical source; the script
also checks that their outputs agree bit-for-bit.

Usage: python3 benchmarks/bench_kernels.py [--out results.csv]
"""

import argparse
import csv
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from uwmmse.channel import gen_topology, sample_channel
from uwmmse.kernels import NUMBA_ENABLED, split_gains, unfolded_forward, wmmse_power
from uwmmse.model import _stacked, init_model
from uwmmse.gcn import node_features, normalize_adjacency

SIGMA = 2.6e-5
REPEATS = 400

results = {"numba": NUMBA_ENABLED, "cases": []}
for m in (10, 20, 50):
    top = gen_topology(m, m)
    channels = [sample_channel(top, SIGMA, s) for s in range(50)]
    params = init_model(4, 1.0, SIGMA, 0)
    stacks = _stacked(params)
    prepped = [(split_gains(ch.h), normalize_adjacency(ch.h), node_features(ch.h))
               for ch in channels]

    def run_wmmse(i):
        (g_off, hd, g_t), _, _ = prepped[i]
        return wmmse_power(g_off, hd, g_t, SIGMA ** 2, 1.0, 100)

    def run_unfold(i):
        (g_off, hd, g_t), a_hat, x0 = prepped[i]
        return unfolded_forward(g_off, hd, g_t, SIGMA ** 2, 1.0, a_hat, x0, *stacks)

    def bench(fn):
        fn(0)  # warm-up (JIT compile in numba mode)
        t0 = time.perf_counter()
        for r in range(REPEATS):
            fn(r % len(prepped))
        return (time.perf_counter() - t0) / REPEATS * 1e3

    results["cases"].append({
        "m": m,
        "wmmse_100_ms": bench(run_wmmse),
        "unfolded_k4_ms": bench(run_unfold),
        "wmmse_checksum": float(np.sum(run_wmmse(0))),
        "unfolded_checksum": float(np.sum(run_unfold(0))),
    })
print(json.dumps(results))
"""


def run_mode(no_numba: bool) -> dict:
    env = dict(os.environ, UWMMSE_NO_NUMBA="1" if no_numba else "0")
    out = subprocess.run([sys.executable, "-c", WORKER], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=None, help="optional CSV output path")
    args = parser.parse_args()

    compiled = run_mode(no_numba=False)
    fallback = run_mode(no_numba=True)
    assert compiled["numba"] and not fallback["numba"], \
        "mode selection failed; is numba installed?"

    rows = []
    print(f"{'M':>4} {'kernel':>14} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8}")
    for c, f in zip(compiled["cases"], fallback["cases"]):
        for key in ("wmmse_checksum", "unfolded_checksum"):
            if c[key] != f[key]:
                print(f"MISMATCH at M={c['m']} {key}: {c[key]!r} vs {f[key]!r}")
                return 1
        for kernel, key in (("wmmse(100)", "wmmse_100_ms"),
                            ("unfolded(K=4)", "unfolded_k4_ms")):
            speedup = f[key] / c[key]
            print(f"{c['m']:>4} {kernel:>14} {c[key]:>10.4f} {f[key]:>10.4f} {speedup:>7.1f}x")
            rows.append((c["m"], kernel, c[key], f[key], speedup))
    print("outputs bit-identical across modes")

    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["m", "kernel", "numba_ms", "numpy_ms", "speedup"])
            writer.writerows(rows)
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
