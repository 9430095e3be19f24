#!/usr/bin/env python3
"""Benchmark the numba kernels against their pure-numpy fallbacks.

Run directly; it spawns itself once with MEMOMAP_NO_NUMBA=1 so both paths
are timed in clean interpreters:

    python3 benchmarks/bench_kernels.py
"""

import json
import os
import subprocess
import sys
import time

import numpy as np


def bench_levenshtein(kernels, rng, n_pairs=2000, max_len=40):
    seqs = [
        (rng.integers(0, 50, size=rng.integers(5, max_len)),
         rng.integers(0, 50, size=rng.integers(5, max_len)))
        for _ in range(n_pairs)
    ]
    kernels.levenshtein_ids(*seqs[0])  # warm JIT
    t0 = time.perf_counter()
    total = 0
    for a, b in seqs:
        total += kernels.levenshtein_ids(a, b)
    return time.perf_counter() - t0, total


def bench_bleu(kernels, rng, n_pairs=2000, max_len=40):
    seqs = [
        (rng.integers(0, 30, size=rng.integers(3, max_len)),
         rng.integers(0, 30, size=rng.integers(3, max_len)))
        for _ in range(n_pairs)
    ]
    kernels.bleu_match_stats(*seqs[0], 4)
    t0 = time.perf_counter()
    total = 0
    for h, r in seqs:
        m, _ = kernels.bleu_match_stats(h, r, 4)
        total += int(m.sum())
    return time.perf_counter() - t0, total


def bench_ibm1(kernels, rng, n_pairs=1500, max_len=15, iterations=5):
    src_flat, trg_flat, soff, toff = [], [], [0], [0]
    for _ in range(n_pairs):
        src_flat.extend(rng.integers(0, 300, size=rng.integers(3, max_len)))
        trg_flat.extend(rng.integers(0, 300, size=rng.integers(3, max_len)))
        soff.append(len(src_flat))
        toff.append(len(trg_flat))
    src_flat, trg_flat = np.array(src_flat), np.array(trg_flat)
    soff, toff = np.array(soff), np.array(toff)
    n_trg = 300
    keys = set()
    for p in range(n_pairs):
        for s in set(src_flat[soff[p]:soff[p + 1]].tolist()):
            for t in set(trg_flat[toff[p]:toff[p + 1]].tolist()):
                keys.add(s * n_trg + t)
    keys = np.array(sorted(keys), dtype=np.int64)
    probs = np.full(keys.size, 1.0 / n_trg)
    kernels.ibm1_expectation(src_flat, soff, trg_flat, toff, keys, probs, n_trg)
    t0 = time.perf_counter()
    checksum = 0.0
    for _ in range(iterations):
        counts = kernels.ibm1_expectation(src_flat, soff, trg_flat, toff, keys, probs, n_trg)
        checksum += float(counts.sum())
    return time.perf_counter() - t0, checksum


def run_all():
    from memomap import kernels

    rng = np.random.default_rng(0)
    out = {"backend": kernels.BACKEND}
    for name, fn in (("levenshtein", bench_levenshtein),
                     ("bleu_match_stats", bench_bleu),
                     ("ibm1_expectation", bench_ibm1)):
        seconds, checksum = fn(kernels, rng)
        out[name] = {"seconds": round(seconds, 4), "checksum": checksum}
    return out


def main():
    if os.environ.get("_MEMOMAP_BENCH_CHILD"):
        print(json.dumps(run_all()))
        return

    here = run_all()
    env = dict(os.environ, MEMOMAP_NO_NUMBA="1", _MEMOMAP_BENCH_CHILD="1")
    child = subprocess.run([sys.executable, __file__], env=env, capture_output=True, text=True)
    other = json.loads(child.stdout)

    results = {here["backend"]: here, other["backend"]: other}
    if "numba" not in results:
        print("numba unavailable; numpy timings only")
        print(json.dumps(results, indent=2))
        return
    print(f"{'kernel':<20} {'numba (s)':>10} {'numpy (s)':>10} {'speedup':>8}")
    for name in ("levenshtein", "bleu_match_stats", "ibm1_expectation"):
        nb = results["numba"][name]
        np_ = results["numpy"][name]
        if nb["checksum"] != np_["checksum"]:
            raise SystemExit(f"{name}: backends disagree ({nb['checksum']} vs {np_['checksum']})")
        speedup = np_["seconds"] / nb["seconds"] if nb["seconds"] else float("inf")
        print(f"{name:<20} {nb['seconds']:>10.4f} {np_['seconds']:>10.4f} {speedup:>7.1f}x")


if __name__ == "__main__":
    main()
