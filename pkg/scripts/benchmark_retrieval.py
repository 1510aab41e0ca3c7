#!/usr/bin/env python3
"""Latency benchmark for the exact cosine engine at the corpus sizes that matter.

Usage: python scripts/benchmark_retrieval.py [--count 10000] [--dim 1280] [--k 9]
"""

import argparse
import time

import numpy as np

from memeclf import retrieval as rt


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--count", type=int, default=10_000)
    parser.add_argument("--dim", type=int, default=1280)
    parser.add_argument("--k", type=int, default=9)
    parser.add_argument("--queries", type=int, default=50)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    vecs = rng.standard_normal((args.count, args.dim)).astype(np.float32)
    ids = [f"m{i:06d}" for i in range(args.count)]
    t0 = time.perf_counter()
    index = rt.build_index(ids, vecs, "bench")
    build = time.perf_counter() - t0

    queries = rng.standard_normal((args.queries, args.dim))
    rt.query_top_k(index, queries[0], args.k)  # warm-up
    timings = []
    for q in queries:
        t0 = time.perf_counter()
        rt.query_top_k(index, q, args.k)
        timings.append(time.perf_counter() - t0)
    timings.sort()

    print(f"index build ({args.count} x {args.dim}): {build * 1e3:.1f} ms")
    print(
        f"query k={args.k}: median {timings[len(timings) // 2] * 1e3:.2f} ms | "
        f"p90 {timings[int(len(timings) * 0.9)] * 1e3:.2f} ms | "
        f"max {timings[-1] * 1e3:.2f} ms over {args.queries} queries"
    )


if __name__ == "__main__":
    main()
