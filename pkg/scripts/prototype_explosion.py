#!/usr/bin/env python3
"""Reproduce the prototype-explosion diagnostic: scattered features yield
one prototype per training support, tight clusters collapse to a handful.

Usage: python scripts/prototype_explosion.py [--n 500] [--dim 128]
"""

import argparse

import numpy as np

from memeclf import xdnn


def fit_ratio(vectors: np.ndarray) -> tuple[int, float]:
    samples = [(f"s{i}", v) for i, v in enumerate(vectors)]
    pset = xdnn.fit_set(samples)
    return len(pset.prototypes), len(pset.prototypes) / len(samples)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=500)
    parser.add_argument("--dim", type=int, default=128)
    parser.add_argument("--seed", type=int, default=5)
    args = parser.parse_args()
    rng = np.random.default_rng(args.seed)

    print(f"{'scenario':34} {'prototypes':>10} {'ratio':>8}")
    scattered = rng.standard_normal((args.n, args.dim))
    scattered /= np.linalg.norm(scattered, axis=1, keepdims=True)
    count, ratio = fit_ratio(scattered)
    print(f"{'uniform random unit vectors':34} {count:>10} {ratio:>8.3f}")

    for spread in (0.01, 0.05, 0.2, 0.5):
        centers = rng.standard_normal((4, args.dim))
        centers /= np.linalg.norm(centers, axis=1, keepdims=True)
        rows = []
        for i in range(args.n):
            v = centers[i % 4] + spread * rng.standard_normal(args.dim)
            rows.append(v / np.linalg.norm(v))
        count, ratio = fit_ratio(np.array(rows))
        print(f"{f'4 clusters, spread {spread}':34} {count:>10} {ratio:>8.3f}")


if __name__ == "__main__":
    main()
