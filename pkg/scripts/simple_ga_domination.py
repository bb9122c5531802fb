"""Individual fitness of the mutation-only simple GA versus a uniform random string."""

import argparse

import numpy as np

from negadrift.driftlab import (domination_test_exact, domination_test_statistical,
                                simple_ga_fitness_distribution, simple_ga_fitness_samples)
from negadrift.engine import replicate_rng
from negadrift.mutation import binomial_pmf


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=30)
    ap.add_argument("--mu", type=int, default=20)
    ap.add_argument("--samples", type=int, default=10_000)
    ap.add_argument("--significance", type=float, default=1e-3)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    for t in (1, 2, 4):
        pmf = simple_ga_fitness_distribution(5, 3, t)
        v = domination_test_exact(binomial_pmf(5, 0.5), pmf)
        print(f"exact n=5 mu=3 t={t}: holds={v.holds} gap={v.gap:.3g} mean={pmf @ np.arange(6):.4f}")

    times = [1, 5, 10, 25, 50]
    samples = simple_ga_fitness_samples(args.n, args.mu, times, args.samples,
                                        replicate_rng(args.seed, 0))
    ref = np.cumsum(binomial_pmf(args.n, 0.5))
    for t in times:
        v = domination_test_statistical(samples[t], ref, args.significance)
        print(f"sampled n={args.n} mu={args.mu} t={t:3d}: holds={v.holds} gap={v.gap:+.4f} "
              f"mean={samples[t].mean():.3f}")


if __name__ == "__main__":
    main()
