"""Hitting probabilities of the (mu,lambda) EA next to the delta-free upper bound."""

import argparse

from negadrift.bounds import max_horizon, sbm_corollary_bounds
from negadrift.core import PreconditionError
from negadrift.engine import hitting_time_experiment, mu_lambda_ea


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mu", type=int, default=3)
    ap.add_argument("--lam", type=int, default=3)
    ap.add_argument("--ns", type=str, default="60,80,100")
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--target", type=float, default=0.01)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    alpha = args.lam / args.mu
    print("n,b,L,prob_bound,hits,reps")
    for n in map(int, args.ns.split(",")):
        try:
            rep = sbm_corollary_bounds(n, 1 / n, alpha, 0, args.lam, 1)
        except PreconditionError as exc:
            print(f"{n},rejected: {exc}")
            continue
        L = max(1, max_horizon(rep, args.target))
        bound = sbm_corollary_bounds(n, 1 / n, alpha, 0, args.lam, L).prob
        s = hitting_time_experiment(mu_lambda_ea(n, args.mu, args.lam), 0, L, args.reps,
                                    args.seed, workers=args.workers)
        print(f"{n},{rep.constants['b']},{L},{bound:.4g},{s.hits},{args.reps}")


if __name__ == "__main__":
    main()
