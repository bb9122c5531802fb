"""Standard bit mutation bounds at n=500, p=1/500, alpha=2 and the b_tilde boundary."""

import argparse

from negadrift.bounds import sbm_bounds, sbm_constants, sbm_corollary_bounds
from negadrift.core import PreconditionError


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--alpha", type=float, default=2.0)
    ap.add_argument("--delta", type=float, default=0.01)
    ap.add_argument("--lam", type=int, default=100)
    args = ap.parse_args()

    p = 1 / args.n
    c, _ = sbm_constants(args.n, p, args.alpha, args.delta)
    print(f"epsilon={c.epsilon:.7f}  B={c.B:.6f}  b_tilde={c.b_tilde:.5f}  D={c.D}")
    for b in range(1, int(c.b_tilde) + 2):
        try:
            rep = sbm_bounds(args.n, p, args.alpha, args.delta, 0, b, args.lam, 1000)
        except PreconditionError as exc:
            print(f"b={b:3d}  rejected: {exc}")
            continue
        print(f"b={b:3d}  E[T] >= {rep.expected_time:14.6g}  lam*E[T] >= {rep.evaluations:14.6g}"
              f"  Pr[T<1000] <= {rep.prob:.4g}")
    cor = sbm_corollary_bounds(args.n, p, args.alpha, 0, args.lam, 1000)
    print(f"delta-free variant: gamma={cor.constants['gamma']:.6f} b={cor.constants['b']} "
          f"E[T] >= {cor.expected_time:.6g}")


if __name__ == "__main__":
    main()
