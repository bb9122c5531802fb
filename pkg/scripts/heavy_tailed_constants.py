"""The no-op probability A_N of power-law mutation and admissible constants for it."""

import argparse

from negadrift.bounds import rate_sum, mixed_bounds, mixed_params_from_gamma
from negadrift.mutation import HeavyTailed, a_constant, a_limit_bracket, zeta_bracket


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--beta", type=float, default=1.5)
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--alpha", type=float, default=1.5)
    args = ap.parse_args()

    for N in (10, 100, 1000, 10 ** 4, 10 ** 5):
        print(f"A_{N:<6d} = {a_constant(args.beta, N):.7f}")
    lo, hi = a_limit_bracket(args.beta)
    z_lo, z_hi = zeta_bracket(args.beta)
    print(f"zeta({args.beta}) in [{z_lo:.10f}, {z_hi:.10f}]")
    print(f"lim A_N in [{lo:.7f}, {hi:.7f}]")

    op = HeavyTailed(args.beta)
    A = a_constant(args.beta, args.n // 2)
    gamma = 1 - args.alpha * A
    if gamma <= 0:
        print(f"alpha={args.alpha} too large: alpha * A >= 1")
        return
    delta, B = mixed_params_from_gamma(args.alpha, gamma)
    print(f"n={args.n}: gamma={gamma:.5f} delta={delta:.5f} B={B:.5f} "
          f"rate sum={rate_sum(op, args.n, B):.5f} <= {(1 - delta) / args.alpha:.5f}")
    b = int(args.n / (B * B - 1))
    rep = mixed_bounds(args.n, op, args.alpha, delta, B, 0, b, 10, 1)
    print(f"b={b}: log E[T] >= {rep.log_expected_time:.2f}")


if __name__ == "__main__":
    main()
