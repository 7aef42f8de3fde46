"""Sweep of the beta condition on the cube (0, pi)^3 for the strong resonance
family f = 6 t^3/(1+t^2) + c t, reporting tau and the threshold per c."""

import argparse
import math

from asymlin import EnergyModel, Grid, StrongResonance, check_beta, sobolev_constant


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=17)
    ap.add_argument("--c", type=float, nargs="+", default=[3.5, 4.5, 6.0])
    ap.add_argument("--samples", type=int, default=4)
    args = ap.parse_args()

    grid = Grid((math.pi,) * 3, (args.n,) * 3)
    S = sobolev_constant(3)
    print(f"S = {S:.6f}, tau must stay below S^(3/4) = {S ** 0.75:.4f} for the condition")
    print(f"{'c':>6} {'tau':>8} {'rhs':>10} {'c tau^2/S^1.5':>14} {'verdict':>13}")
    for c in args.c:
        rep = check_beta(EnergyModel(grid, StrongResonance(6.0, c)), "ground-state",
                         samples=args.samples)
        tau = rep.tau_estimate
        print(f"{c:>6.2f} {tau:>8.4f} {rep.rhs_beta:>10.4f} {c * tau**2 / S**1.5:>14.4f} "
              f"{rep.verdict_beta:>13}")


if __name__ == "__main__":
    main()
