"""Ground state of -u'' = 2u^3/(1+u^2) on (0, pi) under grid refinement,
compared with a shooting reference."""

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from asymlin import EnergyModel, Grid, SmoothSaturation, minimize_psi

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))
from oracles import saturation, shoot  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eta", type=float, default=2.0)
    ap.add_argument("--sizes", type=int, nargs="+", default=[127, 255, 511, 1023, 2047])
    args = ap.parse_args()

    _, ref, _ = shoot(saturation(args.eta))
    print(f"shooting reference level {ref:.10f}")
    print(f"{'n':>6} {'level':>14} {'rel error':>10} {'residual':>10} {'iters':>6}")
    prev = None
    for n in args.sizes:
        g = Grid((math.pi,), (n,))
        rep = minimize_psi(EnergyModel(g, SmoothSaturation(0.0, args.eta)), g.interpolate(np.sin))
        err = abs(rep.level - ref) / ref
        rate = f"  order {math.log2(prev / err):.2f}" if prev else ""
        print(f"{n:>6} {rep.level:>14.10f} {err:>10.2e} {rep.residual:>10.1e} "
              f"{rep.iterations:>6}{rate}")
        prev = err


if __name__ == "__main__":
    main()
