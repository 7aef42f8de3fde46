"""Solution pairs for -u'' = eta u^3/(1+u^2) on (0, pi) when several
eigenvalues of eta lie below one, against the shooting enumeration by nodes."""

import argparse
import math
import sys
from pathlib import Path

from asymlin import EnergyModel, Grid, SmoothSaturation, check_f2, multiplicity_search
from asymlin.nehari import SearchOptions

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))
from oracles import saturation, solutions_by_nodes  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eta", type=float, default=5.0)
    ap.add_argument("--n", type=int, default=1023)
    ap.add_argument("--starts", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    model = EnergyModel(Grid((math.pi,), (args.n,)), SmoothSaturation(0.0, args.eta))
    f2 = check_f2(model)
    print(f"eigenvalue condition {f2.verdict_f2}: m = {f2.m}, s_m = {f2.s_m}")
    rep = multiplicity_search(model, f2.spectrum_eta, SearchOptions(random_starts=args.starts),
                              seed=args.seed)
    oracle = {k: e for k, e, _ in solutions_by_nodes(saturation(args.eta))}
    print(f"{rep.distinct_count} distinct pairs (target {f2.s_m})")
    for s in rep.solutions:
        ref = oracle.get(s.interior_zeros)
        cmp = f"  oracle {ref:.8f}" if ref is not None else ""
        print(f"  level {s.level:.8f}  {s.sign_verdict:<14} zeros {s.interior_zeros}{cmp}")


if __name__ == "__main__":
    main()
