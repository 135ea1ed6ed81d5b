"""Build both optimal GF(9) designs and print all seven columns next to the reference values."""
import argparse

from stratdisc.cli import TABLE1, TABLE1_TOL, table1_values
from stratdisc.weights import parse_weights

COLUMNS = ["sd2", "phi", "phi_lb", "phi_ub", "G", "G_lb", "G_ub"]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--weights", default="constant")
    args = ap.parse_args()
    w = parse_weights(args.weights, 3, 2)
    got, exact = table1_values(w), table1_values(w, exact=True)
    print(f"{'':<18}" + "".join(f"{c:>13}" for c in COLUMNS))
    worst = 0.0
    for name, target in TABLE1.items():
        print(f"{name:<18}" + "".join(f"{got[name][c]:13.6f}" for c in COLUMNS))
        print(f"{'  reference':<18}" + "".join(f"{target[c]:13.6f}" for c in COLUMNS))
        e = exact[name]
        print(f"  exact: Phi_SD = {e['phi']}, G_D = {e['G']}, G_LB = {e['G_lb']}, G_UB = {e['G_ub']}")
        worst = max(worst, *(abs(got[name][c] - target[c]) for c in COLUMNS))
    print(f"max deviation from reference values: {worst:.2e} (tolerance {TABLE1_TOL:g})")


if __name__ == "__main__":
    main()
