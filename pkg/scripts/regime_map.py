"""Rasterize the equilibrium regime diagram of a scenario to CSV.

Samples cell midpoints of a (attack cost, defense cost) rectangle, labels each
cell with the simultaneous and sequential regimes plus the cost region, and
writes the grid in long format for plotting.
"""

import argparse
from collections import Counter

from facsec import load_scenario, regime_sweep, write_sweep_csv


def span(text: str) -> tuple[float, float]:
    lo, hi = (float(tok) for tok in text.split(":"))
    return lo, hi


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("scenario")
    ap.add_argument("out", help="destination CSV")
    ap.add_argument("--ca", default="0:4", help="attack-cost range lo:hi")
    ap.add_argument("--cd", default="0:4", help="defense-cost range lo:hi")
    ap.add_argument("--steps", type=int, default=200, help="cells per axis")
    args = ap.parse_args()

    scenario = load_scenario(args.scenario)
    cells = regime_sweep(scenario.profile, span(args.ca), span(args.cd), args.steps)
    write_sweep_csv(cells, args.out)

    counts = Counter(cell.region for cell in cells)
    print(f"{len(cells)} cells -> {args.out}")
    for region, count in sorted(counts.items()):
        print(f"  region {region}: {count}")


if __name__ == "__main__":
    main()
