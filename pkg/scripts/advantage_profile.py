"""Trace the defender's commitment gain as the defense cost sweeps upward.

For a fixed attack cost the gap between the sequential and the simultaneous
defender utility is zero for cheap defense, positive in a middle band, and
zero again once defense is expensive enough that commitment stops mattering.
"""

import argparse
import csv

from facsec import BoundaryParameters, CostParams, compare_games, load_scenario


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("scenario")
    ap.add_argument("out", help="destination CSV")
    ap.add_argument("--cd-max", type=float, default=4.0)
    ap.add_argument("--points", type=int, default=400)
    args = ap.parse_args()

    scenario = load_scenario(args.scenario)
    ca = scenario.params.attack_cost
    step = args.cd_max / args.points

    rows = []
    for t in range(args.points):
        cd = (t + 0.5) * step
        try:
            cmp = compare_games(scenario.profile, CostParams(ca, cd))
        except BoundaryParameters:
            continue
        rows.append((cd, cmp.region.value, cmp.utility_gap))

    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["cd", "region", "gap"])
        for cd, region, gap in rows:
            writer.writerow([format(cd, ".9g"), region, format(gap, ".9g")])

    peak = max(rows, key=lambda row: row[2])
    print(f"{len(rows)} points -> {args.out}")
    print(f"largest gain {peak[2]:.6g} at cd = {peak[0]:.6g} (region {peak[1]})")


if __name__ == "__main__":
    main()
