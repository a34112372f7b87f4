"""Run the repeated-routing simulator on a scenario and summarize the trace."""

import argparse

from facsec import (
    SimulationConfig,
    StateDistribution,
    load_scenario,
    run_simulation,
    solve_ne,
    solve_spe,
    state_distribution,
    write_trace_csv,
)


def resolve_state_dist(scenario) -> StateDistribution:
    token = scenario.learning.true_state
    if token == "none":
        return StateDistribution.point(None)
    if token == "ne":
        return state_distribution(solve_ne(scenario.profile, scenario.params))
    if token == "spe":
        return state_distribution(solve_spe(scenario.profile, scenario.params))
    return StateDistribution.point(token)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("scenario")
    ap.add_argument("out", help="destination CSV for the stage trace")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--horizon", type=int, default=None)
    args = ap.parse_args()

    scenario = load_scenario(args.scenario)
    if scenario.learning is None:
        raise SystemExit("scenario has no [learning] section")

    config = SimulationConfig(
        network=scenario.network,
        prior=scenario.learning.prior,
        state_dist=resolve_state_dist(scenario),
        noise_half_width=scenario.learning.noise_half_width,
        horizon=args.horizon or scenario.learning.horizon,
        seed=args.seed,
    )
    trace = run_simulation(config)
    write_trace_csv(trace, args.out)

    final = trace.records[-1].belief_after
    state, weight = max(final.probs, key=lambda item: item[1])
    print(f"realized state: {trace.realized_state or 'none'}")
    print(f"final belief peaks at {state or 'none'} = {weight:.4f}")
    print(f"{len(trace.records)} stages -> {args.out}")


if __name__ == "__main__":
    main()
