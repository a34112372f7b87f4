"""Command-line front end.

Subcommands: solve-ne, solve-spe, compare, regimes, verify, simulate. All read
a scenario file; numeric output uses 9 significant digits so repeated runs are
byte-identical. Exit codes: 0 success, 1 input error, 2 boundary parameters
handled by a fallback, 3 verification failure or internal inconsistency.
"""

from __future__ import annotations

import argparse
import sys
from typing import Callable, Optional, Sequence

from .analysis import InternalInconsistency, compare_games, regime_sweep, write_sweep_csv
from .learning import SimulationConfig, StateDistribution, run_simulation, state_distribution, write_trace_csv
from .model import EffortVector
from .normalform import BoundaryParameters, build_attacker_lp, solve_ne
from .oracle import SimplexIterationLimit, simplex_solve, verify_ne, verify_spe
from .scenario import Scenario, load_scenario
from .sequential import solve_spe

_NO_VULNERABLE = "no vulnerable facilities; no attack"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit 1 on bad usage, not argparse's 2
        raise _UsageError(message)


def _fmt(x: float) -> str:
    return format(x, ".9g")


def _pairs(items) -> str:
    return " ".join(f"{key}={_fmt(value)}" for key, value in items)


def _emit(args: argparse.Namespace, lines: list[str]) -> None:
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if getattr(args, "out", None):
        with open(args.out, "w", newline="") as fh:
            fh.write(text)


def _write_csv(args: argparse.Namespace, write: Callable) -> None:
    if getattr(args, "out", None):
        with open(args.out, "w", newline="") as fh:
            write(fh)
    else:
        write(sys.stdout)


def _lp_report(scenario: Scenario) -> list[str]:
    lp = build_attacker_lp(scenario.profile, scenario.params)
    sol = simplex_solve(lp)
    if sol.status != "optimal":
        return [f"lp_status: {sol.status}"]
    sigmas = [
        (label.removeprefix("sigma_"), value)
        for label, value in sol.assignment.items()
        if label.startswith("sigma_")
    ]
    return [f"lp_value: {_fmt(sol.value)}", f"attack: {_pairs(sigmas)}"]


def _cmd_solve_ne(scenario: Scenario, args: argparse.Namespace) -> int:
    try:
        eq = solve_ne(scenario.profile, scenario.params)
    except BoundaryParameters:
        lines = ["regime: boundary",
                 "note: parameters on a regime boundary; reporting the attacker LP optimum"]
        _emit(args, lines + _lp_report(scenario))
        return 2
    lines = [f"regime: {eq.regime.label}"]
    if eq.regime.index == 0:
        lines.append(_NO_VULNERABLE)
    lines += [
        f"effort: {_pairs(eq.effort.efforts)}",
        f"attack: {_pairs(eq.attack.facility_probs)} none={_fmt(eq.attack.no_attack)}",
        f"Ud: {_fmt(eq.defender_utility)}",
        f"Ua: {_fmt(eq.attacker_utility)}",
    ]
    _emit(args, lines)
    return 0


def _cmd_solve_spe(scenario: Scenario, args: argparse.Namespace) -> int:
    try:
        out = solve_spe(scenario.profile, scenario.params)
    except BoundaryParameters:
        _emit(args, ["regime: boundary",
                     "note: parameters on a regime boundary; no closed-form commitment solution"])
        return 2
    lines = [f"regime: {out.regime.label}"]
    if out.regime.index == 0:
        lines.append(_NO_VULNERABLE)
    lines.append(f"deterred: {'yes' if out.on_path.deterred else 'no'}")
    lines.append(f"effort: {_pairs(out.effort.efforts)}")
    if not out.on_path.deterred:
        lines.append(f"admissible: {' '.join(out.on_path.admissible)}")
    witness = out.on_path.witness
    lines += [
        f"attack: {_pairs(witness.facility_probs)} none={_fmt(witness.no_attack)}",
        f"Uds: {_fmt(out.defender_utility)}",
        f"Uas: {_fmt(out.attacker_utility)}",
    ]
    _emit(args, lines)
    return 0


def _cmd_compare(scenario: Scenario, args: argparse.Namespace) -> int:
    try:
        cmp = compare_games(scenario.profile, scenario.params)
    except BoundaryParameters as err:
        _emit(args, ["region: boundary", f"note: {err}"])
        return 2
    lines = [
        f"region: {cmp.region.value}, gap: {_fmt(cmp.utility_gap)}",
        f"Ud: {_fmt(cmp.ne.defender_utility)}",
        f"Uds: {_fmt(cmp.spe.defender_utility)}",
        f"Ua: {_fmt(cmp.ne.attacker_utility)}",
        f"Uas: {_fmt(cmp.spe.attacker_utility)}",
        f"advantage: {'yes' if cmp.first_mover_advantage else 'no'}",
    ]
    _emit(args, lines)
    return 0


def _parse_grid(text: str):
    try:
        ca_part, cd_part = text.split(",")
        ca0, ca1, n = ca_part.split(":")
        cd0, cd1, m = cd_part.split(":")
        return (float(ca0), float(ca1)), (float(cd0), float(cd1)), (int(n), int(m))
    except ValueError:
        raise _UsageError(f"bad --grid {text!r}; expected ca0:ca1:n,cd0:cd1:m") from None


def _cmd_regimes(scenario: Scenario, args: argparse.Namespace) -> int:
    ca_range, cd_range, steps = _parse_grid(args.grid)
    cells = regime_sweep(scenario.profile, ca_range, cd_range, steps)
    _write_csv(args, lambda fh: write_sweep_csv(cells, fh))
    return 0


def _cmd_verify(scenario: Scenario, args: argparse.Namespace) -> int:
    profile, params = scenario.profile, scenario.params
    lp_sol = simplex_solve(build_attacker_lp(profile, params))
    try:
        ne = solve_ne(profile, params)
        spe = solve_spe(profile, params)
    except BoundaryParameters:
        lines = ["note: parameters on a regime boundary; closed-form checks skipped"]
        lines += _lp_report(scenario)
        _emit(args, lines)
        return 2

    lines: list[str] = []
    effort = ne.effort
    claimed_spe_ud = spe.defender_utility
    if args.perturb:
        lines.append(f"note: perturbing candidate solutions by {_fmt(args.perturb)}")
        target = [fac for fac, ce in profile.facilities if ce > profile.baseline_cost][-1]
        bumped = effort.as_dict()
        bumped[target] = min(1.0, bumped[target] + args.perturb)
        effort = EffortVector.over(profile, bumped)
        claimed_spe_ud += args.perturb

    ok = True
    closed = ne.attacker_utility + params.defense_cost * ne.effort.total
    if lp_sol.status != "optimal":
        lines.append(f"check lp: FAILED -- simplex status {lp_sol.status}")
        ok = False
    else:
        diff = abs(closed - lp_sol.value)
        good = diff <= 1e-8
        ok = ok and good
        lines.append(
            f"check lp: closed-form value {_fmt(closed)}, simplex {_fmt(lp_sol.value)}"
            f" -- {'ok' if good else 'FAILED'}"
        )

    ne_res = verify_ne(profile, params, effort, ne.attack, eps=args.eps)
    ok = ok and ne_res.ok
    lines.append(
        f"check ne: mutual best responses within {_fmt(args.eps)}"
        f" -- {'ok' if ne_res.ok else 'FAILED -- ' + ne_res.failures[0]}"
    )

    spe_res = verify_spe(profile, params, spe.effort, claimed_spe_ud, grid_step=args.grid_step)
    ok = ok and spe_res.ok
    lines.append(
        f"check spe: grid step {_fmt(args.grid_step)} against the committed effort"
        f" -- {'ok' if spe_res.ok else 'FAILED -- ' + spe_res.failures[0]}"
    )

    lines.append("all checks passed" if ok else "verification failed")
    _emit(args, lines)
    return 0 if ok else 3


def _cmd_simulate(scenario: Scenario, args: argparse.Namespace) -> int:
    if scenario.learning is None or scenario.network is None:
        print("error: scenario has no [learning] section", file=sys.stderr)
        return 1
    settings = scenario.learning
    horizon = args.horizon if args.horizon is not None else settings.horizon
    token = settings.true_state
    if token == "none":
        dist = StateDistribution.point(None)
    elif token in ("ne", "spe"):
        solver = solve_ne if token == "ne" else solve_spe
        try:
            dist = state_distribution(solver(scenario.profile, scenario.params))
        except BoundaryParameters as err:
            print(f"error: cannot derive the state distribution: {err}", file=sys.stderr)
            return 2
    else:
        dist = StateDistribution.point(token)
    config = SimulationConfig(
        scenario.network, settings.prior, dist, settings.noise_half_width, horizon, args.seed
    )
    trace = run_simulation(config)
    _write_csv(args, lambda fh: write_trace_csv(trace, fh))
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="facsec", description="Facility-security game solvers")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name: str, handler, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--scenario", required=True, help="scenario file path")
        p.add_argument("--out", help="also write the output to this file")
        p.set_defaults(handler=handler)
        return p

    command("solve-ne", _cmd_solve_ne, "closed-form simultaneous-game equilibrium")
    command("solve-spe", _cmd_solve_spe, "closed-form sequential-game outcome")
    command("compare", _cmd_compare, "cost region and first-mover utility gap")

    regimes = command("regimes", _cmd_regimes, "regime sweep over a parameter grid")
    regimes.add_argument("--grid", required=True, help='grid "ca0:ca1:n,cd0:cd1:m" over (ca, cd)')

    verify = command("verify", _cmd_verify, "oracle checks: LP value, NE epsilon, SPE grid")
    verify.add_argument("--eps", type=float, default=1e-9, help="equilibrium tolerance")
    verify.add_argument("--grid-step", type=float, default=1e-3, help="SPE grid resolution")
    verify.add_argument("--perturb", type=float, default=0.0,
                        help="shift the candidate solutions to exercise the checks")

    simulate = command("simulate", _cmd_simulate, "repeated routing simulation trace")
    simulate.add_argument("--seed", type=int, default=0, help="RNG seed")
    simulate.add_argument("--horizon", type=int, help="override the scenario horizon")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    try:
        scenario = load_scenario(args.scenario)
        return args.handler(scenario, args)
    except _UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (InternalInconsistency, SimplexIterationLimit) as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
