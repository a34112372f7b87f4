"""Repeated routing with Bayesian updates about which edge is compromised.

Each stage, travelers route according to the belief-expected latencies, then
observe noisy realized costs on the edges they actually used and update the
belief by Bayes' rule. Uniform noise makes the update a support check: a state
survives iff every observation is within the noise band of that state's
prediction at the realized loads.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .routing import (
    AffineLatency,
    FlowAssignment,
    RoutedNetwork,
    wardrop_equilibrium,
)

State = Optional[str]  # an edge id, or None for the intact network

_LOAD_EPS = 1e-9  # edges loaded above this are observed
_SUPPORT_SLACK = 1e-12


class LearningError(ValueError):
    """Invalid belief, prior, or simulation configuration."""


def _validated_probs(
    pairs: tuple[tuple[State, float], ...], what: str
) -> tuple[tuple[State, float], ...]:
    seen = set()
    for state, p in pairs:
        if state in seen:
            raise LearningError(f"duplicate state {state!r} in {what}")
        seen.add(state)
        if p < 0.0:
            raise LearningError(f"negative probability {p!r} for state {state!r} in {what}")
    total = sum(p for _, p in pairs)
    if abs(total - 1.0) > 1e-12:
        raise LearningError(f"{what} sums to {total!r}, expected 1")
    return pairs


@dataclass(frozen=True)
class StateDistribution:
    """Distribution of the realized post-attack state (edge id or None)."""

    probs: tuple[tuple[State, float], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "probs", _validated_probs(tuple(self.probs), "state distribution"))

    @classmethod
    def point(cls, state: State) -> "StateDistribution":
        return cls(((state, 1.0),))

    def prob(self, state: State) -> float:
        for s, p in self.probs:
            if s == state:
                return p
        return 0.0

    def as_dict(self) -> dict[State, float]:
        return dict(self.probs)

    def sample(self, rng: np.random.Generator) -> State:
        u = float(rng.random())
        acc = 0.0
        for state, p in self.probs:
            acc += p
            if u < acc:
                return state
        return self.probs[-1][0]


@dataclass(frozen=True)
class Belief:
    """Travelers' common belief over the post-attack state."""

    probs: tuple[tuple[State, float], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "probs", _validated_probs(tuple(self.probs), "belief"))

    def prob(self, state: State) -> float:
        for s, p in self.probs:
            if s == state:
                return p
        return 0.0

    def as_dict(self) -> dict[State, float]:
        return dict(self.probs)

    @property
    def states(self) -> tuple[State, ...]:
        return tuple(s for s, _ in self.probs)


def state_distribution(eq) -> StateDistribution:
    """Realized-state distribution induced by an equilibrium of either game:
    p(e) = (attack prob on e) * (1 - effort on e), remainder on the intact state."""
    attack = getattr(eq, "attack", None)
    if attack is None:
        attack = eq.on_path.witness
    pairs: list[tuple[State, float]] = []
    for fac, sig in attack.facility_probs:
        pairs.append((fac, sig * (1.0 - eq.effort.get(fac))))
    pairs.append((None, 1.0 - sum(p for _, p in pairs)))
    return StateDistribution(tuple(pairs))


def _nominal_latencies(network: RoutedNetwork) -> dict[str, AffineLatency]:
    return {e.edge_id: e.nominal for e in network.edges}


def _state_latencies(network: RoutedNetwork, state: State) -> dict[str, AffineLatency]:
    # states that do not name a network edge leave every edge nominal
    lat = _nominal_latencies(network)
    if state is not None and state in lat:
        for e in network.edges:
            if e.edge_id == state:
                lat[state] = e.compromised
    return lat


def belief_mixed_latencies(network: RoutedNetwork, belief: Belief) -> dict[str, AffineLatency]:
    """Belief-expected latency per edge; mixtures of affine functions stay affine."""
    out = {}
    for edge in network.edges:
        mass = belief.prob(edge.edge_id)
        out[edge.edge_id] = AffineLatency(
            mass * edge.compromised.slope + (1.0 - mass) * edge.nominal.slope,
            mass * edge.compromised.intercept + (1.0 - mass) * edge.nominal.intercept,
        )
    return out


@dataclass(frozen=True)
class StageResult:
    flow: FlowAssignment
    observations: dict[str, float]  # realized cost per observed edge
    posterior: Belief
    degenerate: bool  # every state ruled out; belief kept as-is


def stage_step(
    belief: Belief,
    network: RoutedNetwork,
    noise_half_width: float,
    realized_state: State,
    rng: np.random.Generator,
) -> StageResult:
    """One stage: route on the belief, observe used edges, update by Bayes.

    Observed costs are true-state latency at the realized load plus uniform
    noise on [-b, b], drawn independently per observed edge. States whose
    prediction misses an observation by more than b are eliminated; if no
    state survives, the belief is kept and the stage flagged degenerate. When
    nothing is eliminated the belief object is returned unchanged (the
    all-ones likelihood cancels in the normalization).
    """
    if noise_half_width <= 0.0:
        raise LearningError(f"noise half-width must be positive, got {noise_half_width!r}")
    flow = wardrop_equilibrium(network, belief_mixed_latencies(network, belief))
    true_lat = _state_latencies(network, realized_state)
    observations: dict[str, float] = {}
    for eid in network.edge_ids:
        load = flow.edge_loads[eid]
        if load > _LOAD_EPS:
            noise = float(rng.uniform(-noise_half_width, noise_half_width))
            observations[eid] = true_lat[eid](load) + noise

    band = noise_half_width + _SUPPORT_SLACK
    masses: list[float] = []
    eliminated = False
    for state, theta in belief.probs:
        lat = _state_latencies(network, state)
        survives = all(
            abs(obs - lat[eid](flow.edge_loads[eid])) <= band
            for eid, obs in observations.items()
        )
        masses.append(theta if survives else 0.0)
        if not survives and theta > 0.0:
            eliminated = True
    if not eliminated:
        return StageResult(flow, observations, belief, False)
    total = sum(masses)
    if total <= 0.0:
        return StageResult(flow, observations, belief, True)
    posterior = Belief(tuple((s, m / total) for (s, _), m in zip(belief.probs, masses)))
    return StageResult(flow, observations, posterior, False)


@dataclass(frozen=True)
class SimulationConfig:
    network: RoutedNetwork
    prior: Belief
    state_dist: StateDistribution
    noise_half_width: float
    horizon: int
    seed: int


@dataclass(frozen=True)
class StageRecord:
    stage: int  # 1-based
    belief_before: Belief
    flow: FlowAssignment
    observations: dict[str, float]
    belief_after: Belief
    degenerate: bool


@dataclass(frozen=True)
class LearningTrace:
    config: SimulationConfig
    realized_state: State
    records: tuple[StageRecord, ...]


def run_simulation(config: SimulationConfig) -> LearningTrace:
    """Sample the realized state once, then play ``horizon`` stages.

    The prior must not rule out any state the distribution can realize.
    Deterministic for a fixed config and seed.
    """
    if config.horizon < 1:
        raise LearningError(f"horizon must be at least 1, got {config.horizon!r}")
    for state, p in config.state_dist.probs:
        if p > 0.0 and config.prior.prob(state) <= 0.0:
            raise LearningError(f"prior rules out realizable state {state!r}")
    rng = np.random.default_rng(config.seed)
    realized = config.state_dist.sample(rng)
    belief = config.prior
    records: list[StageRecord] = []
    for t in range(1, config.horizon + 1):
        step = stage_step(belief, config.network, config.noise_half_width, realized, rng)
        records.append(
            StageRecord(t, belief, step.flow, step.observations, step.posterior, step.degenerate)
        )
        belief = step.posterior
    return LearningTrace(config, realized, tuple(records))


def _state_label(state: State) -> str:
    return "none" if state is None else state


def write_trace_csv(trace: LearningTrace, dest) -> None:
    """Serialize a trace to ``dest`` (path or writable text file).

    One row per stage with the post-update belief; unobserved edges leave
    their observation field empty. The seed and realized state go into a
    comment line above the header so reruns are diffable.
    """
    if not hasattr(dest, "write"):
        with open(dest, "w", newline="") as fh:
            write_trace_csv(trace, fh)
        return
    network = trace.config.network
    states = trace.config.prior.states
    dest.write(
        f"# seed={trace.config.seed} true_state={_state_label(trace.realized_state)}\n"
    )
    writer = csv.writer(dest, lineterminator="\n")
    header = (
        ["t"]
        + [f"theta_{'empty' if s is None else s}" for s in states]
        + [f"q_{rid}" for rid in network.route_ids]
        + [f"obs_{eid}" for eid in network.edge_ids]
        + ["degenerate"]
    )
    writer.writerow(header)

    def num(x: float) -> str:
        return format(x, ".9g")

    for rec in trace.records:
        row = [str(rec.stage)]
        row += [num(rec.belief_after.prob(s)) for s in states]
        row += [num(rec.flow.route_flows[rid]) for rid in network.route_ids]
        row += [
            num(rec.observations[eid]) if eid in rec.observations else ""
            for eid in network.edge_ids
        ]
        row.append("1" if rec.degenerate else "0")
        writer.writerow(row)
