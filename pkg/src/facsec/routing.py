"""Wardrop equilibria on parallel-route networks with affine edge latencies.

Networks are a set of routes over shared edges; each edge carries a nominal
and a compromised affine latency. The equilibrium is the minimizer of the
Beckmann potential, found by solving the equal-cost linear system on an
active route set and dropping routes whose flow goes negative.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Optional

import numpy as np

_FLOW_TOL = 1e-12
_COST_TOL = 1e-9


class NetworkError(ValueError):
    """Malformed network description or unsolvable routing instance."""


@dataclass(frozen=True)
class AffineLatency:
    slope: float
    intercept: float

    def __call__(self, load: float) -> float:
        return self.slope * load + self.intercept


@dataclass(frozen=True)
class Edge:
    edge_id: str
    nominal: AffineLatency
    compromised: AffineLatency


@dataclass(frozen=True)
class Route:
    route_id: str
    edges: tuple[str, ...]


@dataclass(frozen=True)
class RoutedNetwork:
    """Parallel routes over shared edges with inelastic demand.

    Compromised latencies must dominate nominal ones pointwise on [0, demand];
    for affine functions checking both endpoints suffices.
    """

    edges: tuple[Edge, ...]
    routes: tuple[Route, ...]
    demand: float

    def __post_init__(self) -> None:
        if not self.routes:
            raise NetworkError("need at least one route")
        if self.demand < 0.0:
            raise NetworkError(f"negative demand {self.demand!r}")
        ids = [e.edge_id for e in self.edges]
        if len(set(ids)) != len(ids):
            raise NetworkError("duplicate edge ids")
        rids = [r.route_id for r in self.routes]
        if len(set(rids)) != len(rids):
            raise NetworkError("duplicate route ids")
        known = set(ids)
        for route in self.routes:
            if not route.edges:
                raise NetworkError(f"route {route.route_id!r} has no edges")
            missing = [e for e in route.edges if e not in known]
            if missing:
                raise NetworkError(f"route {route.route_id!r} uses unknown edges {missing}")
        for edge in self.edges:
            for lat in (edge.nominal, edge.compromised):
                if lat.slope < 0.0 or lat.intercept < 0.0:
                    raise NetworkError(f"edge {edge.edge_id!r} has negative latency coefficients")
            for w in (0.0, self.demand):
                if edge.compromised(w) < edge.nominal(w) - 1e-12:
                    raise NetworkError(
                        f"edge {edge.edge_id!r}: compromised latency below nominal at load {w}"
                    )

    @cached_property
    def _edges_by_id(self) -> dict[str, Edge]:
        return {e.edge_id: e for e in self.edges}

    @property
    def edge_ids(self) -> tuple[str, ...]:
        return tuple(e.edge_id for e in self.edges)

    @property
    def route_ids(self) -> tuple[str, ...]:
        return tuple(r.route_id for r in self.routes)


@dataclass(frozen=True)
class FlowAssignment:
    route_flows: dict[str, float]
    edge_loads: dict[str, float]
    route_costs: dict[str, float]


def latencies_for_state(
    network: RoutedNetwork, state: Optional[str]
) -> dict[str, AffineLatency]:
    """Effective per-edge latency when ``state`` (an edge id or None) is compromised."""
    if state is not None and state not in network._edges_by_id:
        raise NetworkError(f"unknown state {state!r}")
    return {
        e.edge_id: e.compromised if e.edge_id == state else e.nominal
        for e in network.edges
    }


def _solve_active(
    routes: tuple[Route, ...],
    latencies: Mapping[str, AffineLatency],
    demand: float,
    active: list[int],
) -> Optional[np.ndarray]:
    # equal-cost system: route costs all equal mu, flows sum to demand
    m = len(active)
    a = np.zeros((m + 1, m + 1))
    b = np.zeros(m + 1)
    for i, ri in enumerate(active):
        edges_i = set(routes[ri].edges)
        for j, rj in enumerate(active):
            a[i, j] = sum(latencies[e].slope for e in edges_i & set(routes[rj].edges))
        a[i, m] = -1.0
        b[i] = -sum(latencies[e].intercept for e in routes[ri].edges)
    a[m, :m] = 1.0
    b[m] = demand
    try:
        sol = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(a, b, rcond=None)[0]
    if not np.all(np.isfinite(sol)) or not np.allclose(a @ sol, b, atol=1e-7, rtol=0.0):
        return None
    return sol


def _assemble(
    network: RoutedNetwork,
    latencies: Mapping[str, AffineLatency],
    flows: dict[str, float],
) -> FlowAssignment:
    loads = {eid: 0.0 for eid in network.edge_ids}
    for route in network.routes:
        for e in route.edges:
            loads[e] += flows[route.route_id]
    costs = {
        route.route_id: sum(latencies[e](loads[e]) for e in route.edges)
        for route in network.routes
    }
    return FlowAssignment(flows, loads, costs)


def _wardrop_ok(assign: FlowAssignment) -> bool:
    cheapest = min(assign.route_costs.values())
    return all(
        assign.route_costs[rid] <= cheapest + _COST_TOL
        for rid, q in assign.route_flows.items()
        if q > _COST_TOL
    )


def wardrop_equilibrium(
    network: RoutedNetwork, latencies: Mapping[str, AffineLatency]
) -> FlowAssignment:
    """Equilibrium flow assignment under the given effective latencies.

    Every used route's cost is within 1e-9 of the cheapest route's cost. If
    the active-set iteration fails to produce such a flow (degenerate slopes),
    falls back to enumerating route subsets, largest first.
    """
    missing = [e for r in network.routes for e in r.edges if e not in latencies]
    if missing:
        raise NetworkError(f"latencies missing for edges {sorted(set(missing))}")
    routes = network.routes
    if network.demand <= 0.0:
        return _assemble(network, latencies, {r.route_id: 0.0 for r in routes})

    def finish(active: list[int], q: np.ndarray) -> Optional[FlowAssignment]:
        flows = {r.route_id: 0.0 for r in routes}
        for idx, ri in enumerate(active):
            flows[routes[ri].route_id] = max(0.0, float(q[idx]))
        assign = _assemble(network, latencies, flows)
        return assign if _wardrop_ok(assign) else None

    active = list(range(len(routes)))
    while active:
        sol = _solve_active(routes, latencies, network.demand, active)
        if sol is None:
            break
        q = sol[:-1]
        worst = int(np.argmin(q))
        if q[worst] >= -_FLOW_TOL:
            assign = finish(active, q)
            if assign is not None:
                return assign
            break
        active.pop(worst)

    for size in range(len(routes), 0, -1):
        for combo in itertools.combinations(range(len(routes)), size):
            sol = _solve_active(routes, latencies, network.demand, list(combo))
            if sol is None:
                continue
            q = sol[:-1]
            if np.min(q) < -_FLOW_TOL:
                continue
            assign = finish(list(combo), q)
            if assign is not None:
                return assign
    raise NetworkError("no Wardrop equilibrium found; check the latency coefficients")


def beckmann_potential(
    latencies: Mapping[str, AffineLatency], edge_loads: Mapping[str, float]
) -> float:
    """Convex potential whose minimizer over feasible flows is the equilibrium."""
    return sum(
        latencies[e].slope * w * w / 2.0 + latencies[e].intercept * w
        for e, w in edge_loads.items()
    )


def usage_cost_for_state(network: RoutedNetwork, state: Optional[str]) -> float:
    """Average traveler cost at equilibrium with ``state`` compromised.

    Interior equilibria make this the common route cost; at corners it is the
    demand-weighted average over used routes.
    """
    assign = wardrop_equilibrium(network, latencies_for_state(network, state))
    if network.demand > 0.0:
        total = sum(
            assign.route_flows[rid] * assign.route_costs[rid]
            for rid in assign.route_flows
        )
        return total / network.demand
    return min(assign.route_costs.values())
