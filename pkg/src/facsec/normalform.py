"""Equilibria of the simultaneous-move game, in closed form.

The (attack cost, defense cost) quadrant splits into 2K+1 regimes, K being the
number of distinct above-baseline post-attack cost levels. In Type I regimes
the defender keeps every sufficiently profitable target exactly at the
attacker's indifference point and the attacker randomizes below everyone's
defense-indifference probability, leaving some no-attack mass. In Type II
regimes defense is too expensive for that: the attacker attacks with
probability one and the defender equalizes the top cost levels downward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .model import (
    AttackDistribution,
    CostParams,
    EffortVector,
    EmptyVulnerableUniverse,
    FacilityId,
    FacilityPartition,
    FacilityProfile,
    NotInIncreasedSet,
    partition_by_cost,
)


class BoundaryParameters(ValueError):
    """Cost parameters sit on a regime boundary; closed forms decline (use the LP)."""


class RegimeKind(Enum):
    TYPE_I = "I"
    TYPE_II = "II"
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class NeRegime:
    kind: RegimeKind
    index: Optional[int]  # i for Type I (0..K), j for Type II (1..K), None for boundary

    @property
    def label(self) -> str:
        if self.kind is RegimeKind.BOUNDARY:
            return "boundary"
        return f"{self.kind.value}-{self.index}"


class ResponseLevel(Enum):
    """Defender's per-facility best response to an attack distribution."""

    ZERO = "zero"
    FULL = "full"
    FREE = "free"


@dataclass(frozen=True)
class AttackSetBounds:
    """Description of the full equilibrium attack set.

    ``pinned`` facilities carry exactly their listed probability in every
    equilibrium; ``free`` facilities may take any value in [0, their bound in
    ``upper``] so long as they jointly absorb ``free_mass``.
    """

    pinned: tuple[tuple[FacilityId, float], ...]
    free: tuple[FacilityId, ...]
    free_mass: float
    upper: tuple[tuple[FacilityId, float], ...]


@dataclass(frozen=True)
class NormalFormEquilibrium:
    regime: NeRegime
    effort: EffortVector
    attack: AttackDistribution  # canonical witness from the attack set
    attack_bounds: AttackSetBounds
    defender_utility: float
    attacker_utility: float


def threshold_attack_prob(profile: FacilityProfile, params: CostParams, fac: FacilityId) -> float:
    """Attack probability on ``fac`` above which paying for defense breaks even:
    defense_cost / (Ce - C0)."""
    ce = profile.post_attack_cost(fac)
    if not ce > profile.baseline_cost:
        raise NotInIncreasedSet(f"{fac!r} has no post-attack cost increase")
    return params.defense_cost / (ce - profile.baseline_cost)


def _cumulative_ratio(partition: FacilityPartition) -> list[float]:
    """Prefix sums of E(k)/(C(k)-C0), one entry per level."""
    out, acc = [], 0.0
    for level in partition.levels:
        acc += len(level.members) / (level.cost - partition.baseline_cost)
        out.append(acc)
    return out


def _bracket(partition: FacilityPartition, attack_cost: float) -> int:
    """Number of levels whose full cost increase beats the attack cost (the regime index i)."""
    return sum(1 for c in partition.level_costs if c - partition.baseline_cost > attack_cost)


def cd_threshold_bar(profile: FacilityProfile, attack_cost: float) -> float:
    """Defense cost below which every vulnerable facility gets protected in equilibrium.

    Equals the harmonic-style aggregate (sum over vulnerable e of 1/(Ce-C0))^-1.
    Raises EmptyVulnerableUniverse when the attack cost leaves nothing vulnerable.
    """
    partition = partition_by_cost(profile)
    i = _bracket(partition, attack_cost)
    if i == 0:
        raise EmptyVulnerableUniverse(
            f"attack cost {attack_cost!r} leaves no vulnerable facility"
        )
    return 1.0 / _cumulative_ratio(partition)[i - 1]


def _close(x: float, b: float, tol: float) -> bool:
    return abs(x - b) <= tol * max(1.0, abs(x), abs(b))


def classify_regime_ne(
    profile: FacilityProfile, params: CostParams, tol: float = 1e-12
) -> NeRegime:
    """Locate (attack_cost, defense_cost) in the regime diagram.

    Points within ``tol`` (relative) of a line actually separating two regimes
    come back as boundary; band constants that do not separate anything at the
    given attack cost are ignored.
    """
    partition = partition_by_cost(profile)
    ca, cd = params.attack_cost, params.defense_cost
    costs = partition.level_costs
    c0 = partition.baseline_cost
    bands = [1.0 / s for s in _cumulative_ratio(partition)]  # decreasing in the index

    for k in range(1, partition.K + 1):
        edge = costs[k - 1] - c0
        if _close(ca, edge, tol):
            # the k-th vertical line only separates regimes below the (k-1)-th band
            if k == 1 or cd < bands[k - 2] or _close(cd, bands[k - 2], tol):
                return NeRegime(RegimeKind.BOUNDARY, None)

    i = _bracket(partition, ca)
    for j in range(1, i + 1):
        if _close(cd, bands[j - 1], tol):
            return NeRegime(RegimeKind.BOUNDARY, None)
    if i == 0:
        return NeRegime(RegimeKind.TYPE_I, 0)
    if cd < bands[i - 1]:
        return NeRegime(RegimeKind.TYPE_I, i)
    for j in range(1, i + 1):
        upper = math.inf if j == 1 else bands[j - 2]
        if bands[j - 1] < cd < upper:
            return NeRegime(RegimeKind.TYPE_II, j)
    return NeRegime(RegimeKind.BOUNDARY, None)  # unreachable away from boundaries


def ne_utilities(
    profile: FacilityProfile, params: CostParams, regime: NeRegime
) -> tuple[float, float]:
    """Equilibrium (defender, attacker) utilities for a non-boundary regime."""
    partition = partition_by_cost(profile)
    c0, cd = partition.baseline_cost, params.defense_cost
    costs, sizes = partition.level_costs, partition.level_sizes
    if regime.kind is RegimeKind.TYPE_I:
        i = regime.index or 0
        return -c0 - cd * sum(sizes[:i]), c0
    if regime.kind is RegimeKind.TYPE_II:
        j = regime.index
        cj = costs[j - 1]
        ud = -cj - sum(
            (costs[k] - cj) * cd * sizes[k] / (costs[k] - c0) for k in range(j - 1)
        )
        return ud, cj - params.attack_cost
    raise BoundaryParameters("no closed-form utilities on a regime boundary")


def solve_ne(profile: FacilityProfile, params: CostParams) -> NormalFormEquilibrium:
    """Closed-form equilibrium of the simultaneous game.

    Raises BoundaryParameters when the classification lands on a boundary; the
    oracle LP still solves those points.
    """
    regime = classify_regime_ne(profile, params)
    if regime.kind is RegimeKind.BOUNDARY:
        raise BoundaryParameters(
            f"(attack_cost={params.attack_cost!r}, defense_cost={params.defense_cost!r})"
            " lies on a regime boundary"
        )
    partition = partition_by_cost(profile)
    c0, ca, cd = partition.baseline_cost, params.attack_cost, params.defense_cost
    costs, sizes = partition.level_costs, partition.level_sizes

    effort: dict[FacilityId, float] = {}
    attack: dict[FacilityId, float] = {}
    if regime.kind is RegimeKind.TYPE_I:
        i = regime.index
        for k in range(i):
            ck = costs[k]
            for fac in partition.levels[k].members:
                effort[fac] = (ck - ca - c0) / (ck - c0)
                attack[fac] = cd / (ck - c0)
        pinned = tuple((fac, attack[fac]) for fac in partition.members_up_to(i))
        bounds = AttackSetBounds(pinned, (), 0.0, pinned)
        dist = AttackDistribution.over(profile, attack)
    else:
        j = regime.index
        cj = costs[j - 1]
        for k in range(j - 1):
            ck = costs[k]
            for fac in partition.levels[k].members:
                effort[fac] = (ck - cj) / (ck - c0)
                attack[fac] = cd / (ck - c0)
        residual = 1.0 - sum(attack.values())
        free = partition.levels[j - 1].members
        for fac in free:
            attack[fac] = residual / len(free)
        pinned = tuple((fac, cd / (costs[k] - c0))
                       for k in range(j - 1) for fac in partition.levels[k].members)
        upper = pinned + tuple((fac, cd / (cj - c0)) for fac in free)
        bounds = AttackSetBounds(pinned, free, residual, upper)
        dist = AttackDistribution.over(profile, attack, no_attack=0.0)

    ud, ua = ne_utilities(profile, params, regime)
    return NormalFormEquilibrium(
        regime, EffortVector.over(profile, effort), dist, bounds, ud, ua
    )


def defender_best_response(
    profile: FacilityProfile,
    params: CostParams,
    attack: AttackDistribution,
    tol: float = 1e-12,
) -> dict[FacilityId, ResponseLevel]:
    """Per-facility defender best response to an attack distribution.

    Full effort where the attack probability exceeds the break-even threshold,
    none below it, and anything goes at (numerical) equality. Facilities whose
    post-attack cost is not above baseline never deserve effort.
    """
    out: dict[FacilityId, ResponseLevel] = {}
    for fac, ce in profile.facilities:
        if not ce > profile.baseline_cost:
            out[fac] = ResponseLevel.ZERO
            continue
        bar = threshold_attack_prob(profile, params, fac)
        sig = attack.prob(fac)
        if _close(sig, bar, tol):
            out[fac] = ResponseLevel.FREE
        elif sig > bar:
            out[fac] = ResponseLevel.FULL
        else:
            out[fac] = ResponseLevel.ZERO
    return out


def build_attacker_lp(profile: FacilityProfile, params: CostParams):
    """The attacker-side LP of the equivalent zero-sum game.

    Variables: one attack probability per increased-cost facility, the
    no-attack probability, and one auxiliary value per facility capturing the
    lower envelope of the defender's two pure reactions. Maximizing the sum of
    envelopes plus baseline-weighted no-attack mass over the probability
    simplex yields the attacker's equilibrium strategies as the optima.
    """
    from .oracle import LinearProgram

    increased = [fac for fac, ce in profile.facilities if ce > profile.baseline_cost]
    if not increased:
        raise EmptyVulnerableUniverse("no facility has post-attack cost above baseline")
    c0, ca, cd = profile.baseline_cost, params.attack_cost, params.defense_cost
    n = len(increased)
    labels = [f"sigma_{fac}" for fac in increased] + ["sigma_none"] + [
        f"v_{fac}" for fac in increased
    ]
    width = 2 * n + 1
    objective = [0.0] * width
    objective[n] = c0
    for t in range(n):
        objective[n + 1 + t] = 1.0

    a_ub, b_ub = [], []
    for t, fac in enumerate(increased):
        ce = profile.post_attack_cost(fac)
        secured = [0.0] * width  # v_e <= sigma_e (C0 - ca) + cd
        secured[t] = -(c0 - ca)
        secured[n + 1 + t] = 1.0
        a_ub.append(tuple(secured))
        b_ub.append(cd)
        exposed = [0.0] * width  # v_e <= sigma_e (Ce - ca)
        exposed[t] = -(ce - ca)
        exposed[n + 1 + t] = 1.0
        a_ub.append(tuple(exposed))
        b_ub.append(0.0)

    simplex_row = [1.0] * (n + 1) + [0.0] * n
    bounds = [(0.0, None)] * (n + 1) + [(None, None)] * n
    return LinearProgram(
        tuple(objective),
        tuple(a_ub),
        tuple(b_ub),
        (tuple(simplex_row),),
        (1.0,),
        tuple(bounds),
        tuple(labels),
    )
