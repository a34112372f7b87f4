"""Subgame-perfect outcomes when the defender commits first.

Commitment changes the picture through one curve: a strictly increasing
defense-cost threshold (as a function of the attack cost) below which the
defender deters every attack by meeting the attacker's indifference effort on
each vulnerable facility, and above which the best the defender can do is the
simultaneous-game outcome with full-probability attacks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

from .model import (
    AttackDistribution,
    CostParams,
    EffortVector,
    FacilityId,
    FacilityProfile,
    NotInIncreasedSet,
    partition_by_cost,
    vulnerable_set,
)
from .normalform import BoundaryParameters, _bracket, _close, _cumulative_ratio

_EQ_TOL = 1e-12  # absolute tolerance for at-threshold comparisons


class OutOfDomain(ValueError):
    """Argument outside the function's domain (level indices or attack cost)."""


class NonpositiveDenominator(ValueError):
    """The requested threshold expression degenerates at these parameters."""


class BelowRange(ValueError):
    """Defense cost below the threshold curve's minimum; no inverse exists."""


class SpeRegimeKind(Enum):
    TYPE_I = "I~"
    TYPE_II = "II~"
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class SpeRegime:
    kind: SpeRegimeKind
    index: Optional[int]

    @property
    def label(self) -> str:
        if self.kind is SpeRegimeKind.BOUNDARY:
            return "boundary"
        return f"{self.kind.value}-{self.index}"


@dataclass(frozen=True)
class ForcedAttack:
    """Some vulnerable facility is under-protected: attack with probability one.

    ``support`` is the set of expected-usage-cost maximizers the attacker can
    randomize over.
    """

    support: tuple[FacilityId, ...]


@dataclass(frozen=True)
class DeterredMix:
    """Every vulnerable facility is protected to (at least) indifference.

    ``support`` holds the facilities at exactly the threshold effort; the
    attacker may mix between those and not attacking at all.
    """

    support: tuple[FacilityId, ...]


@dataclass(frozen=True)
class OnPathAttack:
    """Attack behavior on the equilibrium path of the sequential game."""

    deterred: bool
    admissible: tuple[FacilityId, ...]  # facilities an equilibrium attack may use
    witness: AttackDistribution


@dataclass(frozen=True)
class SpeOutcome:
    regime: SpeRegime
    effort: EffortVector
    on_path: OnPathAttack
    defender_utility: float
    attacker_utility: float


def threshold_effort(profile: FacilityProfile, attack_cost: float, fac: FacilityId) -> float:
    """Effort on ``fac`` that makes attacking it exactly as good as abstaining:
    (Ce - ca - C0)/(Ce - C0). Nonpositive values mean no effort is needed."""
    ce = profile.post_attack_cost(fac)
    if not ce > profile.baseline_cost:
        raise NotInIncreasedSet(f"{fac!r} has no post-attack cost increase")
    return (ce - attack_cost - profile.baseline_cost) / (ce - profile.baseline_cost)


def attacker_br_sequential(
    profile: FacilityProfile, params: CostParams, effort: EffortVector
) -> Union[ForcedAttack, DeterredMix]:
    """Attacker best response after observing the defender's effort.

    If every vulnerable facility is protected to at least its threshold
    effort, any mix over not attacking and the exactly-at-threshold facilities
    is a best response; otherwise attacking an expected-cost maximizer is
    strictly better than abstaining.
    """
    c0, ca = profile.baseline_cost, params.attack_cost
    vulnerable = vulnerable_set(profile, ca)
    if not vulnerable:
        return DeterredMix(())
    gaps = {fac: effort.get(fac) - threshold_effort(profile, ca, fac) for fac in vulnerable}
    if all(g >= -_EQ_TOL for g in gaps.values()):
        return DeterredMix(tuple(fac for fac in vulnerable if abs(gaps[fac]) <= _EQ_TOL))
    value = {
        fac: effort.get(fac) * c0 + (1.0 - effort.get(fac)) * profile.post_attack_cost(fac)
        for fac in vulnerable
    }
    top = max(value.values())
    return ForcedAttack(tuple(fac for fac in vulnerable if value[fac] >= top - _EQ_TOL))


def cd_ij(profile: FacilityProfile, attack_cost: float, i: int, j: int) -> float:
    """Defense cost at which deterring levels 1..i costs exactly as much as
    conceding an attack pinned down to level j.

    Defined for 1 <= j <= i <= K; raises NonpositiveDenominator where the
    expression degenerates (attack cost too large for the requested levels).
    """
    partition = partition_by_cost(profile)
    if not (1 <= j <= i <= partition.K):
        raise OutOfDomain(f"need 1 <= j <= i <= {partition.K}, got i={i}, j={j}")
    c0 = partition.baseline_cost
    costs, sizes = partition.level_costs, partition.level_sizes
    attack_ratio = sum(
        attack_cost * sizes[k] / (costs[k] - c0) for k in range(i)
    )
    if j == 1:
        den = sum(sizes[:i]) - attack_ratio
        num = costs[0] - c0
    else:
        cj = costs[j - 1]
        den = (
            (cj - c0) * _cumulative_ratio(partition)[j - 2]
            + sum(sizes[j - 1 : i])
            - attack_ratio
        )
        num = cj - c0
    if den <= 0.0:
        raise NonpositiveDenominator(f"cd_{i}{j} denominator {den!r} at attack cost {attack_cost!r}")
    return num / den


def cd_threshold_tilde(profile: FacilityProfile, attack_cost: float) -> float:
    """The deterrence/concession threshold curve, evaluated at ``attack_cost``.

    Strictly increasing on [0, C(1)-C0), equal to the full-protection
    threshold at 0, and diverging at the right end of its domain.
    """
    partition = partition_by_cost(profile)
    c0 = partition.baseline_cost
    if attack_cost < 0.0 or attack_cost >= partition.level_costs[0] - c0:
        raise OutOfDomain(
            f"attack cost {attack_cost!r} outside [0, {partition.level_costs[0] - c0!r})"
        )
    i = _bracket(partition, attack_cost)
    if i == 0:  # only possible at attack_cost == C(1)-C0, excluded above
        raise OutOfDomain(f"attack cost {attack_cost!r} leaves nothing vulnerable")
    sizes = partition.level_sizes
    s_i = _cumulative_ratio(partition)[i - 1]
    # concession level j grows with the attack cost within the bracket
    j = i
    upper = sizes[i - 1] / s_i
    while j > 1 and attack_cost >= upper:
        j -= 1
        upper += sizes[j - 1] / s_i
    return cd_ij(profile, attack_cost, i, j)


def cd_tilde_inverse(profile: FacilityProfile, defense_cost: float) -> float:
    """Attack cost at which the threshold curve reaches ``defense_cost``.

    Bisection against the strictly increasing curve; raises BelowRange when
    the defense cost is below the curve's value at zero attack cost.
    """
    partition = partition_by_cost(profile)
    cap = partition.level_costs[0] - partition.baseline_cost
    base = cd_threshold_tilde(profile, 0.0)
    if defense_cost <= base:
        if _close(defense_cost, base, 1e-12):
            return 0.0
        raise BelowRange(f"defense cost {defense_cost!r} below the curve minimum {base!r}")
    def at_least(ca: float) -> bool:
        # near the right end the curve overflows its own arithmetic; read that as +inf
        try:
            return cd_threshold_tilde(profile, ca) >= defense_cost
        except (NonpositiveDenominator, OutOfDomain):
            return True

    top = math.nextafter(cap, 0.0)
    lo, hi, gap = 0.0, top, cap
    for _ in range(200):  # bracket from the left; the curve diverges at cap
        gap *= 0.5
        hi = min(cap - gap, top)
        if hi > lo and at_least(hi):
            break
        lo = max(lo, hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if at_least(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def classify_regime_spe(
    profile: FacilityProfile, params: CostParams, tol: float = 1e-12
) -> SpeRegime:
    """Locate the parameters in the sequential game's regime diagram."""
    partition = partition_by_cost(profile)
    ca, cd = params.attack_cost, params.defense_cost
    c0 = partition.baseline_cost
    costs = partition.level_costs

    for k in range(1, partition.K + 1):
        edge = costs[k - 1] - c0
        if _close(ca, edge, tol):
            if k == 1:
                return SpeRegime(SpeRegimeKind.BOUNDARY, None)
            tilde_there = cd_threshold_tilde(profile, edge)
            if cd < tilde_there or _close(cd, tilde_there, tol):
                return SpeRegime(SpeRegimeKind.BOUNDARY, None)
    if ca > costs[0] - c0:
        return SpeRegime(SpeRegimeKind.TYPE_I, 0)

    tilde = cd_threshold_tilde(profile, ca)
    if _close(cd, tilde, tol):
        return SpeRegime(SpeRegimeKind.BOUNDARY, None)
    i = _bracket(partition, ca)
    if cd < tilde:
        return SpeRegime(SpeRegimeKind.TYPE_I, i)
    bands = [1.0 / s for s in _cumulative_ratio(partition)]
    for j in range(1, partition.K + 1):
        if _close(cd, bands[j - 1], tol):
            return SpeRegime(SpeRegimeKind.BOUNDARY, None)
    for j in range(1, partition.K + 1):
        upper = math.inf if j == 1 else bands[j - 2]
        if bands[j - 1] < cd < upper:
            return SpeRegime(SpeRegimeKind.TYPE_II, j)
    return SpeRegime(SpeRegimeKind.BOUNDARY, None)  # cd at/below the last band constant


def spe_utilities(
    profile: FacilityProfile, params: CostParams, regime: SpeRegime
) -> tuple[float, float]:
    """Equilibrium-path (defender, attacker) utilities for a non-boundary regime."""
    partition = partition_by_cost(profile)
    c0, ca, cd = partition.baseline_cost, params.attack_cost, params.defense_cost
    costs, sizes = partition.level_costs, partition.level_sizes
    if regime.kind is SpeRegimeKind.TYPE_I:
        i = regime.index or 0
        spend = sum(
            (costs[k] - ca - c0) / (costs[k] - c0) * sizes[k] for k in range(i)
        )
        return -c0 - cd * spend, c0
    if regime.kind is SpeRegimeKind.TYPE_II:
        j = regime.index
        cj = costs[j - 1]
        ud = -cj - sum(
            (costs[k] - cj) * cd * sizes[k] / (costs[k] - c0) for k in range(j - 1)
        )
        return ud, cj - ca
    raise BoundaryParameters("no closed-form utilities on a regime boundary")


def solve_spe(profile: FacilityProfile, params: CostParams) -> SpeOutcome:
    """Closed-form subgame-perfect outcome of the sequential game.

    Type I regimes deter: threshold effort on every vulnerable facility and no
    attack on path. Type II regimes concede: the simultaneous-game effort,
    against which the attacker mixes over the top j cost levels with total
    probability one. Raises BoundaryParameters on regime boundaries.
    """
    regime = classify_regime_spe(profile, params)
    if regime.kind is SpeRegimeKind.BOUNDARY:
        raise BoundaryParameters(
            f"(attack_cost={params.attack_cost!r}, defense_cost={params.defense_cost!r})"
            " lies on a regime boundary"
        )
    partition = partition_by_cost(profile)
    c0, ca, cd = partition.baseline_cost, params.attack_cost, params.defense_cost
    costs = partition.level_costs

    effort: dict[FacilityId, float] = {}
    if regime.kind is SpeRegimeKind.TYPE_I:
        for k in range(regime.index):
            for fac in partition.levels[k].members:
                effort[fac] = (costs[k] - ca - c0) / (costs[k] - c0)
        on_path = OnPathAttack(True, (), AttackDistribution.over(profile, {}))
    else:
        j = regime.index
        cj = costs[j - 1]
        attack: dict[FacilityId, float] = {}
        for k in range(j - 1):
            ck = costs[k]
            for fac in partition.levels[k].members:
                effort[fac] = (ck - cj) / (ck - c0)
                attack[fac] = cd / (ck - c0)
        residual = 1.0 - sum(attack.values())
        free = partition.levels[j - 1].members
        for fac in free:
            attack[fac] = residual / len(free)
        on_path = OnPathAttack(
            False,
            partition.members_up_to(j),
            AttackDistribution.over(profile, attack, no_attack=0.0),
        )

    ud, ua = spe_utilities(profile, params, regime)
    return SpeOutcome(regime, EffortVector.over(profile, effort), on_path, ud, ua)
