"""Core objects for the facility-security game.

A defender secures a subset of facilities at a per-facility cost; an attacker
compromises at most one facility at a fixed cost. If facility e is attacked
while unsecured, the usage cost borne by users rises from the baseline C0 to
the facility's post-attack cost Ce; otherwise it stays at C0.

Mixed defender strategies only matter through the per-facility security effort
(the total probability that a facility is covered), so most of the package
works with effort vectors and converts back to set distributions on demand.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Mapping, Optional

FacilityId = str

_RANGE_SLACK = 1e-9  # forgive float dust when validating probabilities/efforts


class ModelError(ValueError):
    """Invalid game data."""


class EmptyVulnerableUniverse(ModelError):
    """No facility can profitably be targeted under the given costs."""


class NotInIncreasedSet(ModelError):
    """Operation asked about a facility whose post-attack cost is not above baseline."""


@dataclass(frozen=True)
class FacilityProfile:
    """Facilities with a common baseline usage cost and per-facility post-attack costs.

    ``facilities`` is an ordered tuple of (id, post_attack_cost) pairs; the
    order fixes the canonical facility order used in reports and CSV columns.
    """

    baseline_cost: float
    facilities: tuple[tuple[FacilityId, float], ...]

    def __post_init__(self) -> None:
        if not self.baseline_cost > 0:
            raise ModelError("baseline cost must be positive")
        if not self.facilities:
            raise ModelError("at least one facility is required")
        seen = set()
        for fac, cost in self.facilities:
            if fac in seen:
                raise ModelError(f"duplicate facility id {fac!r}")
            seen.add(fac)
            if not cost > 0:
                raise ModelError(f"post-attack cost of {fac!r} must be positive")

    @classmethod
    def from_mapping(cls, baseline_cost: float, costs: Mapping[FacilityId, float]) -> "FacilityProfile":
        return cls(baseline_cost, tuple(costs.items()))

    @cached_property
    def _cost_map(self) -> dict[FacilityId, float]:
        return dict(self.facilities)

    @property
    def facility_ids(self) -> tuple[FacilityId, ...]:
        return tuple(fac for fac, _ in self.facilities)

    def post_attack_cost(self, fac: FacilityId) -> float:
        try:
            return self._cost_map[fac]
        except KeyError:
            raise ModelError(f"unknown facility {fac!r}") from None


@dataclass(frozen=True)
class CostParams:
    """Per-facility defense cost and attack cost, both strictly positive."""

    attack_cost: float
    defense_cost: float

    def __post_init__(self) -> None:
        if not self.attack_cost > 0:
            raise ModelError("attack cost must be positive")
        if not self.defense_cost > 0:
            raise ModelError("defense cost must be positive")


@dataclass(frozen=True)
class FacilityClassification:
    """Facilities split by the sign of Ce - C0 (increased / unchanged / decreased)."""

    increased: tuple[FacilityId, ...]
    unchanged: tuple[FacilityId, ...]
    decreased: tuple[FacilityId, ...]


@dataclass(frozen=True)
class CostLevel:
    cost: float
    members: tuple[FacilityId, ...]


@dataclass(frozen=True)
class FacilityPartition:
    """Facilities with increased post-attack cost, grouped by distinct cost level.

    Levels are sorted by strictly decreasing cost; every level cost exceeds the
    baseline. Group k (1-based) in the comments elsewhere refers to
    ``levels[k-1]``.
    """

    baseline_cost: float
    levels: tuple[CostLevel, ...]

    @property
    def K(self) -> int:
        return len(self.levels)

    @property
    def level_costs(self) -> tuple[float, ...]:
        return tuple(level.cost for level in self.levels)

    @property
    def level_sizes(self) -> tuple[int, ...]:
        return tuple(len(level.members) for level in self.levels)

    def members_up_to(self, k: int) -> tuple[FacilityId, ...]:
        """All facilities in levels 1..k."""
        out: list[FacilityId] = []
        for level in self.levels[:k]:
            out.extend(level.members)
        return tuple(out)


def classify_facilities(profile: FacilityProfile) -> FacilityClassification:
    """Split facilities by whether an attack raises, keeps, or lowers the usage cost."""
    inc, unch, dec = [], [], []
    for fac, cost in profile.facilities:
        if cost > profile.baseline_cost:
            inc.append(fac)
        elif cost == profile.baseline_cost:
            unch.append(fac)
        else:
            dec.append(fac)
    return FacilityClassification(tuple(inc), tuple(unch), tuple(dec))


@lru_cache(maxsize=512)
def partition_by_cost(profile: FacilityProfile) -> FacilityPartition:
    """Group the increased-cost facilities by distinct post-attack cost, highest first.

    Raises EmptyVulnerableUniverse when no facility has a post-attack cost above
    the baseline (the game is then trivial: never attack, never defend).
    """
    increased = classify_facilities(profile).increased
    if not increased:
        raise EmptyVulnerableUniverse("no facility has post-attack cost above baseline")
    groups: dict[float, list[FacilityId]] = {}
    for fac in increased:
        groups.setdefault(profile.post_attack_cost(fac), []).append(fac)
    levels = tuple(
        CostLevel(cost, tuple(groups[cost])) for cost in sorted(groups, reverse=True)
    )
    return FacilityPartition(profile.baseline_cost, levels)


def vulnerable_set(profile: FacilityProfile, attack_cost: float) -> tuple[FacilityId, ...]:
    """Facilities worth attacking even against a fully protected baseline:
    Ce - attack_cost > C0 (strict)."""
    return tuple(
        fac
        for fac, cost in profile.facilities
        if cost - attack_cost > profile.baseline_cost
    )


def _validated_unit(value: float, what: str) -> float:
    if value < -_RANGE_SLACK or value > 1.0 + _RANGE_SLACK:
        raise ModelError(f"{what} {value!r} outside [0, 1]")
    return min(1.0, max(0.0, value))


@dataclass(frozen=True)
class EffortVector:
    """Per-facility security effort in [0, 1], keyed exactly by the profile's facility ids."""

    efforts: tuple[tuple[FacilityId, float], ...]

    def __post_init__(self) -> None:
        cleaned = tuple(
            (fac, _validated_unit(v, f"effort on {fac!r}")) for fac, v in self.efforts
        )
        object.__setattr__(self, "efforts", cleaned)

    @classmethod
    def over(
        cls, profile: FacilityProfile, values: Mapping[FacilityId, float] = {}
    ) -> "EffortVector":
        """Build an effort vector over the profile, defaulting unlisted facilities to 0."""
        unknown = set(values) - set(profile.facility_ids)
        if unknown:
            raise ModelError(f"effort on unknown facilities: {sorted(unknown)}")
        return cls(tuple((fac, float(values.get(fac, 0.0))) for fac in profile.facility_ids))

    def get(self, fac: FacilityId) -> float:
        for f, v in self.efforts:
            if f == fac:
                return v
        raise ModelError(f"no effort entry for facility {fac!r}")

    def as_dict(self) -> dict[FacilityId, float]:
        return dict(self.efforts)

    @property
    def total(self) -> float:
        return sum(v for _, v in self.efforts)


@dataclass(frozen=True)
class MixedDefense:
    """Distribution over secured facility sets.

    Stored in a canonical order (by set size, then sorted members) so equal
    distributions compare equal.
    """

    weights: tuple[tuple[frozenset, float], ...]

    def __post_init__(self) -> None:
        total = 0.0
        cleaned = []
        for subset, w in sorted(self.weights, key=lambda sw: (len(sw[0]), sorted(sw[0]))):
            w = _validated_unit(w, f"weight of {sorted(subset)}")
            total += w
            cleaned.append((frozenset(subset), w))
        if abs(total - 1.0) > 1e-9:
            raise ModelError(f"defense weights sum to {total!r}, expected 1")
        object.__setattr__(self, "weights", tuple(cleaned))

    def as_dict(self) -> dict[frozenset, float]:
        return dict(self.weights)

    def prob(self, subset: frozenset) -> float:
        return self.as_dict().get(frozenset(subset), 0.0)


@dataclass(frozen=True)
class AttackDistribution:
    """Distribution over single-facility attacks plus the no-attack option."""

    facility_probs: tuple[tuple[FacilityId, float], ...]
    no_attack: float

    def __post_init__(self) -> None:
        cleaned = tuple(
            (fac, _validated_unit(p, f"attack prob on {fac!r}")) for fac, p in self.facility_probs
        )
        object.__setattr__(self, "facility_probs", cleaned)
        object.__setattr__(self, "no_attack", _validated_unit(self.no_attack, "no-attack prob"))
        total = sum(p for _, p in cleaned) + self.no_attack
        if abs(total - 1.0) > 1e-9:
            raise ModelError(f"attack probabilities sum to {total!r}, expected 1")

    @classmethod
    def over(
        cls,
        profile: FacilityProfile,
        values: Mapping[FacilityId, float] = {},
        no_attack: Optional[float] = None,
    ) -> "AttackDistribution":
        """Build a distribution over the profile's facilities; no_attack defaults to the residual."""
        unknown = set(values) - set(profile.facility_ids)
        if unknown:
            raise ModelError(f"attack prob on unknown facilities: {sorted(unknown)}")
        probs = tuple((fac, float(values.get(fac, 0.0))) for fac in profile.facility_ids)
        if no_attack is None:
            no_attack = 1.0 - sum(p for _, p in probs)
        return cls(probs, float(no_attack))

    def prob(self, fac: FacilityId) -> float:
        for f, p in self.facility_probs:
            if f == fac:
                return p
        raise ModelError(f"no attack entry for facility {fac!r}")

    def as_dict(self) -> dict[FacilityId, float]:
        return dict(self.facility_probs)

    @property
    def total_attack(self) -> float:
        return sum(p for _, p in self.facility_probs)

    def support(self) -> tuple[FacilityId, ...]:
        return tuple(fac for fac, p in self.facility_probs if p > 0.0)


def effort_from_mixed(profile: FacilityProfile, mixed: MixedDefense) -> EffortVector:
    """Marginal coverage probability per facility under a set distribution."""
    ids = set(profile.facility_ids)
    efforts = {fac: 0.0 for fac in profile.facility_ids}
    for subset, w in mixed.weights:
        stray = subset - ids
        if stray:
            raise ModelError(f"defense set mentions unknown facilities: {sorted(stray)}")
        for fac in subset:
            efforts[fac] += w
    return EffortVector.over(profile, efforts)


def mixed_from_effort(profile: FacilityProfile, effort: EffortVector) -> MixedDefense:
    """A set distribution inducing the given efforts, built on nested level sets.

    With distinct positive effort values v1 > ... > vm, the set of facilities
    at effort >= vi gets weight vi - v(i+1) (taking v(m+1) = 0), and the empty
    set absorbs 1 - v1. Facilities then lie in exactly the nested sets whose
    weights telescope to their own effort.
    """
    values = effort.as_dict()
    if set(values) != set(profile.facility_ids):
        raise ModelError("effort vector keys do not match the profile")
    positive = sorted({v for v in values.values() if v > 0.0}, reverse=True)
    weights: list[tuple[frozenset, float]] = []
    for i, v in enumerate(positive):
        nxt = positive[i + 1] if i + 1 < len(positive) else 0.0
        members = frozenset(fac for fac, val in values.items() if val >= v)
        weights.append((members, v - nxt))
    top = positive[0] if positive else 0.0
    weights.append((frozenset(), 1.0 - top))
    return MixedDefense(tuple(weights))


def _aligned(profile: FacilityProfile, effort: EffortVector, attack: AttackDistribution):
    ids = profile.facility_ids
    eff = effort.as_dict()
    atk = attack.as_dict()
    if set(eff) != set(ids):
        raise ModelError("effort vector keys do not match the profile")
    if set(atk) != set(ids):
        raise ModelError("attack distribution keys do not match the profile")
    return [(fac, profile.post_attack_cost(fac), eff[fac], atk[fac]) for fac in ids]


def expected_utilities(
    profile: FacilityProfile,
    params: CostParams,
    effort: EffortVector,
    attack: AttackDistribution,
) -> tuple[float, float]:
    """Expected (defender, attacker) utility of an effort vector vs an attack distribution.

    Defender pays the expected usage cost plus defense spending; the attacker
    collects the usage cost minus the attack cost whenever it attacks. Only the
    per-facility efforts matter, so any mixed defense inducing ``effort`` gives
    the same numbers.
    """
    c0 = profile.baseline_cost
    ca, cd = params.attack_cost, params.defense_cost
    defender = -c0 * attack.no_attack
    attacker = c0 * attack.no_attack
    for _, ce, rho, sig in _aligned(profile, effort, attack):
        defender -= rho * ((c0 - ce) * sig + cd) + ce * sig
        attacker += rho * (c0 - ce) * sig + ce * sig - ca * sig
    return defender, attacker


def zero_sum_utilities(
    profile: FacilityProfile,
    params: CostParams,
    effort: EffortVector,
    attack: AttackDistribution,
) -> tuple[float, float]:
    """Utilities of the strategically equivalent zero-sum game.

    Adding the defender's security spending to the attacker's utility leaves
    best responses unchanged and makes the game zero-sum; equilibria of the
    original game are exactly the saddle points of this one.
    """
    _, attacker = expected_utilities(profile, params, effort, attack)
    shifted = attacker + params.defense_cost * effort.total
    return -shifted, shifted
