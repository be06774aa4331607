"""Discrete demand scenarios for the second stage.

Demand is measured in key-rate units. The reference setting draws the
requested size from a Poisson law with mean ``n / 3`` truncated to the
scenario indices ``1..n`` and renormalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from qkdplan.errors import InputError
from qkdplan.rng import SplitMix64

PROB_TOL = 1e-12


@dataclass(frozen=True)
class Scenario:
    demand_units: int
    probability: float
    uav_available: bool = True


@dataclass(frozen=True)
class ScenarioSet:
    scenarios: tuple[Scenario, ...]
    lam: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        if not self.scenarios:
            raise InputError("scenario set is empty")
        for s in self.scenarios:
            if isinstance(s.demand_units, bool) or not isinstance(s.demand_units, int) \
                    or s.demand_units < 0:
                raise InputError(f"demand must be a non-negative integer, got {s.demand_units!r}")
            if not 0 < s.probability <= 1:
                raise InputError(f"scenario probability {s.probability} outside (0, 1]")
        total = math.fsum(s.probability for s in self.scenarios)
        if abs(total - 1.0) > PROB_TOL:
            raise InputError(f"scenario probabilities sum to {total!r}, not 1")

    @property
    def n_scenarios(self) -> int:
        return len(self.scenarios)

    @property
    def demands(self) -> list[int]:
        return [s.demand_units for s in self.scenarios]

    @property
    def max_demand(self) -> int:
        return max(self.demands)

    @property
    def min_demand(self) -> int:
        return min(self.demands)

    @classmethod
    def from_pairs(cls, pairs, uav_available: bool = True) -> ScenarioSet:
        """Build from ``(demand, probability)`` pairs."""
        return cls(tuple(Scenario(d, p, uav_available) for d, p in pairs))

    @classmethod
    def uniform(cls, demands) -> ScenarioSet:
        demands = list(demands)
        return cls.from_pairs((d, 1.0 / len(demands)) for d in demands)

    def with_demands(self, demands) -> ScenarioSet:
        """Same probabilities and UAV flags, different per-scenario demand."""
        demands = list(demands)
        if len(demands) != self.n_scenarios:
            raise InputError("demand override length differs from the scenario count")
        return ScenarioSet(tuple(Scenario(d, s.probability, s.uav_available)
                                 for d, s in zip(demands, self.scenarios)), self.lam)

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "scenarios": [
            {"demand_units": s.demand_units, "probability": s.probability,
             "uav_available": s.uav_available} for s in self.scenarios]}


def poisson_pmf(k: int, lam: float) -> float:
    """e^-lam * lam^k / k!, accumulated term by term to avoid factorial overflow."""
    if k < 0:
        raise InputError("k must be non-negative")
    if not lam > 0:
        raise InputError("lambda must be positive")
    p = math.exp(-lam)
    for i in range(1, k + 1):
        p *= lam / i
    return p


def build_scenarios(n: int = 10, lam: float | None = None,
                    uav_outage_prob: float = 0.0, seed: int = 0) -> ScenarioSet:
    """Truncated-Poisson scenario set over demands ``1..n``.

    UAV availability is drawn per scenario from a SplitMix64 stream seeded
    with ``seed``; with zero outage probability every scenario keeps UAVs.
    """
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise InputError(f"number of scenarios must be an integer >= 1, got {n!r}")
    if lam is None:
        lam = n / 3
    if not lam > 0:
        raise InputError("lambda must be positive")
    if not 0.0 <= uav_outage_prob <= 1.0:
        raise InputError("UAV outage probability must lie in [0, 1]")
    weights = [poisson_pmf(k, lam) for k in range(1, n + 1)]
    total = math.fsum(weights)
    rng = SplitMix64(seed)
    scenarios = []
    for k, w in zip(range(1, n + 1), weights):
        grounded = rng.bernoulli(uav_outage_prob)
        scenarios.append(Scenario(k, w / total, not grounded))
    return ScenarioSet(tuple(scenarios), lam)


def expected_demand(sset: ScenarioSet) -> float:
    return math.fsum(s.demand_units * s.probability for s in sset.scenarios)


def cdf_at(sset: ScenarioSet, r: int) -> float:
    """P(demand <= r)."""
    if r >= sset.max_demand:
        return 1.0
    return math.fsum(s.probability for s in sset.scenarios if s.demand_units <= r)


def expected_shortfall(sset: ScenarioSet, r: int) -> float:
    """E[max(0, demand - r)]."""
    return math.fsum(s.probability * max(0, s.demand_units - r) for s in sset.scenarios)
