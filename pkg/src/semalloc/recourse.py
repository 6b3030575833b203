"""Second-stage evaluation: optimal on-demand top-ups for a fixed reservation plan.

The expected on-demand cost is linear with non-negative coefficients and the
coverage constraint counts on-demand units without similarity weighting, so
for each (vsp, scenario) the optimum buys the entire integer shortfall from
the single cheapest device.  That closed form makes the recourse function
exact and cheap to evaluate inside the first-stage search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_model import (
    CostBreakdown,
    ProblemInstance,
    on_demand_unit_cost,
    reservation_bundle_cost,
)


def _frozen_int_array(values, shape_name: str, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=np.int64, copy=True)
    if arr.ndim != ndim:
        raise ValueError(f"{shape_name} must be {ndim}-dimensional, got shape {arr.shape}")
    if (arr < 0).any():
        raise ValueError(f"{shape_name} entries must be non-negative")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ReservationPlan:
    """First-stage decisions: membership flags and bundle counts, both (vsp, device)."""

    membership: np.ndarray
    bundles: np.ndarray

    def __post_init__(self):
        membership = _frozen_int_array(self.membership, "membership", 2)
        bundles = _frozen_int_array(self.bundles, "bundles", 2)
        if membership.shape != bundles.shape:
            raise ValueError(
                f"membership shape {membership.shape} != bundles shape {bundles.shape}"
            )
        if (membership > 1).any():
            raise ValueError("membership entries must be 0 or 1")
        if ((bundles >= 1) & (membership == 0)).any():
            raise ValueError("bundles require membership on the same (vsp, device)")
        object.__setattr__(self, "membership", membership)
        object.__setattr__(self, "bundles", bundles)

    @classmethod
    def zeros(cls, num_vsps: int, num_devices: int) -> "ReservationPlan":
        shape = (num_vsps, num_devices)
        return cls(np.zeros(shape, dtype=np.int64), np.zeros(shape, dtype=np.int64))

    @classmethod
    def from_bundles(cls, bundles) -> "ReservationPlan":
        """Plan with membership normalized: paid exactly where bundles are bought."""
        arr = np.array(bundles, dtype=np.int64)
        return cls((arr >= 1).astype(np.int64), arr)


@dataclass(frozen=True)
class RecourseDecision:
    """Second-stage purchases: on-demand transmissions per (vsp, device, scenario)."""

    on_demand: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "on_demand", _frozen_int_array(self.on_demand, "on_demand", 3))


@dataclass(frozen=True)
class Solution:
    """A reservation plan, its optimal recourse, and the resulting cost breakdown."""

    plan: ReservationPlan
    recourse: RecourseDecision
    cost: CostBreakdown


def cheapest_device(instance: ProblemInstance) -> int:
    """Device with the lowest on-demand unit cost; ties go to the lowest index."""
    costs = [on_demand_unit_cost(dev) for dev in instance.devices]
    return min(range(len(costs)), key=lambda e: (costs[e], e))


def shortfall(w: int, scenario_index: int, plan: ReservationPlan, instance: ProblemInstance) -> int:
    """Minimum integer on-demand volume VSP ``w`` needs in the given scenario.

    Reserved coverage counts bundle transmissions scaled by the similarity
    score; the fractional gap to the requirement is rounded up because
    purchases are whole transmissions.
    """
    demand = instance.scenarios[scenario_index].per_vsp[w]
    coverage = 0.0
    for e, dev in enumerate(instance.devices):
        coverage += (
            float(plan.bundles[w, e]) * dev.bundle_size * instance.similarity[w, e, scenario_index]
        )
    return int(math.ceil(max(0.0, demand.requirement - coverage)))


def optimal_recourse(plan: ReservationPlan, instance: ProblemInstance) -> RecourseDecision:
    """Cost-minimal on-demand tensor for a fixed plan.

    Every (vsp, scenario) shortfall lands on the cheapest device.  Splits
    across equally cheap devices would cost the same; the canonical assignment
    keeps output deterministic.
    """
    num_vsps, num_devices = plan.bundles.shape
    target = cheapest_device(instance)
    tensor = np.zeros((num_vsps, num_devices, instance.num_scenarios), dtype=np.int64)
    for i in range(instance.num_scenarios):
        for w in range(num_vsps):
            gap = shortfall(w, i, plan, instance)
            if gap:
                tensor[w, target, i] = gap
    return RecourseDecision(tensor)


def evaluate_total(plan: ReservationPlan, instance: ProblemInstance) -> Solution:
    """Full objective value of a plan: stage-1 charges plus expected recourse.

    Membership is normalized to exactly the devices with bundles; paying a
    membership without bundles buys nothing.  Summation order is fixed
    (scenario-major, then vsp, then device) so results never depend on
    evaluation order.
    """
    normalized = ReservationPlan.from_bundles(plan.bundles)
    membership_total = 0.0
    reservation_total = 0.0
    for w in range(normalized.bundles.shape[0]):
        for e, dev in enumerate(instance.devices):
            if normalized.bundles[w, e] >= 1:
                membership_total += dev.membership_cost
                reservation_total += float(normalized.bundles[w, e]) * reservation_bundle_cost(dev)

    recourse = optimal_recourse(normalized, instance)
    unit_costs = [on_demand_unit_cost(dev) for dev in instance.devices]
    expected = 0.0
    for i, scen in enumerate(instance.scenarios):
        scenario_cost = 0.0
        for w in range(normalized.bundles.shape[0]):
            for e in range(normalized.bundles.shape[1]):
                units = int(recourse.on_demand[w, e, i])
                if units:
                    scenario_cost += units * unit_costs[e]
        expected += scen.probability * scenario_cost

    cost = CostBreakdown.from_parts(membership_total, reservation_total, expected)
    return Solution(plan=normalized, recourse=recourse, cost=cost)
