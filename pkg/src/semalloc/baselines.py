"""Comparison schemes: the expected-value formulation and random allocation.

The expected-value scheme collapses the scenario set to its mean (demand as
the probability-weighted product quantity*threshold, similarity likewise
averaged), solves the deterministic program, then pays for that fixed plan
under the true scenario distribution.  The random scheme draws whole plans
uniformly within the search bounds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._parallel import parallel_map
from .core_model import ProblemInstance
from .recourse import ReservationPlan, Solution, evaluate_total
from .solvers import DipInstance, SolverConfig, bundle_upper_bound, solve_dip


@dataclass(frozen=True)
class RandomSchemeConfig:
    """Seed and sample count for the random allocation scheme."""

    seed: int
    samples: int

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples}")


@dataclass(frozen=True)
class RandomSchemeResult:
    """Every sampled plan's evaluation plus aggregate statistics."""

    solutions: tuple[Solution, ...]
    totals: tuple[float, ...]
    mean_total: float
    min_total: float
    max_total: float
    best_index: int


def solve_evf(instance: ProblemInstance, config: SolverConfig | None = None) -> Solution:
    """Plan from the averaged deterministic program, costed under the true scenarios.

    The averaged requirement is E[quantity*threshold] (the constraint's
    right-hand side is the product, so its expectation is the faithful mean
    demand), posed with threshold 1.  Infeasibility of the averaged program
    propagates unchanged.
    """
    probabilities = [scen.probability for scen in instance.scenarios]
    avg_requirement = np.array(
        [
            sum(
                p * instance.requirement(w, i)
                for i, p in enumerate(probabilities)
            )
            for w in range(instance.num_vsps)
        ]
    )
    avg_similarity = np.zeros((instance.num_vsps, instance.num_devices))
    for w in range(instance.num_vsps):
        for e in range(instance.num_devices):
            avg_similarity[w, e] = sum(
                p * float(instance.similarity[w, e, i]) for i, p in enumerate(probabilities)
            )
    dip = DipInstance(
        devices=instance.devices,
        actual_similarity=avg_similarity,
        actual_quantity=avg_requirement,
        actual_threshold=np.ones(instance.num_vsps),
    )
    averaged_plan = solve_dip(dip, config).plan
    return evaluate_total(averaged_plan, instance)


def solve_random(instance: ProblemInstance, config: RandomSchemeConfig) -> RandomSchemeResult:
    """Uniform random plans within the per-(vsp, device) bundle bounds.

    Generator pinned for cross-run reproducibility: PCG64 seeded through
    ``SeedSequence((seed, sample_index))``, bundle counts drawn with
    ``Generator.integers``.  Per-sample seeding makes results independent of
    evaluation order, so samples may run in parallel.
    """
    upper = np.zeros((instance.num_vsps, instance.num_devices), dtype=np.int64)
    for w in range(instance.num_vsps):
        for e in range(instance.num_devices):
            upper[w, e] = bundle_upper_bound(w, e, instance)

    def draw(index: int) -> Solution:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((config.seed, index))))
        bundles = rng.integers(0, upper + 1, dtype=np.int64)
        return evaluate_total(ReservationPlan.from_bundles(bundles), instance)

    solutions = tuple(parallel_map(draw, range(config.samples)))
    totals = tuple(sol.cost.total for sol in solutions)
    best_index = min(range(len(totals)), key=lambda i: (totals[i], i))
    return RandomSchemeResult(
        solutions=solutions,
        totals=totals,
        mean_total=sum(totals) / len(totals),
        min_total=min(totals),
        max_total=max(totals),
        best_index=best_index,
    )


def random_summary_dict(result: RandomSchemeResult) -> dict:
    """JSON-ready summary: per-sample totals plus aggregates and the best plan."""
    best = result.solutions[result.best_index]
    return {
        "samples": len(result.totals),
        "totals": list(result.totals),
        "mean_total": result.mean_total,
        "min_total": result.min_total,
        "max_total": result.max_total,
        "best_index": result.best_index,
        "best_plan": {
            "membership": best.plan.membership.tolist(),
            "bundles": best.plan.bundles.tolist(),
        },
        "best_cost": {
            "membership_total": best.cost.membership_total,
            "reservation_total": best.cost.reservation_total,
            "expected_on_demand": best.cost.expected_on_demand,
            "total": best.cost.total,
        },
    }
