"""Closed-form expected payoffs for exit schedules and planner chains.

Evaluation decomposes the run into phases between consecutive stop drawdowns.
For a driftless path with total scope S stopped when the gap M - X first
reaches d, starting from gap g < d, optional-stopping identities give the
expected maximum gain d - g and the expected duration (d^2 - g^2) / S^2.
An agent exiting at wave k therefore collects d_k minus her accumulated
expected flow costs over phases 1..k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, Sequence

from .costs import CostSpec
from .errors import ValidationError
from .scopes import Alliance, ScopeProfile


class PhasedPlan(Protocol):
    """Anything that yields (alliance, profile, stop drawdown) phases in order."""

    def phases(self) -> object: ...


@dataclass(frozen=True)
class PhaseStat:
    alliance: Alliance
    expected_gain: float
    expected_duration: float
    cost_by_agent: dict[int, float]


@dataclass(frozen=True)
class WelfareReport:
    per_agent: dict[int, float]
    total: float
    per_phase: tuple[PhaseStat, ...]


def phase_stats(start_gap: float, stop_gap: float, total_scope: float) -> tuple[float, float]:
    """Expected (max gain, duration) of one drawdown phase from gap start to stop."""
    if total_scope <= 0.0:
        raise ValidationError("total scope must be positive")
    if start_gap < 0.0:
        raise ValidationError("start gap must be non-negative")
    if start_gap >= stop_gap:
        raise ValidationError(
            f"start gap {start_gap} must lie strictly below stop gap {stop_gap}"
        )
    gain = stop_gap - start_gap
    duration = (stop_gap * stop_gap - start_gap * start_gap) / (total_scope * total_scope)
    return gain, duration


def chain_welfare(plan: PhasedPlan, costs: Sequence[CostSpec]) -> WelfareReport:
    """Expected payoff per agent for a phased plan started at (M, X) = (0, 0)."""
    phases = list(plan.phases())
    if not phases:
        raise ValidationError("plan has no phases")

    per_agent: dict[int, float] = {}
    accrued: dict[int, float] = {}
    stats: list[PhaseStat] = []
    prev_gap = 0.0
    prev_alliance: set[int] | None = None
    for k, (alliance, profile, drawdown) in enumerate(phases):
        members = set(alliance)
        if prev_alliance is not None and not members < prev_alliance:
            raise ValidationError("phase alliances must strictly shrink")
        if not math.isfinite(drawdown) or drawdown <= prev_gap:
            raise ValidationError(
                f"phase {k} drawdown {drawdown} must exceed the previous {prev_gap}"
            )
        gain, duration = phase_stats(prev_gap, drawdown, profile.total)
        phase_cost = {i: costs[i].cost(profile.per_agent[i]) * duration for i in alliance}
        for i, value in phase_cost.items():
            accrued[i] = accrued.get(i, 0.0) + value
        stats.append(PhaseStat(alliance, gain, duration, phase_cost))

        next_members = set(phases[k + 1][0]) if k + 1 < len(phases) else set()
        for i in sorted(members - next_members):
            per_agent[i] = drawdown - accrued[i]
        prev_gap = drawdown
        prev_alliance = members

    return WelfareReport(
        per_agent=per_agent, total=sum(per_agent.values()), per_phase=tuple(stats)
    )


def equilibrium_payoffs(schedule: PhasedPlan, costs: Sequence[CostSpec]) -> WelfareReport:
    """Per-agent equilibrium values; identical mechanics to chain_welfare."""
    return chain_welfare(schedule, costs)


def solo_value(cost: CostSpec, scope: float) -> float:
    """Value sigma^2/(4c) of searching alone at a given scope with optimal stopping."""
    return scope * scope / (4.0 * cost.cost(scope))
