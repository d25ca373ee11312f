"""Tests for planner chain drawdowns, greedy sequence, and brute-force oracle."""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

from teamsearch.costs import AffineQuadratic, ScaledExponential, ScopeBounds
from teamsearch.equilibrium import equilibrium_exit_schedule
from teamsearch.errors import ValidationError
from teamsearch.planner import (
    brute_force_optimal_chain,
    enumerate_chains,
    greedy_wellordered_chain,
    optimal_chain,
    planner_drawdown,
)
from teamsearch.welfare import chain_welfare, equilibrium_payoffs

WIDE = ScopeBounds(0.1, 10.0)
ROOMY = ScopeBounds(0.01, 50.0)


def exp_team(betas, b=1.0):
    return [ScaledExponential(b=b, beta=float(beta)) for beta in betas]


def exp_lambda(betas):
    # planner multiplier for exponential b=1 teams: log lam = 2 - mean(log beta)
    return math.exp(2.0 - float(np.mean(np.log(betas))))


def test_terminal_drawdown_two_symmetric_agents():
    costs = exp_team([1.0, 1.0])
    # S = 4, C = 2 e^2: d = 2 S^2 / (2 C)... = 8/e^2 = 1.0826822658929016
    d = planner_drawdown([0, 1], [], costs, WIDE)
    assert d == pytest.approx(8.0 * math.exp(-2.0), rel=1e-9)
    trigger = 2.0 / math.e
    assert d > trigger  # planner waits longer than the equilibrium


def test_terminal_drawdown_three_agents():
    costs = exp_team([1.0, 1.2, 2.0])
    d = planner_drawdown([0, 1, 2], [], costs, WIDE)
    # d = 2 n^2 / lambda = 18 / exp(2 - (ln 1.2 + ln 2)/3) = 3.2615243247
    assert d == pytest.approx(18.0 / exp_lambda([1.0, 1.2, 2.0]), rel=1e-9)
    assert d == pytest.approx(3.2615243247, abs=1e-8)


def test_single_agent_matches_equilibrium_drawdown():
    costs = exp_team([2.0])
    d = planner_drawdown([0], [], costs, WIDE)
    # sigma = 2, c = e^2/2: d = 4/e^2 = 0.5413411329464508
    assert d == pytest.approx(4.0 * math.exp(-2.0), rel=1e-9)


def test_planner_drawdown_validates_nesting():
    costs = exp_team([1.0, 1.2, 2.0])
    with pytest.raises(ValueError):
        planner_drawdown([0, 1], [0, 1], costs, WIDE)
    with pytest.raises(ValueError):
        planner_drawdown([0, 1], [2], costs, WIDE)
    with pytest.raises(ValueError):
        planner_drawdown([], [0], costs, WIDE)


def test_greedy_single_alliance_instance():
    costs = exp_team([1.0, 1.2, 2.0])
    chain = greedy_wellordered_chain(costs, WIDE)
    assert chain.alliances == ((0, 1, 2),)
    assert chain.feasible
    assert chain.trace == (0,)
    assert chain.drawdowns[0] == pytest.approx(3.2615243247, abs=1e-8)
    # suffix candidates it beat: 8/lambda_{2,3} = 1.6772, 4/e^2 = 0.5413
    d2 = planner_drawdown([1, 2], [], costs, WIDE)
    d3 = planner_drawdown([2], [], costs, WIDE)
    assert d2 == pytest.approx(8.0 / exp_lambda([1.2, 2.0]), rel=1e-9)
    assert chain.drawdowns[0] > d2 > d3


def test_greedy_two_wave_instance():
    costs = exp_team([1.0, 30.0, 30.0])
    chain = greedy_wellordered_chain(costs, ROOMY)
    assert chain.alliances == ((0, 1, 2), (1, 2))
    assert chain.feasible
    assert chain.trace == (1, 0)
    # terminal drawdown of {2,3}: 8/(e^2/30) = 240/e^2 = 32.4804...
    assert chain.drawdowns[1] == pytest.approx(240.0 * math.exp(-2.0), rel=1e-9)
    assert chain.drawdowns[0] < chain.drawdowns[1]


def test_greedy_symmetric_team_single_alliance():
    costs = exp_team([1.0] * 4)
    chain = greedy_wellordered_chain(costs, ROOMY)
    assert chain.alliances == ((0, 1, 2, 3),)


def test_greedy_trivial_team():
    chain = greedy_wellordered_chain(exp_team([1.0]), WIDE)
    assert chain.alliances == ((0,),)
    assert chain.drawdowns[0] == pytest.approx(2.0 * math.exp(-2.0), rel=1e-9)


def test_greedy_input_validation():
    with pytest.raises(ValidationError):
        greedy_wellordered_chain(
            [ScaledExponential(b=1.0), AffineQuadratic(1.0, 0.0, 1.0)], WIDE
        )
    with pytest.raises(ValidationError):
        greedy_wellordered_chain(exp_team([2.0, 1.0]), WIDE)  # multipliers decreasing


def test_enumerate_chains_counts():
    assert len(enumerate_chains([0], wellordered=True)) == 1
    three = enumerate_chains([0, 1, 2], wellordered=True)
    assert len(three) == 4
    assert ((0, 1, 2),) in three
    assert ((0, 1, 2), (1, 2)) in three
    assert ((0, 1, 2), (2,)) in three
    assert ((0, 1, 2), (1, 2), (2,)) in three
    assert len(enumerate_chains(range(4), wellordered=True)) == 8
    # general nesting: ordered set partitions of 3 elements = 13
    assert len(enumerate_chains([0, 1, 2], wellordered=False)) == 13
    with pytest.raises(ValueError):
        enumerate_chains(range(11), wellordered=True)
    with pytest.raises(ValueError):
        enumerate_chains(range(7), wellordered=False)


def test_brute_force_matches_greedy_on_reference_instance():
    costs = exp_team([1.0, 1.2, 2.0])
    chain, report = brute_force_optimal_chain(costs, WIDE)
    greedy = greedy_wellordered_chain(costs, WIDE)
    assert chain.alliances == greedy.alliances
    np.testing.assert_allclose(chain.drawdowns, greedy.drawdowns, rtol=1e-9)
    # planner welfare 27/lambda = 4.8922864870 beats the equilibrium 1.8825294365
    assert report.total == pytest.approx(27.0 / exp_lambda([1.0, 1.2, 2.0]), rel=1e-9)
    schedule = equilibrium_exit_schedule([0, 1, 2], costs, WIDE)
    eq_total = equilibrium_payoffs(schedule, costs).total
    assert report.total > eq_total


def test_greedy_equals_brute_force_on_random_instances():
    rng = np.random.default_rng(20240814)
    for _ in range(30):
        n = int(rng.integers(2, 7))
        betas = np.sort(np.exp(rng.uniform(0.0, 3.5, size=n)))
        betas[0] = 1.0
        costs = exp_team(betas)
        greedy = greedy_wellordered_chain(costs, ROOMY)
        brute, _ = brute_force_optimal_chain(costs, ROOMY)
        assert greedy.alliances == brute.alliances
        np.testing.assert_allclose(greedy.drawdowns, brute.drawdowns, rtol=1e-9)
        assert greedy.feasible


def test_chain_drawdowns_are_stationary_points_of_welfare():
    rng = np.random.default_rng(7)
    checked = 0
    for _ in range(20):
        n = int(rng.integers(2, 6))
        betas = np.sort(np.exp(rng.uniform(0.0, 4.0, size=n)))
        betas[0] = 1.0
        costs = exp_team(betas)
        chain = greedy_wellordered_chain(costs, ROOMY)
        base = chain_welfare(chain, costs).total
        h = 1e-5
        for k in range(len(chain.drawdowns)):
            for sign in (+1.0, -1.0):
                bumped = list(chain.drawdowns)
                bumped[k] += sign * h
                reports = chain_welfare(replace(chain, drawdowns=tuple(bumped)), costs)
                # quadratic in d_k: any perturbation can only lower welfare
                assert reports.total <= base + 1e-10 * max(1.0, abs(base))
            up = list(chain.drawdowns)
            down = list(chain.drawdowns)
            up[k] += h
            down[k] -= h
            deriv = (
                chain_welfare(replace(chain, drawdowns=tuple(up)), costs).total
                - chain_welfare(replace(chain, drawdowns=tuple(down)), costs).total
            ) / (2 * h)
            assert abs(deriv) <= 1e-6 * max(1.0, abs(base))
            checked += 1
    assert checked >= 20


def test_planner_beats_equilibrium_welfare():
    rng = np.random.default_rng(11)
    for _ in range(20):
        n = int(rng.integers(1, 6))
        betas = np.sort(np.exp(rng.uniform(0.0, 2.5, size=n)))
        costs = exp_team(betas)
        chain = optimal_chain(costs, ROOMY)
        sp_total = chain_welfare(chain, costs).total
        schedule = equilibrium_exit_schedule(range(n), costs, ROOMY)
        eq_total = equilibrium_payoffs(schedule, costs).total
        assert sp_total >= eq_total - 1e-10


def test_planner_drawdown_dominates_equilibrium_trigger_on_shared_alliances():
    rng = np.random.default_rng(13)
    for _ in range(20):
        n = int(rng.integers(2, 7))
        betas = np.sort(np.exp(rng.uniform(0.0, 3.0, size=n)))
        costs = exp_team(betas)
        chain = greedy_wellordered_chain(costs, ROOMY)
        schedule = equilibrium_exit_schedule(range(n), costs, ROOMY)
        eq_by_alliance = {w.alliance: w.trigger for w in schedule.waves}
        for alliance, d in zip(chain.alliances, chain.drawdowns):
            if alliance in eq_by_alliance:
                assert d >= eq_by_alliance[alliance] - 1e-9
