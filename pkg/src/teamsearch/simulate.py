"""Monte Carlo engine for drawdown-stopped search paths with alliance switching.

Paths follow dX = S_k dB within phase k and fire wave k when the gap M - X
first reaches the phase trigger.  Discretization at step dt biases first
passages (the discrete running maximum lags the continuous one by about
0.58 S sqrt(dt), so stops happen late at an inflated gap).  With
``bridge_correction`` enabled, each step also samples the within-step maximum
from its Brownian-bridge law and applies a bridge crossing test for the dip
barrier, which removes the bias in both M and tau; stops still resolve at
step boundaries.

RNG contract: path p draws from a counter-based Philox stream keyed by
(seed, p), in fixed-size chunks, consuming one normal (plus two uniforms in
bridge mode) per step.  Results are bit-identical for a given config
regardless of execution order or thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .costs import CostSpec, ScopeBounds
from .errors import SimulationError, ValidationError
from .scopes import Alliance

CHUNK = 128
CENSOR_WARN_FRACTION = 0.01


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-4
    n_paths: int = 20_000
    seed: int = 0
    t_max: float | None = None
    bridge_correction: bool = False
    strict: bool = False

    def __post_init__(self) -> None:
        if not self.dt > 0.0:
            raise ValidationError("dt must be positive")
        if self.n_paths < 1:
            raise ValidationError("n_paths must be at least 1")
        if self.t_max is not None and not self.t_max > 0.0:
            raise ValidationError("t_max must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class _Phase:
    alliance: Alliance
    scope: float
    trigger: float
    rates: dict[int, float]
    exit_scale: float = 1.0
    threshold: float = math.inf


@dataclass(frozen=True, eq=False)
class SimOutcome:
    """Per-path payoffs and per-wave stopping statistics of one simulation."""

    agents: Alliance
    payoffs: np.ndarray  # (n_agents, n_paths)
    wave_tau: np.ndarray  # (n_waves, n_paths), NaN where the wave never fired
    wave_M: np.ndarray  # (n_waves, n_paths), NaN where the wave never fired
    censored: np.ndarray  # (n_paths,) bool
    collapse_wave: np.ndarray  # (n_paths,) int, -1 when no early collapse
    config: SimConfig
    warnings: tuple[str, ...]

    @property
    def n_paths(self) -> int:
        return self.payoffs.shape[1]

    @property
    def censored_count(self) -> int:
        return int(self.censored.sum())

    def mean_payoff(self, agent: int) -> float:
        return float(self.payoffs[self.agents.index(agent)].mean())

    def payoff_se(self, agent: int) -> float:
        row = self.payoffs[self.agents.index(agent)]
        return float(row.std(ddof=1) / math.sqrt(row.size))

    def total_payoff(self) -> tuple[float, float]:
        per_path = self.payoffs.sum(axis=0)
        return float(per_path.mean()), float(per_path.std(ddof=1) / math.sqrt(per_path.size))

    def wave_stats(self, k: int) -> tuple[float, float, int]:
        """(mean tau, mean M, sample count) over paths where wave k fired."""
        tau = self.wave_tau[k]
        ok = ~np.isnan(tau)
        count = int(ok.sum())
        if count == 0:
            return math.nan, math.nan, 0
        return float(tau[ok].mean()), float(self.wave_M[k][ok].mean()), count

    def wave_se(self, k: int) -> tuple[float, float]:
        tau = self.wave_tau[k]
        ok = ~np.isnan(tau)
        n = int(ok.sum())
        if n < 2:
            return math.nan, math.nan
        return (
            float(tau[ok].std(ddof=1) / math.sqrt(n)),
            float(self.wave_M[k][ok].std(ddof=1) / math.sqrt(n)),
        )

    def equals(self, other: "SimOutcome") -> bool:
        """Bit-exact equality of all sampled arrays (NaN-tolerant)."""
        return (
            self.agents == other.agents
            and np.array_equal(self.payoffs, other.payoffs, equal_nan=True)
            and np.array_equal(self.wave_tau, other.wave_tau, equal_nan=True)
            and np.array_equal(self.wave_M, other.wave_M, equal_nan=True)
            and np.array_equal(self.censored, other.censored)
            and np.array_equal(self.collapse_wave, other.collapse_wave)
        )


def _expected_duration(phases: Sequence[_Phase]) -> float:
    total, prev = 0.0, 0.0
    for p in phases:
        total += (p.trigger * p.trigger - prev * prev) / (p.scope * p.scope)
        prev = p.trigger
    return total


def _run(phases: Sequence[_Phase], agents: Alliance, config: SimConfig) -> SimOutcome:
    n = config.n_paths
    n_waves = len(phases)
    dt = config.dt
    sqdt = math.sqrt(dt)
    scope = np.array([p.scope for p in phases])
    trig = np.array([p.trigger for p in phases])
    thresh = np.array([p.threshold for p in phases])
    scales = np.array([p.exit_scale for p in phases])

    t_max = config.t_max if config.t_max is not None else 50.0 * _expected_duration(phases)
    max_steps = max(1, int(math.ceil(t_max / dt)))

    seed = int(config.seed)
    gens = [
        np.random.Generator(np.random.Philox(key=np.array([seed, p], dtype=np.uint64)))
        for p in range(n)
    ]

    X = np.zeros(n)
    Mx = np.zeros(n)
    phase = np.zeros(n, dtype=np.int64)
    wave_step = np.full((n_waves, n), -1, dtype=np.int64)
    wave_M = np.full((n_waves, n), np.nan)
    collapse_wave = np.full(n, -1, dtype=np.int64)
    alive = np.arange(n)

    bridge = config.bridge_correction
    normals = np.empty((n, CHUNK))
    uniforms = np.empty((n, 2, CHUNK)) if bridge else None

    step = 0
    while alive.size and step < max_steps:
        pos = step % CHUNK
        if pos == 0:
            for p in alive:
                normals[p] = gens[p].standard_normal(CHUNK)
                if bridge:
                    uniforms[p] = gens[p].random((2, CHUNK))
        ph = phase[alive]
        S = scope[ph]
        d = trig[ph]
        Xo = X[alive]
        Mo = Mx[alive]
        Xn = Xo + S * sqdt * normals[alive, pos]
        if bridge:
            var = S * S * dt
            u1 = uniforms[alive, 0, pos]
            u2 = uniforms[alive, 1, pos]
            # within-step maximum of the bridge from Xo to Xn (inverse CDF)
            mx = 0.5 * (Xo + Xn + np.sqrt((Xn - Xo) ** 2 - 2.0 * var * np.log(u1)))
            Mn = np.maximum(Mo, mx)
            bar = Mo - d
            cross = np.exp(np.minimum(0.0, -2.0 * (Xo - bar) * (Xn - bar) / var))
            fired = (Xn <= bar) | (u2 < cross) | (Mn - Xn >= d)
        else:
            Mn = np.maximum(Mo, Xn)
            fired = (Mn - Xn) >= d
        X[alive] = Xn
        Mx[alive] = Mn
        step += 1
        if fired.any():
            idx = alive[fired]
            while idx.size:
                k = phase[idx]
                wave_step[k, idx] = step
                wave_M[k, idx] = Mx[idx]
                collapse = Mx[idx] >= thresh[k]
                collapse_wave[idx[collapse]] = k[collapse]
                phase[idx] = np.where(collapse, n_waves, k + 1)
                idx = idx[phase[idx] < n_waves]
                if idx.size:
                    # overshoot may already satisfy the next trigger
                    idx = idx[(Mx[idx] - X[idx]) >= trig[phase[idx]]]
            alive = alive[phase[alive] < n_waves]

    censored = phase < n_waves
    warnings: list[str] = []
    frac = float(censored.mean())
    if frac > CENSOR_WARN_FRACTION:
        msg = f"{frac:.2%} of paths hit the horizon t_max={t_max:.6g} before finishing"
        if config.strict:
            raise SimulationError(msg)
        warnings.append(msg)

    # phase durations per path (steps), then flow costs per agent
    dur = np.zeros((n_waves, n))
    start = np.zeros(n, dtype=np.int64)
    for k in range(n_waves):
        fired_k = wave_step[k] >= 0
        end = np.where(fired_k, wave_step[k], np.where(phase == k, max_steps, start))
        dur[k] = (end - start) * dt
        start = end
    rates = np.zeros((len(agents), n_waves))
    for k, p in enumerate(phases):
        for i, rate in p.rates.items():
            rates[agents.index(i), k] = rate
    flow_costs = rates @ dur  # (n_agents, n_paths)

    last_wave = np.array([max(k for k, p in enumerate(phases) if a in p.alliance) for a in agents])
    payoffs = np.empty((len(agents), n))
    cols = np.arange(n)
    for row, a in enumerate(agents):
        k_own = last_wave[row]
        e = np.where((collapse_wave >= 0) & (collapse_wave < k_own), collapse_wave, k_own)
        fired_e = wave_step[e, cols] >= 0
        reward_M = np.where(fired_e, wave_M[e, cols], Mx)
        scale = np.where(fired_e & (e == k_own), scales[k_own], np.where(fired_e, 1.0, scales[k_own]))
        payoffs[row] = scale * reward_M - flow_costs[row]

    wave_tau = np.where(wave_step >= 0, wave_step * dt, np.nan)
    return SimOutcome(
        agents=agents,
        payoffs=payoffs,
        wave_tau=wave_tau,
        wave_M=wave_M,
        censored=censored,
        collapse_wave=collapse_wave,
        config=config,
        warnings=tuple(warnings),
    )


def _phases_from_plan(plan, costs: Sequence[CostSpec]) -> list[_Phase]:
    phases = []
    prev = 0.0
    for alliance, profile, drawdown in plan.phases():
        if not math.isfinite(drawdown) or drawdown <= prev:
            raise ValidationError(f"plan drawdown {drawdown} must exceed the previous {prev}")
        rates = {i: costs[i].cost(profile.per_agent[i]) for i in alliance}
        phases.append(_Phase(alliance=tuple(alliance), scope=profile.total,
                             trigger=drawdown, rates=rates))
        prev = drawdown
    if not phases:
        raise ValidationError("plan has no phases")
    return phases


def simulate_schedule(plan, costs: Sequence[CostSpec], config: SimConfig) -> SimOutcome:
    """Simulate any phased plan (equilibrium schedule or planner chain)."""
    phases = _phases_from_plan(plan, costs)
    return _run(phases, phases[0].alliance, config)


@dataclass(frozen=True)
class KSReport:
    statistic: float
    pvalue: float
    n_samples: int
    null_mean: float
    significance: float
    passed: bool


def stopped_max_distribution_test(
    drawdown: float,
    scope: float,
    config: SimConfig,
    null_mean: float | None = None,
    significance: float = 0.01,
) -> KSReport:
    """KS test of simulated M at the stop against the exponential null law.

    The maximum of a driftless path stopped at drawdown d is Exp(mean d);
    passing ``null_mean`` overrides the null (e.g. to check the test's power).
    """
    phases = [_Phase(alliance=(0,), scope=scope, trigger=drawdown, rates={0: 0.0})]
    outcome = _run(phases, (0,), config)
    samples = outcome.wave_M[0]
    samples = samples[~np.isnan(samples)]
    mean = drawdown if null_mean is None else null_mean
    result = stats.kstest(samples, "expon", args=(0.0, mean))
    return KSReport(
        statistic=float(result.statistic),
        pvalue=float(result.pvalue),
        n_samples=int(samples.size),
        null_mean=mean,
        significance=significance,
        passed=bool(result.pvalue > significance),
    )


@dataclass(frozen=True, eq=False)
class PlannerComparison:
    equilibrium: SimOutcome
    planner: SimOutcome
    eq_welfare: dict[int, float]
    sp_welfare: dict[int, float]
    gap_mean: dict[int, float]
    gap_se: dict[int, float]
    total_gap: float
    total_gap_se: float


def simulate_equilibrium_vs_planner(
    costs: Sequence[CostSpec], bounds: ScopeBounds, config: SimConfig
) -> PlannerComparison:
    """Run both regimes on common random numbers and report per-agent gaps."""
    from .equilibrium import equilibrium_exit_schedule
    from .planner import optimal_chain
    from .welfare import chain_welfare, equilibrium_payoffs

    team = range(len(costs))
    schedule = equilibrium_exit_schedule(team, costs, bounds)
    chain = optimal_chain(costs, bounds)
    eq_out = simulate_schedule(schedule, costs, config)
    sp_out = simulate_schedule(chain, costs, config)
    eq_rep = equilibrium_payoffs(schedule, costs)
    sp_rep = chain_welfare(chain, costs)

    diffs = sp_out.payoffs - eq_out.payoffs
    n = diffs.shape[1]
    gap_mean = {a: float(diffs[r].mean()) for r, a in enumerate(eq_out.agents)}
    gap_se = {
        a: float(diffs[r].std(ddof=1) / math.sqrt(n)) for r, a in enumerate(eq_out.agents)
    }
    total = diffs.sum(axis=0)
    return PlannerComparison(
        equilibrium=eq_out,
        planner=sp_out,
        eq_welfare=eq_rep.per_agent,
        sp_welfare=sp_rep.per_agent,
        gap_mean=gap_mean,
        gap_se=gap_se,
        total_gap=float(total.mean()),
        total_gap_se=float(total.std(ddof=1) / math.sqrt(n)),
    )
