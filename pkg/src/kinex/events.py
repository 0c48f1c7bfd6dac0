"""Open-system perturbations and the scenario loop.

These operators break the closed-run constraints: total money can change
(inflation, injections, unemployment write-offs, exits) and so can the agent
count (entries/exits).  A Schedule attaches operators to sweep indices;
``run_scenario`` interleaves them with the exchange dynamics.

Percentile bands select agents by income rank: after a stable ascending sort,
the agent at 0-based rank r occupies the quantile block [r/n, (r+1)/n], and it
belongs to band [a, b] iff its whole block lies inside the band.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .engine import ModelSpec, Population, RunConfig, Snapshot, _init_state
from .errors import AllocationError, ConfigError, ParameterError

Band = tuple[float, float]


def _check_band(band: Band, name: str = "band") -> Band:
    a, b = float(band[0]), float(band[1])
    if not (0.0 <= a < b <= 1.0):
        raise ParameterError(f"{name} must satisfy 0 <= a < b <= 1, got ({a}, {b})")
    return a, b


def band_indices(incomes: np.ndarray, band: Band) -> np.ndarray:
    """Indices of agents whose rank block lies inside the percentile band."""
    a, b = band
    n = incomes.size
    order = np.argsort(incomes, kind="stable")
    ranks = np.empty(n, dtype=np.int64)
    ranks[order] = np.arange(n)
    inside = (ranks >= a * n) & (ranks + 1 <= b * n)
    return np.nonzero(inside)[0]


@dataclass(frozen=True)
class Inflation:
    """Multiply every income by (1 + rate); rate > -1."""

    rate: float


@dataclass(frozen=True)
class MoneyInjection:
    """Add ``amount`` to the system: per-head, pro-rata, or into a band."""

    amount: float
    policy: str = "uniform"  # uniform | proportional | band
    band: Band | None = None


@dataclass(frozen=True)
class Unemployment:
    """Zero the income of a random fraction of agents below a threshold."""

    fraction: float
    threshold: float


@dataclass(frozen=True)
class SectorTransfer:
    """Move a fraction of the donor band's income into the recipient band."""

    donor: Band
    recipient: Band
    fraction: float


@dataclass(frozen=True)
class AgentEntry:
    """Append ``count`` agents, each starting with income ``income``."""

    count: int
    income: float = 0.0


@dataclass(frozen=True)
class AgentExit:
    """Remove ``count`` random agents from a band; their money leaves."""

    count: int
    band: Band


Operator = Union[Inflation, MoneyInjection, Unemployment, SectorTransfer, AgentEntry, AgentExit]


@dataclass(frozen=True)
class Event:
    at_sweep: int
    op: Operator


class Schedule:
    """Events sorted by at_sweep; same-sweep events keep insertion order."""

    def __init__(self, events=()):
        events = list(events)
        for ev in events:
            if not isinstance(ev, Event):
                raise ConfigError("schedule entries must be Event instances")
            if ev.at_sweep < 0:
                raise ConfigError("at_sweep must be non-negative")
        self.events = sorted(events, key=lambda ev: ev.at_sweep)

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def validate_range(self, sweeps: int) -> None:
        for ev in self.events:
            if ev.at_sweep > sweeps:
                raise ConfigError(
                    f"event at sweep {ev.at_sweep} outside run of {sweeps} sweeps"
                )


def apply_inflation(pop: Population, rate: float) -> Population:
    if not rate > -1:
        raise ParameterError("inflation rate must exceed -1")
    out = pop.copy()
    out.incomes *= 1.0 + rate
    return out


def inject_money(pop: Population, amount: float, policy: str = "uniform",
                 band: Band | None = None) -> Population:
    if amount < 0:
        raise ParameterError("injected amount must be non-negative")
    out = pop.copy()
    if policy == "uniform":
        out.incomes += amount / pop.size
    elif policy == "proportional":
        total = pop.total_money
        if total <= 0:
            raise AllocationError("proportional injection needs positive total money")
        out.incomes += amount * out.incomes / total
    elif policy == "band":
        if band is None:
            raise ParameterError("band injection requires a band")
        members = band_indices(pop.incomes, _check_band(band))
        if members.size == 0:
            raise AllocationError("band injection found no agents in band")
        out.incomes[members] += amount / members.size
    else:
        raise ParameterError(f"unknown injection policy {policy!r}")
    return out


def apply_unemployment(pop: Population, fraction: float, threshold: float,
                       rng: np.random.Generator) -> Population:
    if not 0 <= fraction <= 1:
        raise ParameterError("unemployment fraction must lie in [0, 1]")
    if not threshold > 0:
        raise ParameterError("unemployment threshold must be positive")
    out = pop.copy()
    eligible = np.nonzero((out.incomes > 0) & (out.incomes < threshold))[0]
    hit = round(fraction * eligible.size)  # banker's rounding, ties to even
    if hit > 0:
        out.incomes[rng.choice(eligible, size=hit, replace=False)] = 0.0
    return out


def sector_transfer(pop: Population, donor: Band, recipient: Band,
                    fraction: float) -> Population:
    donor = _check_band(donor, "donor band")
    recipient = _check_band(recipient, "recipient band")
    if not (donor[1] <= recipient[0] or recipient[1] <= donor[0]):
        raise ParameterError("donor and recipient bands must be disjoint")
    if not 0 <= fraction <= 1:
        raise ParameterError("transfer fraction must lie in [0, 1]")
    givers = band_indices(pop.incomes, donor)
    takers = band_indices(pop.incomes, recipient)
    if takers.size == 0:
        raise AllocationError("recipient band contains no agents")
    out = pop.copy()
    pool = fraction * float(out.incomes[givers].sum())
    out.incomes[givers] *= 1.0 - fraction
    taker_total = float(out.incomes[takers].sum())
    if taker_total > 0:
        out.incomes[takers] += pool * out.incomes[takers] / taker_total
    else:
        out.incomes[takers] += pool / takers.size
    return out


def adjust_agents(pop: Population, op: AgentEntry | AgentExit,
                  rng: np.random.Generator, model: ModelSpec | None = None) -> Population:
    if isinstance(op, AgentEntry):
        if op.count < 0:
            raise ParameterError("entry count must be non-negative")
        if op.income < 0:
            raise ParameterError("entry income must be non-negative")
        if op.count == 0:
            return pop.copy()
        incomes = np.concatenate([pop.incomes, np.full(op.count, float(op.income))])
        savings = pop.savings
        if savings is not None:
            if model is None:
                raise ParameterError("entry into a saving population needs the model")
            savings = np.concatenate([savings, model.draw_savings(op.count, rng)])
        return Population(incomes, savings)
    if isinstance(op, AgentExit):
        if op.count < 0:
            raise ParameterError("exit count must be non-negative")
        members = band_indices(pop.incomes, _check_band(op.band))
        if op.count > members.size:
            raise ParameterError(
                f"cannot remove {op.count} agents from a band of {members.size}"
            )
        if op.count == 0:
            return pop.copy()
        gone = rng.choice(members, size=op.count, replace=False)
        keep = np.ones(pop.size, dtype=bool)
        keep[gone] = False
        savings = None if pop.savings is None else pop.savings[keep]
        return Population(pop.incomes[keep], savings)
    raise ParameterError(f"unknown agent adjustment {op!r}")


def apply_event(pop: Population, op: Operator, rng: np.random.Generator,
                model: ModelSpec | None = None) -> Population:
    if isinstance(op, Inflation):
        return apply_inflation(pop, op.rate)
    if isinstance(op, MoneyInjection):
        return inject_money(pop, op.amount, op.policy, op.band)
    if isinstance(op, Unemployment):
        return apply_unemployment(pop, op.fraction, op.threshold, rng)
    if isinstance(op, SectorTransfer):
        return sector_transfer(pop, op.donor, op.recipient, op.fraction)
    if isinstance(op, (AgentEntry, AgentExit)):
        return adjust_agents(pop, op, rng, model)
    raise ParameterError(f"unknown operator {op!r}")


def run_scenario(config: RunConfig, schedule: Schedule) -> list[Snapshot]:
    """Run with scheduled perturbations.

    Events with at_sweep = t fire, in schedule order, after t completed
    sweeps and before the exchanges of sweep t (at_sweep = sweeps fires after
    the final sweep).  A snapshot is emitted after every event application in
    addition to the regular cadence, so pre- and post-event states are both
    observable.  The returned trajectory satisfies the money ledger: final
    total = initial total plus the net money delta of all applied events, up
    to exchange rounding.
    """
    if not isinstance(schedule, Schedule):
        schedule = Schedule(schedule)
    schedule.validate_range(config.sweeps)
    by_sweep: dict[int, list[Event]] = {}
    for ev in schedule:
        by_sweep.setdefault(ev.at_sweep, []).append(ev)

    state = _init_state(config)
    expected_total = float(np.sum(state.incomes))

    def fire(t: int) -> None:
        nonlocal expected_total
        for ev in by_sweep.get(t, ()):
            pop = Population(state.incomes, state.savings)
            before = pop.total_money
            pop = apply_event(pop, ev.op, state.rng, config.model)
            state.incomes = pop.incomes
            state.savings = pop.savings
            expected_total += pop.total_money - before
            state.emit(t)

    state.emit(0)
    for t in range(config.sweeps):
        fire(t)
        state.advance()
        done = t + 1
        if done % config.snapshot_every == 0:
            state.emit(done)
    fire(config.sweeps)

    final_total = float(np.sum(state.incomes))
    scale = max(abs(expected_total), 1.0)
    if abs(final_total - expected_total) > 1e-9 * scale:
        raise RuntimeError(
            "money ledger violated: expected "
            f"{expected_total!r}, got {final_total!r}"
        )
    return state.snapshots
