"""Closed-system kinetic exchange engine.

N agents repeatedly meet in random pairs and exchange the part of their
income not protected by a saving propensity.  Three variants:

* ``dy``  - no saving (propensity 0 for everyone),
* ``cc``  - one global saving propensity,
* ``ccm`` - per-agent propensities drawn once from a uniform range.

All randomness comes from a single numpy PCG64 stream seeded from the run
config, so a run is reproducible from (config, seed) alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, ParameterError, StateError
from .kernels import sweep_inplace

MODEL_KINDS = ("dy", "cc", "ccm")
INIT_POLICIES = ("equal", "delta")

# default per-agent propensity range for the distributed-saving variant;
# capped strictly below 1 so no agent hoards forever
CCM_DEFAULT_RANGE = (0.0, 0.9999)


@dataclass
class Population:
    """Agent incomes plus optional per-agent saving propensities."""

    incomes: np.ndarray
    savings: np.ndarray | None = None

    def __post_init__(self):
        self.incomes = np.asarray(self.incomes, dtype=np.float64)
        if self.incomes.ndim != 1:
            raise ParameterError("incomes must be a 1-d sequence")
        if self.incomes.size and self.incomes.min() < 0:
            raise ParameterError("incomes must be non-negative")
        if self.savings is not None:
            self.savings = np.asarray(self.savings, dtype=np.float64)
            if self.savings.shape != self.incomes.shape:
                raise ParameterError("savings length must match incomes")
            if self.savings.size and (
                self.savings.min() < 0 or self.savings.max() >= 1
            ):
                raise ParameterError("saving propensities must lie in [0, 1)")

    @property
    def size(self) -> int:
        return self.incomes.size

    @property
    def total_money(self) -> float:
        return float(np.sum(self.incomes))

    def copy(self) -> "Population":
        return Population(
            self.incomes.copy(),
            None if self.savings is None else self.savings.copy(),
        )


@dataclass(frozen=True)
class ModelSpec:
    """Which exchange variant to run and its saving parameters."""

    kind: str
    saving: float = 0.0
    saving_range: tuple[float, float] = CCM_DEFAULT_RANGE

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigError(f"unknown model kind {self.kind!r}")
        if self.kind == "cc" and not 0.0 <= self.saving < 1.0:
            raise ConfigError("cc saving propensity must lie in [0, 1)")
        lo, hi = self.saving_range
        if self.kind == "ccm" and not 0.0 <= lo <= hi < 1.0:
            raise ConfigError("ccm saving range must satisfy 0 <= lo <= hi < 1")

    @classmethod
    def dy(cls) -> "ModelSpec":
        return cls("dy")

    @classmethod
    def cc(cls, saving: float) -> "ModelSpec":
        return cls("cc", saving=saving)

    @classmethod
    def ccm(cls, lo: float = CCM_DEFAULT_RANGE[0], hi: float = CCM_DEFAULT_RANGE[1]) -> "ModelSpec":
        return cls("ccm", saving_range=(lo, hi))

    def draw_savings(self, k: int, rng: np.random.Generator) -> np.ndarray:
        """Saving propensities for k (new) agents under this model."""
        if self.kind == "dy":
            return np.zeros(k)
        if self.kind == "cc":
            return np.full(k, self.saving)
        lo, hi = self.saving_range
        return rng.uniform(lo, hi, k)


@dataclass(frozen=True)
class RunConfig:
    agents: int
    total_money: float
    model: ModelSpec
    seed: int
    sweeps: int
    snapshot_every: int = 1
    init: str | Sequence[float] = "equal"

    def __post_init__(self):
        if not isinstance(self.agents, int) or self.agents < 2:
            raise ConfigError("agents must be an integer >= 2")
        if not self.total_money > 0:
            raise ConfigError("total_money must be positive")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if not isinstance(self.sweeps, int) or self.sweeps < 0:
            raise ConfigError("sweeps must be a non-negative integer")
        if not isinstance(self.snapshot_every, int) or self.snapshot_every < 1:
            raise ConfigError("snapshot_every must be a positive integer")
        if self.sweeps > 0 and self.snapshot_every > self.sweeps:
            raise ConfigError("snapshot_every must not exceed sweeps")
        if isinstance(self.init, str):
            if self.init not in INIT_POLICIES:
                raise ConfigError(f"unknown init policy {self.init!r}")
        else:
            vals = np.asarray(self.init, dtype=np.float64)
            if vals.size != self.agents:
                raise ConfigError("explicit init must list one income per agent")
            if vals.size and vals.min() < 0:
                raise ConfigError("explicit init incomes must be non-negative")
            total = float(vals.sum())
            if abs(total - self.total_money) > 1e-12 * self.total_money:
                raise ConfigError(
                    "explicit init incomes must sum to total_money "
                    f"(got {total!r}, expected {self.total_money!r})"
                )


@dataclass(frozen=True)
class Snapshot:
    """Income state after ``sweep_index`` completed sweeps."""

    sweep_index: int
    incomes: np.ndarray
    total_money: float
    model_tag: str
    seed: int


def init_population(agents: int, total_money: float, policy="equal") -> Population:
    """Build the starting incomes: equal shares, one-agent delta, or explicit."""
    if not isinstance(agents, int) or agents < 2:
        raise ConfigError("agents must be an integer >= 2")
    if not total_money > 0:
        raise ConfigError("total_money must be positive")
    if isinstance(policy, str):
        if policy == "equal":
            incomes = np.full(agents, total_money / agents)
        elif policy == "delta":
            incomes = np.zeros(agents)
            incomes[0] = total_money
        else:
            raise ConfigError(f"unknown init policy {policy!r}")
    else:
        incomes = np.asarray(policy, dtype=np.float64)
        if incomes.size != agents:
            raise ConfigError("explicit init must list one income per agent")
        if incomes.min() < 0:
            raise ConfigError("explicit init incomes must be non-negative")
        if abs(float(incomes.sum()) - total_money) > 1e-12 * total_money:
            raise ConfigError("explicit init incomes must sum to total_money")
        incomes = incomes.copy()
    return Population(incomes)


def exchange_pair(x_i: float, x_j: float, lam_i: float, lam_j: float, eps: float):
    """Apply the pair exchange rule to two incomes; returns the new pair."""
    if x_i < 0 or x_j < 0:
        raise ParameterError("incomes must be non-negative")
    if not (0 <= lam_i < 1 and 0 <= lam_j < 1):
        raise ParameterError("saving propensities must lie in [0, 1)")
    if not 0 <= eps <= 1:
        raise ParameterError("split fraction must lie in [0, 1]")
    d = (1.0 - lam_i) * x_i + (1.0 - lam_j) * x_j
    return lam_i * x_i + eps * d, lam_j * x_j + (1.0 - eps) * d


def _savings_for(pop: Population, model: ModelSpec) -> np.ndarray:
    if pop.savings is not None:
        return pop.savings
    if model.kind == "ccm":
        raise StateError("ccm model requires per-agent savings to be assigned")
    return model.draw_savings(pop.size, rng=None)  # deterministic for dy/cc


def sweep(pop: Population, model: ModelSpec, rng: np.random.Generator) -> Population:
    """Run one sweep (n pair interactions) and return the new population."""
    if pop.size < 2:
        raise StateError("population must contain at least 2 agents")
    savings = _savings_for(pop, model)
    out = pop.copy()
    draws = rng.random((pop.size, 3))
    sweep_inplace(out.incomes, savings, draws)
    return out


@dataclass
class _RunState:
    """Mutable state threaded through a run; shared with the scenario loop."""

    incomes: np.ndarray
    savings: np.ndarray
    rng: np.random.Generator
    model_tag: str
    seed: int
    snapshots: list[Snapshot] = field(default_factory=list)

    def emit(self, sweep_index: int) -> Snapshot:
        snap = Snapshot(
            sweep_index=sweep_index,
            incomes=self.incomes.copy(),
            total_money=float(np.sum(self.incomes)),
            model_tag=self.model_tag,
            seed=self.seed,
        )
        self.snapshots.append(snap)
        return snap

    def advance(self) -> None:
        if self.incomes.size < 2:
            raise StateError("population shrank below 2 agents")
        draws = self.rng.random((self.incomes.size, 3))
        sweep_inplace(self.incomes, self.savings, draws)


def _init_state(config: RunConfig) -> _RunState:
    rng = np.random.Generator(np.random.PCG64(config.seed))
    pop = init_population(config.agents, config.total_money, config.init)
    savings = config.model.draw_savings(config.agents, rng)
    return _RunState(
        incomes=pop.incomes,
        savings=savings,
        rng=rng,
        model_tag=config.model.kind,
        seed=config.seed,
    )


def run(config: RunConfig) -> list[Snapshot]:
    """Run the closed system; snapshots at sweep 0 and every snapshot_every."""
    state = _init_state(config)
    state.emit(0)
    for t in range(config.sweeps):
        state.advance()
        done = t + 1
        if done % config.snapshot_every == 0:
            state.emit(done)
    return state.snapshots
