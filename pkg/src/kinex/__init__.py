"""Kinetic wealth-exchange simulation and income-distribution analysis."""

from .analysis import (
    AlphaPoint,
    Ccdf,
    FitConfig,
    Histogram,
    RelativeCurve,
    Sample,
    TailFit,
    alpha_timeseries,
    ccdf,
    count_modes,
    fit_pareto_hill,
    fit_pareto_ls,
    gini,
    ks_distance,
    pdf_histogram,
    relative_ccdf,
    select_xmin,
)
from .engine import (
    ModelSpec,
    Population,
    RunConfig,
    Snapshot,
    exchange_pair,
    init_population,
    run,
    sweep,
)
from .events import (
    AgentEntry,
    AgentExit,
    Event,
    Inflation,
    MoneyInjection,
    Schedule,
    SectorTransfer,
    Unemployment,
    apply_inflation,
    apply_unemployment,
    adjust_agents,
    inject_money,
    run_scenario,
    sector_transfer,
)

__version__ = "0.1.0"
