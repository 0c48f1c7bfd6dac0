"""Scenario configuration files.

A run is described by one JSON document; the CLI treats it as the single
source of truth so a run can be replayed from the file alone.  The same
loader accepts a run manifest (its ``config`` entry is the original echo).

Layout::

    {
      "run": {
        "agents": 1000, "total_money": 100000.0,
        "model": {"kind": "cc", "saving": 0.5},
        "init": "equal",                # "equal" | "delta" | [incomes...]
        "seed": 42, "sweeps": 2000, "snapshot_every": 200
      },
      "schedule": [
        {"at_sweep": 500, "op": "inflation", "rate": 0.1},
        {"at_sweep": 600, "op": "inject", "amount": 50.0, "policy": "uniform"},
        {"at_sweep": 700, "op": "unemployment", "fraction": 0.8, "threshold": 20.0},
        {"at_sweep": 800, "op": "transfer", "donor": [0.0, 0.5],
         "recipient": [0.99, 1.0], "fraction": 0.3},
        {"at_sweep": 900, "op": "entry", "count": 5, "income": 10.0},
        {"at_sweep": 950, "op": "exit", "count": 5, "band": [0.0, 0.2]}
      ],
      "output": {"dir": "out", "tables": ["ccdf", "alpha", "gini"]},
      "analysis": {"fit": "hill", "xmin_method": "top-fraction",
                   "top_fraction": 0.01, "reference_snapshot": 0}
    }

Only ``run`` is mandatory.  The seed has no default on purpose.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .analysis import FitConfig
from .engine import ModelSpec, RunConfig
from .errors import ConfigError
from .events import (
    AgentEntry,
    AgentExit,
    Event,
    Inflation,
    MoneyInjection,
    Schedule,
    SectorTransfer,
    Unemployment,
)

KNOWN_TABLES = ("ccdf", "pdf", "alpha", "gini", "relative")


@dataclass
class ScenarioConfig:
    run: RunConfig
    schedule: Schedule
    output_dir: Path
    tables: tuple[str, ...] = ()
    fit: FitConfig = field(default_factory=FitConfig)
    reference_snapshot: int = 0
    reference_sample: Path | None = None
    echo: dict = field(default_factory=dict)


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ConfigError(f"{context}: missing required key {key!r}")
    return mapping[key]


def _parse_model(spec) -> ModelSpec:
    if not isinstance(spec, dict):
        raise ConfigError("model must be an object with a 'kind'")
    kind = _require(spec, "kind", "model")
    if kind == "dy":
        return ModelSpec.dy()
    if kind == "cc":
        return ModelSpec.cc(float(_require(spec, "saving", "cc model")))
    if kind == "ccm":
        lo, hi = spec.get("saving_range", (0.0, 0.9999))
        return ModelSpec.ccm(float(lo), float(hi))
    raise ConfigError(f"unknown model kind {kind!r}")


_OPERATORS = {
    "inflation": lambda e: Inflation(rate=float(_require(e, "rate", "inflation"))),
    "inject": lambda e: MoneyInjection(
        amount=float(_require(e, "amount", "inject")),
        policy=e.get("policy", "uniform"),
        band=tuple(e["band"]) if "band" in e else None,
    ),
    "unemployment": lambda e: Unemployment(
        fraction=float(_require(e, "fraction", "unemployment")),
        threshold=float(_require(e, "threshold", "unemployment")),
    ),
    "transfer": lambda e: SectorTransfer(
        donor=tuple(_require(e, "donor", "transfer")),
        recipient=tuple(_require(e, "recipient", "transfer")),
        fraction=float(_require(e, "fraction", "transfer")),
    ),
    "entry": lambda e: AgentEntry(
        count=int(_require(e, "count", "entry")),
        income=float(e.get("income", 0.0)),
    ),
    "exit": lambda e: AgentExit(
        count=int(_require(e, "count", "exit")),
        band=tuple(_require(e, "band", "exit")),
    ),
}


def _parse_event(entry) -> Event:
    if not isinstance(entry, dict):
        raise ConfigError("schedule entries must be objects")
    name = _require(entry, "op", "schedule entry")
    if name not in _OPERATORS:
        raise ConfigError(f"unknown operator {name!r}")
    at_sweep = int(_require(entry, "at_sweep", "schedule entry"))
    return Event(at_sweep=at_sweep, op=_OPERATORS[name](entry))


def load_scenario_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if "config" in doc and "run" not in doc:  # manifest replay
        doc = doc["config"]
    return parse_scenario_config(doc, base_dir=path.parent)


def parse_scenario_config(doc: dict, base_dir: Path = Path(".")) -> ScenarioConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config root must be an object")
    run_doc = _require(doc, "run", "config")
    if not isinstance(run_doc, dict):
        raise ConfigError("run must be an object")
    if "seed" not in run_doc:
        raise ConfigError("run: a seed is mandatory, refusing to invent one")
    init = run_doc.get("init", "equal")
    if isinstance(init, list):
        init = tuple(float(v) for v in init)
    run = RunConfig(
        agents=int(_require(run_doc, "agents", "run")),
        total_money=float(_require(run_doc, "total_money", "run")),
        model=_parse_model(_require(run_doc, "model", "run")),
        seed=int(run_doc["seed"]),
        sweeps=int(_require(run_doc, "sweeps", "run")),
        snapshot_every=int(run_doc.get("snapshot_every", 1)),
        init=init,
    )
    schedule = Schedule([_parse_event(e) for e in doc.get("schedule", [])])
    schedule.validate_range(run.sweeps)

    out_doc = doc.get("output", {})
    tables = tuple(out_doc.get("tables", ()))
    for name in tables:
        if name not in KNOWN_TABLES:
            raise ConfigError(f"unknown analysis table {name!r}")
    ana = doc.get("analysis", {})
    fit = FitConfig(
        method=ana.get("fit", "hill"),
        xmin_method=ana.get("xmin_method", "top-fraction"),
        top_fraction=float(ana.get("top_fraction", 0.01)),
        min_tail=int(ana.get("min_tail", 2)),
    )
    if fit.method not in ("hill", "loglog-ls"):
        raise ConfigError(f"unknown fit method {fit.method!r}")
    if fit.xmin_method not in ("top-fraction", "ks-min"):
        raise ConfigError(f"unknown x_min method {fit.xmin_method!r}")
    ref_sample = ana.get("reference_sample")
    return ScenarioConfig(
        run=run,
        schedule=schedule,
        output_dir=base_dir / out_doc.get("dir", "out"),
        tables=tables,
        fit=fit,
        reference_snapshot=int(ana.get("reference_snapshot", 0)),
        reference_sample=(base_dir / ref_sample) if ref_sample else None,
        echo=doc,
    )
