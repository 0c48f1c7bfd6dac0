"""Command-line entry point.

Subcommands: ``simulate`` (closed run), ``scenario`` (run with scheduled
perturbations), ``ingest validate`` and ``analyze``.  Exit codes: 0 success,
1 runtime or data failure, 2 usage or configuration error.  Diagnostics go
to stderr; tables go to stdout or, with ``-o``, to files plus a manifest.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis, ingest, persist
from .config import ScenarioConfig, load_scenario_config
from .engine import Snapshot, run
from .errors import ConfigError, DataError, KinexError
from .events import run_scenario


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _load_samples(path) -> list[tuple[object, analysis.Sample]]:
    """Read either a snapshot table or an income table as labelled samples."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
    if header == "sweep_index,agent_index,income":
        return [
            (sweep, analysis.Sample(values))
            for sweep, values in persist.read_snapshot_table(path)
        ]
    samples, report = ingest.read_income_table(path)
    if report.rows_dropped:
        _log(f"{path}: dropped {report.rows_dropped} rows")
    labelled = sorted(samples.items(), key=lambda kv: (kv[0] is None, kv[0]))
    return [(label, sample) for label, sample in labelled]


def _load_one_sample(path) -> analysis.Sample:
    labelled = _load_samples(path)
    if len(labelled) != 1:
        raise DataError(
            f"{path}: holds {len(labelled)} samples; pick one period or snapshot"
        )
    return labelled[0][1]


def _emit(tables: dict[str, str], prefix: str | None) -> None:
    if prefix is None:
        for text in tables.values():
            sys.stdout.write(text)
    else:
        persist.write_analysis_tables(tables, prefix)
        _log(f"wrote {', '.join(sorted(tables))} under prefix {prefix}")


def _fit_config(args) -> analysis.FitConfig:
    return analysis.FitConfig(
        method=args.method,
        xmin_method=args.xmin_method,
        top_fraction=args.top_fraction,
    )


def _pick_xmin(sample: analysis.Sample, args) -> float:
    if args.xmin is not None:
        return args.xmin
    return analysis.select_xmin(sample, args.xmin_method, args.top_fraction)


def _analysis_tables(cfg: ScenarioConfig, snapshots: list[Snapshot]) -> dict[str, str]:
    tables: dict[str, str] = {}
    final = analysis.Sample.from_snapshot(snapshots[-1])
    for name in cfg.tables:
        if name == "ccdf":
            tables["ccdf.csv"] = persist.ccdf_table_text(analysis.ccdf(final))
        elif name == "pdf":
            tables["pdf.csv"] = persist.histogram_table_text(
                analysis.pdf_histogram(final)
            )
        elif name == "alpha":
            series = analysis.alpha_timeseries(snapshots, cfg.fit)
            tables["alpha.csv"] = persist.alpha_table_text(series)
        elif name == "gini":
            series = [
                (snap.sweep_index, analysis.gini(analysis.Sample.from_snapshot(snap)))
                for snap in snapshots
            ]
            tables["gini.csv"] = persist.gini_table_text(series)
        elif name == "relative":
            if cfg.reference_sample is not None:
                reference, _ = ingest.read_single_sample(cfg.reference_sample)
                tag = str(cfg.reference_sample)
            else:
                matches = [
                    s for s in snapshots if s.sweep_index == cfg.reference_snapshot
                ]
                if not matches:
                    raise ConfigError(
                        f"no snapshot at sweep {cfg.reference_snapshot} for reference"
                    )
                reference = analysis.Sample.from_snapshot(matches[0])
                tag = f"sweep {cfg.reference_snapshot}"
            curve = analysis.relative_ccdf(final, reference, reference_tag=tag)
            tables["relative.csv"] = persist.relative_table_text(curve)
    return tables


def _cmd_run(args, scenario: bool) -> int:
    cfg = load_scenario_config(args.config)
    if not scenario and len(cfg.schedule) > 0:
        raise ConfigError("simulate runs a closed system; use 'scenario' for schedules")
    out_dir = Path(args.output) if args.output else cfg.output_dir
    started = time.perf_counter()
    if scenario:
        snapshots = run_scenario(cfg.run, cfg.schedule)
    else:
        snapshots = run(cfg.run)
    elapsed = time.perf_counter() - started
    extra = _analysis_tables(cfg, snapshots)
    persist.write_run_outputs(cfg.echo, snapshots, out_dir, extra)
    _log(
        f"{len(snapshots)} snapshots, {cfg.run.sweeps} sweeps in {elapsed:.2f}s; "
        f"outputs in {out_dir}"
    )
    return 0


def _cmd_ingest_validate(args) -> int:
    samples, report = ingest.read_income_table(args.file, strict=not args.lenient)
    print(f"rows_in,{report.rows_in}")
    print(f"rows_kept,{report.rows_kept}")
    print(f"rows_dropped,{report.rows_dropped}")
    for label, sample in sorted(samples.items(), key=lambda kv: (kv[0] is None, kv[0])):
        stats = ingest.summarize(sample)
        prefix = "" if label is None else f"{label}."
        for key in ("rows", "min", "max", "zero_mass_fraction", "total_weight"):
            print(f"{prefix}{key},{stats[key]}")
    for problem in report.problems:
        _log(problem)
    return 0


def _cmd_analyze(args) -> int:
    kind = args.what
    if kind == "ccdf":
        sample = _load_one_sample(args.input)
        curve = analysis.ccdf(sample, normalized=not args.raw)
        _emit({"ccdf.csv": persist.ccdf_table_text(curve)}, args.output)
    elif kind == "pdf":
        sample = _load_one_sample(args.input)
        hist = analysis.pdf_histogram(sample, scheme=args.scheme, bins=args.bins)
        _log(f"zero_mass_fraction {hist.zero_mass_fraction}")
        _emit({"pdf.csv": persist.histogram_table_text(hist)}, args.output)
    elif kind == "fit":
        sample = _load_one_sample(args.input)
        x_min = _pick_xmin(sample, args)
        if args.method == "hill":
            fit = analysis.fit_pareto_hill(sample, x_min)
        else:
            fit = analysis.fit_pareto_ls(analysis.ccdf(sample), x_min)
        text = persist._table(
            ("alpha", "amplitude", "x_min", "n_tail", "stderr", "method"),
            [(persist.fmt(fit.alpha), persist.fmt(fit.amplitude),
              persist.fmt(fit.x_min), str(fit.n_tail),
              persist.fmt(fit.stderr), fit.method)],
        )
        _emit({"fit.csv": text}, args.output)
    elif kind == "relative":
        sample = _load_one_sample(args.input)
        reference = _load_one_sample(args.reference)
        curve = analysis.relative_ccdf(sample, reference, reference_tag=str(args.reference))
        if curve.dropped_points:
            _log(f"dropped {curve.dropped_points} grid points with empty reference")
        _emit({"relative.csv": persist.relative_table_text(curve)}, args.output)
    elif kind == "gini":
        series = [
            (label, analysis.gini(sample)) for label, sample in _load_samples(args.input)
        ]
        text = persist._table(
            ("t", "gini"), [(str(t), persist.fmt(g)) for t, g in series]
        )
        _emit({"gini.csv": text}, args.output)
    elif kind == "alpha":
        labelled = _load_samples(args.input)
        series = analysis.alpha_timeseries(
            [(i, sample) for i, (_, sample) in enumerate(labelled)], _fit_config(args)
        )
        for point, (label, _) in zip(series, labelled):
            point.t = label
        _emit({"alpha.csv": persist.alpha_table_text(series)}, args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kinex",
        description="Kinetic wealth-exchange simulator and income-distribution toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="closed-system run from a config file")
    p_sim.add_argument("config")
    p_sim.add_argument("-o", "--output", help="override the output directory")

    p_sce = sub.add_parser("scenario", help="run with scheduled perturbations")
    p_sce.add_argument("config")
    p_sce.add_argument("-o", "--output", help="override the output directory")

    p_ing = sub.add_parser("ingest", help="income table utilities")
    ing_sub = p_ing.add_subparsers(dest="ingest_command", required=True)
    p_val = ing_sub.add_parser("validate", help="check a table and report stats")
    p_val.add_argument("file")
    p_val.add_argument("--lenient", action="store_true",
                       help="drop bad rows instead of aborting")

    p_ana = sub.add_parser("analyze", help="distribution statistics on a file")
    p_ana.add_argument("what", choices=("ccdf", "pdf", "fit", "relative", "gini", "alpha"))
    p_ana.add_argument("input", help="income table or snapshot table")
    p_ana.add_argument("-o", "--output", help="file prefix (default: stdout)")
    p_ana.add_argument("--raw", action="store_true", help="ccdf: raw weight counts")
    p_ana.add_argument("--bins", type=int, default=50)
    p_ana.add_argument("--scheme", choices=("linear", "logarithmic"), default="linear")
    p_ana.add_argument("--method", choices=("hill", "loglog-ls"), default="hill")
    p_ana.add_argument("--xmin", type=float, default=None)
    p_ana.add_argument("--xmin-method", choices=("top-fraction", "ks-min"),
                       default="top-fraction")
    p_ana.add_argument("--top-fraction", type=float, default=0.01)
    p_ana.add_argument("--reference", help="reference input for relative curves")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_run(args, scenario=False)
        if args.command == "scenario":
            return _cmd_run(args, scenario=True)
        if args.command == "ingest":
            return _cmd_ingest_validate(args)
        if args.command == "analyze":
            if args.what == "relative" and not args.reference:
                parser.error("analyze relative requires --reference")
            return _cmd_analyze(args)
        parser.error(f"unknown command {args.command!r}")
    except ConfigError as exc:
        _log(f"config error: {exc}")
        return 2
    except (KinexError, OSError) as exc:
        _log(f"error: {exc}")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
