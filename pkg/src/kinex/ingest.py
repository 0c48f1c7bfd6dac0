"""Reading external income tables.

The interchange format is UTF-8 comma-separated text with one header row.
Recognised columns: ``income`` (required), ``weight`` (optional, defaults to
1) and ``period`` (optional; rows are grouped into one sample per period).
Zero-income rows are kept deliberately; they carry the unemployment signal.

Strict mode (the default) aborts on the first bad row; lenient mode drops
bad rows and counts them.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import Sample
from .errors import ValidationError


@dataclass
class IngestReport:
    rows_in: int = 0
    rows_kept: int = 0
    rows_dropped: int = 0
    problems: list[str] = field(default_factory=list)


def read_income_table(path, strict: bool = True):
    """Parse an income table into samples keyed by period label.

    Returns (samples, report) where samples maps the period label (or None
    when the file has no period column) to a Sample.
    """
    path = Path(path)
    report = IngestReport()
    groups: dict[str | None, tuple[list[float], list[float]]] = {}

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        cols = [name.strip().lower() for name in header]
        if "income" not in cols:
            raise ValidationError(f"{path}: missing required column 'income'")
        i_income = cols.index("income")
        i_weight = cols.index("weight") if "weight" in cols else None
        i_period = cols.index("period") if "period" in cols else None

        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            report.rows_in += 1
            problem = None
            income = weight = None
            try:
                income = float(row[i_income])
            except (ValueError, IndexError):
                problem = f"line {lineno}: malformed income field"
            if problem is None and income < 0:
                problem = f"line {lineno}: negative income {income!r}"
            if problem is None and i_weight is not None:
                try:
                    weight = float(row[i_weight])
                except (ValueError, IndexError):
                    problem = f"line {lineno}: malformed weight field"
                if problem is None and weight <= 0:
                    problem = f"line {lineno}: non-positive weight {weight!r}"
            if problem is not None:
                if strict:
                    raise ValidationError(f"{path}: {problem}")
                report.rows_dropped += 1
                report.problems.append(problem)
                continue
            period = row[i_period].strip() if i_period is not None else None
            incomes, weights = groups.setdefault(period, ([], []))
            incomes.append(income)
            weights.append(1.0 if weight is None else weight)
            report.rows_kept += 1

    samples = {
        period: Sample(np.array(vals), np.array(ws))
        for period, (vals, ws) in groups.items()
    }
    return samples, report


def read_single_sample(path, strict: bool = True) -> tuple[Sample, IngestReport]:
    """Read a table that holds exactly one sample (no or one period label)."""
    samples, report = read_income_table(path, strict=strict)
    if len(samples) != 1:
        raise ValidationError(
            f"{path}: expected a single sample, found {len(samples)} periods"
        )
    return next(iter(samples.values())), report


def summarize(sample: Sample) -> dict:
    """Validation stats for one sample: counts, range, zero mass, weight."""
    positive = sample.values[sample.values > 0]
    return {
        "rows": int(sample.size),
        "min": float(sample.values.min()) if sample.size else float("nan"),
        "max": float(sample.values.max()) if sample.size else float("nan"),
        "min_positive": float(positive.min()) if positive.size else float("nan"),
        "zero_mass_fraction": sample.zero_mass_fraction() if sample.size else float("nan"),
        "total_weight": sample.total_weight,
    }
