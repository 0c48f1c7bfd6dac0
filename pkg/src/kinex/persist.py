"""Deterministic serialization of runs and analysis results.

All tables are comma-separated text with floats rendered at 17 significant
digits, enough for an exact float64 round trip, so identical inputs always
produce byte-identical files.  The run manifest is a JSON tree carrying the
full config echo plus SHA-256 checksums of every emitted file; feeding a
manifest back to the CLI replays the run bit-identically.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .analysis import AlphaPoint, Ccdf, Histogram, RelativeCurve, Sample
from .engine import Snapshot
from .errors import EmptyInputError

ARTIFACT_VERSION = "0.1.0"


def fmt(value: float) -> str:
    return format(float(value), ".17g")


class BatchWriter:
    """Collects whole-file payloads and commits them atomically.

    Files land via temp-file-plus-rename; if any write fails, files already
    committed in this batch are removed so no partial output survives.
    """

    def __init__(self):
        self._pending: list[tuple[Path, str]] = []

    def add(self, path, text: str) -> None:
        self._pending.append((Path(path), text))

    def commit(self) -> dict[str, str]:
        written: list[Path] = []
        checksums: dict[str, str] = {}
        try:
            for path, text in self._pending:
                path.parent.mkdir(parents=True, exist_ok=True)
                fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
                try:
                    with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                        fh.write(text)
                    os.replace(tmp, path)
                except BaseException:
                    if os.path.exists(tmp):
                        os.unlink(tmp)
                    raise
                written.append(path)
                checksums[path.name] = sha256_file(path)
        except BaseException:
            for path in written:
                try:
                    path.unlink()
                except OSError:
                    pass
            raise
        self._pending.clear()
        return checksums


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _table(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    return "\n".join(lines) + "\n"


def snapshot_table_text(snapshots: Sequence[Snapshot]) -> str:
    if not snapshots:
        raise EmptyInputError("no snapshots to write")
    rows = []
    for snap in snapshots:
        for agent, income in enumerate(snap.incomes):
            rows.append((str(snap.sweep_index), str(agent), fmt(income)))
    return _table(("sweep_index", "agent_index", "income"), rows)


def write_snapshot_table(snapshots: Sequence[Snapshot], path) -> None:
    writer = BatchWriter()
    writer.add(path, snapshot_table_text(snapshots))
    writer.commit()


def read_snapshot_table(path) -> list[tuple[int, np.ndarray]]:
    """Inverse of write_snapshot_table: (sweep_index, incomes) per snapshot,
    in file order (the same sweep index may appear around events)."""
    out: list[tuple[int, list[float]]] = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if header != ["sweep_index", "agent_index", "income"]:
            raise EmptyInputError(f"{path}: not a snapshot table")
        for line in fh:
            sweep_s, agent_s, income_s = line.rstrip("\n").split(",")
            sweep, agent = int(sweep_s), int(agent_s)
            if not out or agent == 0 and out[-1][1]:
                out.append((sweep, []))
            out[-1][1].append(float(income_s))
    return [(sweep, np.array(vals)) for sweep, vals in out]


def sample_table_text(sample: Sample) -> str:
    rows = (
        (fmt(v), fmt(w)) for v, w in zip(sample.values, sample.weights)
    )
    return _table(("income", "weight"), rows)


def ccdf_table_text(curve: Ccdf) -> str:
    rows = ((fmt(x), fmt(q)) for x, q in zip(curve.xs, curve.q))
    return _table(("x", "Q"), rows)


def histogram_table_text(hist: Histogram) -> str:
    rows = (
        (fmt(lo), fmt(hi), fmt(d))
        for lo, hi, d in zip(hist.edges[:-1], hist.edges[1:], hist.densities)
    )
    return _table(("bin_lo", "bin_hi", "density"), rows)


def alpha_table_text(series: Sequence[AlphaPoint]) -> str:
    rows = []
    for point in series:
        if point.fit is None:
            rows.append((str(point.t), "", "", "", "", "gap"))
        else:
            fit = point.fit
            rows.append(
                (str(point.t), fmt(fit.alpha), fmt(fit.stderr),
                 fmt(fit.x_min), str(fit.n_tail), "ok")
            )
    return _table(("t", "alpha", "stderr", "x_min", "n_tail", "status"), rows)


def relative_table_text(curve: RelativeCurve) -> str:
    rows = ((fmt(x), fmt(r)) for x, r in zip(curve.grid, curve.ratios))
    return _table(("x", "R"), rows)


def gini_table_text(series: Sequence[tuple[int, float]]) -> str:
    rows = ((str(t), fmt(g)) for t, g in series)
    return _table(("t", "gini"), rows)


def manifest_text(config_echo: dict, checksums: dict[str, str]) -> str:
    manifest = {
        "artifact_version": ARTIFACT_VERSION,
        "config": config_echo,
        "outputs": dict(sorted(checksums.items())),
    }
    return json.dumps(manifest, sort_keys=True, indent=2) + "\n"


def write_run_outputs(config_echo: dict, snapshots: Sequence[Snapshot],
                      out_dir, extra_tables: dict[str, str] | None = None,
                      manifest_name: str = "manifest.json") -> dict[str, str]:
    """Write snapshot table, optional analysis tables, and the manifest.

    Returns {file name: sha256}.  The manifest checksum covers every other
    file; the manifest itself is written last.
    """
    out_dir = Path(out_dir)
    writer = BatchWriter()
    writer.add(out_dir / "snapshots.csv", snapshot_table_text(snapshots))
    for name, text in (extra_tables or {}).items():
        writer.add(out_dir / name, text)
    checksums = writer.commit()
    final = BatchWriter()
    final.add(out_dir / manifest_name, manifest_text(config_echo, checksums))
    final.commit()
    return checksums


def verify_manifest(path) -> list[str]:
    """Names of files whose checksum no longer matches the manifest."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    bad = []
    for name, digest in manifest.get("outputs", {}).items():
        target = path.parent / name
        if not target.exists() or sha256_file(target) != digest:
            bad.append(name)
    return bad


def write_analysis_tables(tables: dict[str, str], path_prefix,
                          config_echo: dict | None = None) -> dict[str, str]:
    """Write named analysis tables (suffix -> text) plus a manifest.

    Files are named ``<prefix>_<suffix>``; the manifest is ``<prefix>_manifest.json``.
    """
    if not tables:
        raise EmptyInputError("no analysis tables to write")
    prefix = Path(path_prefix)
    writer = BatchWriter()
    for suffix, text in tables.items():
        writer.add(prefix.parent / f"{prefix.name}_{suffix}", text)
    checksums = writer.commit()
    final = BatchWriter()
    final.add(prefix.parent / f"{prefix.name}_manifest.json",
              manifest_text(config_echo or {}, checksums))
    final.commit()
    return checksums
