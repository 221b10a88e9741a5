"""Atomic report emission: one CSV per series plus a JSON manifest."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from ..divergence import rows_to_csv
from .experiments import ExperimentResult


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def series_rows(entry: dict) -> list[dict]:
    rows = []
    stderr = entry.get("stderr")
    for i, (n, v) in enumerate(zip(entry["horizons"], entry["values"])):
        v = float(v)
        rows.append({"n": n, "value": v, "value_over_n": v / n,
                     "stderr": "" if stderr is None else float(stderr[i]),
                     "mode": entry["mode"], "seed": "" if entry.get("seed") is None else entry["seed"]})
    return rows


def write_result(result: ExperimentResult, out_dir: Path, fmt: str = "csv") -> list[Path]:
    """Write ``<out>/<experiment>/`` with series files and ``manifest.json``."""
    base = Path(out_dir) / result.spec.name
    written = []
    for name, entry in result.payload.items():
        if entry.get("kind") != "divergence":
            continue
        if fmt == "csv":
            path = base / f"{name}.csv"
            atomic_write(path, rows_to_csv(series_rows(entry)))
        else:
            path = base / f"{name}.json"
            atomic_write(path, json.dumps(entry, indent=2, sort_keys=True))
        written.append(path)
    manifest = base / "manifest.json"
    atomic_write(manifest, json.dumps(result.to_dict(), indent=2, sort_keys=True))
    written.append(manifest)
    return written
