"""CSV and JSON writers for simulation and analysis results.

Floats are written with 17 significant digits so they read back bit-exact.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from .campaign import SimulationResult

REPLICATION_HEADER = ("replication", "breached", "breach_round", "breach_path", "rounds", "recipient_payoff")
AGGREGATE_HEADER = ("metric", "value", "ci_halfwidth")


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".17g")


def _write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"row has {len(row)} columns, header has {len(header)}")
            writer.writerow(row)
    return path


def write_results(result: SimulationResult, out_dir) -> tuple:
    """Write ``replications.csv`` and ``aggregates.csv``; return their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rep_rows = (
        (
            fmt(r.replication),
            fmt(r.breached),
            fmt(r.breach_round),
            r.breach_path.value if r.breach_path is not None else "",
            fmt(r.rounds),
            fmt(r.recipient_payoff),
        )
        for r in result.records
    )
    reps = _write_csv(out / "replications.csv", REPLICATION_HEADER, rep_rows)
    agg_rows = ((name, fmt(v), fmt(hw)) for name, (v, hw) in result.aggregates.items())
    aggs = _write_csv(out / "aggregates.csv", AGGREGATE_HEADER, agg_rows)
    return reps, aggs


def write_table(path, header, rows) -> Path:
    return _write_csv(Path(path), header, ([fmt(v) if not isinstance(v, str) else v for v in row] for row in rows))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if hasattr(obj, "item"):
        return obj.item()
    return obj


def write_json(path, payload) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
    return path
