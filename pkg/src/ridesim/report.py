"""Output artifacts: outcome log, statistics and bench tables."""

import csv
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

from .dispatch import PHASES, DispatchOutcome
from .search import INFINITY, SearchCounters


def _finite(value: Any) -> Any:
    return None if value == INFINITY else value


def outcome_record(outcome: DispatchOutcome, counters: bool = False) -> Dict[str, Any]:
    """One outcome as a JSON-ready dictionary; wall-clock timings are left out."""
    record: Dict[str, Any] = {
        "request": outcome.request.id,
        "kind": outcome.kind,
        "cost": _finite(outcome.cost),
        "breakdown": {k: _finite(v) for k, v in outcome.breakdown.as_dict().items()},
    }
    insertion = outcome.insertion
    if insertion is not None:
        record.update({
            "vehicle": insertion.vehicle_id,
            "i": insertion.i,
            "j": insertion.j,
            "pickup": insertion.pickup.vertex,
            "pickup_walk": insertion.pickup.walk,
            "dropoff": insertion.dropoff.vertex,
            "dropoff_walk": insertion.dropoff.walk,
        })
    elif outcome.kind == "pseudo":
        record["walk"] = _finite(outcome.walk)
    if counters:
        record["counters"] = {phase: c.as_dict() for phase, c in outcome.counters.items()}
    return record


def write_outcomes(path: Path, outcomes: Iterable[DispatchOutcome], counters: bool = False) -> Path:
    """Write one JSON object per line, keys sorted so logs compare byte for byte."""
    with open(path, 'w') as f:
        for outcome in outcomes:
            f.write(json.dumps(outcome_record(outcome, counters), sort_keys=True) + "\n")
    return path


def write_stats(path: Path, stats) -> Path:
    """Write the statistics as a one-row CSV."""
    row = stats.as_dict()
    with open(path, 'w', newline='') as csvfile:
        writer = csv.DictWriter(csvfile, fieldnames=list(row.keys()))
        writer.writeheader()
        writer.writerow(row)
    return path


COUNTER_COLUMNS = ("relaxed_edges", "scanned_entries", "settled_labels")


def bench_row(
    label: Dict[str, Any],
    mean_timings_ms: Dict[str, float],
    request_count: int,
    phase_counters: Optional[Dict[str, SearchCounters]] = None,
) -> Dict[str, Any]:
    """One bench table row: configuration, per-phase mean ms and optional mean counters."""
    row: Dict[str, Any] = dict(label)
    for phase in PHASES:
        row[f"{phase}_ms"] = round(mean_timings_ms.get(phase, 0.0), 4)
    if phase_counters is not None:
        for phase in PHASES:
            counters = phase_counters.get(phase, SearchCounters())
            for name in COUNTER_COLUMNS:
                mean = getattr(counters, name) / request_count if request_count else 0.0
                row[f"{phase}_{name}"] = round(mean, 2)
    return row


def write_bench(path: Path, rows: Sequence[Dict[str, Any]]) -> Path:
    if not rows:
        raise ValueError("No bench rows to write")
    fieldnames: List[str] = list(rows[0].keys())
    with open(path, 'w', newline='') as csvfile:
        writer = csv.DictWriter(csvfile, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
    return path
