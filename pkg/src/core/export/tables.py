"""
CSV emission for traces and sweeps. Floats are written with 17 significant
digits so reruns diff cleanly.
"""
import csv
import os
from typing import Dict, List, Sequence

import numpy as np

from ..errors import InputError
from ..logging_utils import get_logger

logger = get_logger(__name__)

TRACE_COLUMNS = ("t", "regret_mean", "regret_std", "oracle_rev_mean", "policy_rev_mean", "tau_mean", "good_event_frac")
SWEEP_COLUMNS = ("N", "algorithm", "final_regret_mean", "final_regret_std")


def format_float(value: float) -> str:
    return format(float(value), ".17g")


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def write_trace_csv(summary, path: str) -> str:
    """Write one row per round of a ReplicationSummary."""
    _ensure_parent(path)
    columns = (
        summary.regret_mean,
        summary.regret_std,
        summary.oracle_rev_mean,
        summary.policy_rev_mean,
        summary.tau_mean,
        summary.good_event_frac,
    )
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for t in range(summary.regret_mean.shape[0]):
            writer.writerow([t + 1] + [format_float(column[t]) for column in columns])
    logger.info("Wrote trace to %s", path)
    return path


def write_sweep_csv(rows: Sequence, path: str) -> str:
    _ensure_parent(path)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            writer.writerow([row.N, row.algorithm, format_float(row.final_regret_mean), format_float(row.final_regret_std)])
    logger.info("Wrote sweep table to %s", path)
    return path


def read_trace_csv(path: str) -> Dict[str, np.ndarray]:
    """Load a trace.csv back into column arrays keyed by header name."""
    if not os.path.isfile(path):
        raise InputError(f"trace file not found: {path}")
    with open(path, "r", newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        missing = [c for c in TRACE_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise InputError(f"{path} is missing columns: {', '.join(missing)}")
        rows: List[dict] = list(reader)
    return {column: np.array([float(row[column]) for row in rows]) for column in TRACE_COLUMNS}
