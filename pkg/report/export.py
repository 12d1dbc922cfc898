# ----------------------- report/export.py -----------------------
"""CSV writers/readers. Column orders below are the file contract."""
from __future__ import annotations
import math
from dataclasses import fields
from typing import Any, Dict, Iterable, List, Optional, Sequence

import pandas as pd

from core.metrics import MetricsReport
from utils.storage import atomic_write_text

SUMMARY_COLUMNS = [
    "lambda", "policy", "seed",
    "access_prob", "holding_prob", "mean_throughput", "median_sinr_db", "mean_abs_hm_deviation", "mean_load",
    "attempts", "admitted", "blocked_coverage", "blocked_resource", "dropped", "completed",
    "active_at_end", "handovers", "rescue_handovers", "event_hash",
]
CDF_COLUMNS = ["quantile", "db"]
EVENT_COLUMNS = ["time", "event", "user", "from_cell", "to_cell"]
HM_COLUMNS = ["time", "e", "k", "margin_db"]

# summary column -> MetricsReport field
_RENAMED = {
    "lambda": "arrival_rate",
    "access_prob": "access_probability",
    "holding_prob": "holding_probability",
    "mean_throughput": "mean_user_throughput",
}
_COUNTERS = ("attempts", "admitted", "blocked_coverage", "blocked_resource", "dropped", "completed",
             "active_at_end", "handovers", "rescue_handovers")


def run_key(policy: str, arrival_rate: float, seed: int) -> str:
    return f"{policy}_lam{arrival_rate:g}_seed{int(seed)}"


def _write_frame(df: pd.DataFrame, path: str) -> str:
    atomic_write_text(path, df.to_csv(index=False, lineterminator="\n"))
    return path


def _read_frame(path: str, **kw) -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip", **kw)


# =========================
# Sweep / run summary
# =========================

def report_row(rep: MetricsReport) -> Dict[str, Any]:
    row: Dict[str, Any] = {}
    for col in SUMMARY_COLUMNS:
        v = getattr(rep, _RENAMED.get(col, col))
        row[col] = float("nan") if v is None else v
    return row


def summary_frame(reports: Iterable[MetricsReport]) -> pd.DataFrame:
    rows = [report_row(r) for r in reports]
    df = pd.DataFrame(rows, columns=SUMMARY_COLUMNS)
    return df.sort_values(["lambda", "policy", "seed"], kind="mergesort").reset_index(drop=True)


def write_summary_csv(reports: Iterable[MetricsReport], path: str) -> str:
    return _write_frame(summary_frame(reports), path)


def read_summary_csv(path: str) -> pd.DataFrame:
    df = _read_frame(path, dtype={"policy": str, "event_hash": str})
    missing = [c for c in SUMMARY_COLUMNS if c not in df.columns]
    if missing:
        raise ValueError(f"{path}: missing summary columns {missing}")
    return df


def _opt(v: Any) -> Optional[float]:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return None
    return float(v)


def report_from_row(row: Dict[str, Any]) -> MetricsReport:
    """Inverse of `report_row` for the summary fields; CDF and per-cell loads are not in the summary."""
    names = {f.name for f in fields(MetricsReport)}
    kw: Dict[str, Any] = {}
    for col in SUMMARY_COLUMNS:
        name = _RENAMED.get(col, col)
        if name not in names:
            continue
        v = row[col]
        if col == "policy":
            kw[name] = str(v)
        elif col == "event_hash":
            kw[name] = "" if v is None or (isinstance(v, float) and math.isnan(v)) else str(v)
        elif col == "seed" or col in _COUNTERS:
            kw[name] = int(v)
        elif col == "lambda":
            kw[name] = float(v)
        else:
            kw[name] = _opt(v)
    return MetricsReport(**kw)


def read_reports(path: str) -> List[MetricsReport]:
    return [report_from_row(r) for r in read_summary_csv(path).to_dict("records")]


# =========================
# Per-run tables
# =========================

def write_sinr_cdf(rep: MetricsReport, path: str) -> str:
    return _write_frame(pd.DataFrame(list(rep.sinr_cdf), columns=CDF_COLUMNS), path)


def read_sinr_cdf(path: str) -> pd.DataFrame:
    return _read_frame(path)


def write_event_log(rows: Sequence[tuple], path: str) -> str:
    return _write_frame(pd.DataFrame(list(rows or []), columns=EVENT_COLUMNS), path)


def write_hm_log(rows: Sequence[tuple], path: str) -> str:
    return _write_frame(pd.DataFrame(list(rows or []), columns=HM_COLUMNS), path)


def write_paired_summary(df: pd.DataFrame, path: str) -> str:
    return _write_frame(df, path)
# ----------------------- /report/export.py -----------------------
