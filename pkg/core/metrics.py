# ----------------------- core/metrics.py -----------------------
"""KPIs of a run (access, holding, goodput, SINR distribution, margin deviation) and sweep analytics."""
from __future__ import annotations
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from config import settings as S
from core.errors import ConsistencyError


@dataclass
class MetricsAccumulator:
    attempts: int = 0
    admitted: int = 0
    blocked_coverage: int = 0
    blocked_resource: int = 0
    dropped: int = 0
    completed: int = 0
    active_at_end: int = 0
    handovers: int = 0
    rescue_handovers: int = 0
    throughput_samples: List[float] = field(default_factory=list)   # bytes/s per completed session
    sinr_samples_db: List[float] = field(default_factory=list)
    load_series: List[np.ndarray] = field(default_factory=list)     # per-cell committed load per snapshot
    hm_deviation_series: List[float] = field(default_factory=list)  # mean |HM - f0| per snapshot

    def check(self) -> None:
        if self.admitted > self.attempts:
            raise ConsistencyError(f"admitted {self.admitted} > attempts {self.attempts}")
        if self.dropped + self.completed > self.admitted:
            raise ConsistencyError(
                f"dropped {self.dropped} + completed {self.completed} > admitted {self.admitted}"
            )


# =========================
# KPIs (None = undefined)
# =========================

def access_probability(acc: MetricsAccumulator) -> Optional[float]:
    if acc.attempts <= 0:
        return None
    return acc.admitted / acc.attempts


def holding_probability(acc: MetricsAccumulator) -> Optional[float]:
    if acc.admitted <= 0:
        return None
    return 1.0 - acc.dropped / acc.admitted


def mean_user_throughput(acc: MetricsAccumulator) -> Optional[float]:
    if not acc.throughput_samples:
        return None
    return float(np.mean(acc.throughput_samples))


def sinr_cdf(acc: MetricsAccumulator, quantiles: Sequence[float]) -> Optional[List[float]]:
    """Empirical SINR quantiles in dB, linear interpolation between sorted samples."""
    if not acc.sinr_samples_db:
        return None
    vals = np.quantile(np.asarray(acc.sinr_samples_db, dtype=float), np.asarray(quantiles, dtype=float))
    return [float(v) for v in np.maximum.accumulate(vals)]


# =========================
# Report
# =========================

@dataclass(frozen=True)
class MetricsReport:
    policy: str
    arrival_rate: float
    seed: int
    access_probability: Optional[float]
    holding_probability: Optional[float]
    mean_user_throughput: Optional[float]          # bytes/s
    median_sinr_db: Optional[float]
    mean_abs_hm_deviation: Optional[float]         # dB
    mean_load: Optional[float] = None              # network mean of the committed load
    sinr_cdf: Tuple[Tuple[float, float], ...] = ()
    cell_mean_loads: Tuple[float, ...] = ()
    attempts: int = 0
    admitted: int = 0
    blocked_coverage: int = 0
    blocked_resource: int = 0
    dropped: int = 0
    completed: int = 0
    active_at_end: int = 0
    handovers: int = 0
    rescue_handovers: int = 0
    event_hash: str = ""

    def conserves(self) -> bool:
        return (self.attempts == self.admitted + self.blocked_coverage + self.blocked_resource
                and self.admitted == self.completed + self.dropped + self.active_at_end)


def build_report(acc: MetricsAccumulator, policy: str, arrival_rate: float, seed: int,
                 event_hash: str = "", quantiles: Sequence[float] = S.SINR_QUANTILES) -> MetricsReport:
    acc.check()
    cdf = sinr_cdf(acc, quantiles)
    median = sinr_cdf(acc, [0.5])
    loads = np.mean(np.vstack(acc.load_series), axis=0) if acc.load_series else np.zeros(0)
    return MetricsReport(
        policy=policy,
        arrival_rate=float(arrival_rate),
        seed=int(seed),
        access_probability=access_probability(acc),
        holding_probability=holding_probability(acc),
        mean_user_throughput=mean_user_throughput(acc),
        median_sinr_db=None if median is None else median[0],
        mean_abs_hm_deviation=float(np.mean(acc.hm_deviation_series)) if acc.hm_deviation_series else None,
        sinr_cdf=tuple(zip((float(q) for q in quantiles), cdf)) if cdf is not None else (),
        cell_mean_loads=tuple(float(v) for v in loads),
        mean_load=float(loads.mean()) if loads.size else None,
        attempts=acc.attempts,
        admitted=acc.admitted,
        blocked_coverage=acc.blocked_coverage,
        blocked_resource=acc.blocked_resource,
        dropped=acc.dropped,
        completed=acc.completed,
        active_at_end=acc.active_at_end,
        handovers=acc.handovers,
        rescue_handovers=acc.rescue_handovers,
        event_hash=event_hash,
    )


# =========================
# Sweep analytics (input: sweep summary rows)
# =========================

def _policy_curve(df: pd.DataFrame, policy: str, column: str) -> pd.Series:
    sub = df[df["policy"] == policy]
    return sub.groupby("lambda")[column].mean().sort_index()


def capacity_at_access(df: pd.DataFrame, level: float = S.TARGET_ACCESS_LEVEL) -> Dict[str, Optional[float]]:
    """Arrival rate where the seed-averaged access probability first falls to `level`, per policy."""
    out: Dict[str, Optional[float]] = {}
    for policy in sorted(df["policy"].unique()):
        curve = _policy_curve(df, policy, "access_prob").dropna()
        lam = curve.index.to_numpy(dtype=float)
        acc = curve.to_numpy(dtype=float)
        out[policy] = None
        for i in range(len(lam) - 1):
            if acc[i] >= level > acc[i + 1]:
                out[policy] = float(lam[i] + (acc[i] - level) * (lam[i + 1] - lam[i]) / (acc[i] - acc[i + 1]))
                break
    return out


def paired_summary(df: pd.DataFrame) -> pd.DataFrame:
    """Seed-averaged KPIs per λ for both policies side by side, with auto/fixed ratios."""
    cols = ["access_prob", "holding_prob", "mean_throughput", "median_sinr_db", "mean_abs_hm_deviation"]
    g = df.groupby(["lambda", "policy"])[cols].mean().unstack("policy")
    rows = []
    for lam in g.index:
        rec = {"lambda": float(lam)}
        for c in cols:
            a = g.loc[lam].get((c, "auto"), np.nan)
            f = g.loc[lam].get((c, "fixed"), np.nan)
            rec[f"{c}_auto"] = a
            rec[f"{c}_fixed"] = f
        a, f = rec["access_prob_auto"], rec["access_prob_fixed"]
        rec["access_gain"] = a / f if f and not np.isnan(f) else np.nan
        a, f = rec["mean_throughput_auto"], rec["mean_throughput_fixed"]
        rec["throughput_gain"] = a / f if f and not np.isnan(f) else np.nan
        rows.append(rec)
    return pd.DataFrame(rows)


def hm_deviation_trend(df: pd.DataFrame, policy: str = "auto") -> Optional[float]:
    """Spearman rank correlation of mean |HM - f0| against λ (ranks, then Pearson)."""
    curve = _policy_curve(df, policy, "mean_abs_hm_deviation").dropna()
    if len(curve) < 3:
        return None
    lam = pd.Series(curve.index.to_numpy(dtype=float))
    dev = pd.Series(curve.to_numpy(dtype=float))
    rho = lam.rank().corr(dev.rank())
    return None if pd.isna(rho) else float(rho)
# ----------------------- /core/metrics.py -----------------------
