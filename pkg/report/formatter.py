# ----------------------- report/formatter.py -----------------------
from __future__ import annotations
from typing import Dict, Optional

from core.metrics import MetricsReport
from strategy.balancing import ValidationReport


def _pct(v: Optional[float]) -> str:
    return "n/a" if v is None else f"{100.0 * v:.2f}%"


def _num(v: Optional[float], unit: str = "", digits: int = 3) -> str:
    return "n/a" if v is None else f"{v:.{digits}f}{unit}"


def format_run_report(rep: MetricsReport) -> str:
    """
    One-run summary for the console. KPIs first, then the counters they come from.
    """
    thr = None if rep.mean_user_throughput is None else rep.mean_user_throughput / 1e6
    return f"""
📌 [RUN] policy={rep.policy} λ={rep.arrival_rate:g}/s seed={rep.seed}
• Access probability : {_pct(rep.access_probability)}
• Holding probability: {_pct(rep.holding_probability)}
• Mean throughput    : {_num(thr, ' MB/s')}
• Median SINR        : {_num(rep.median_sinr_db, ' dB', 2)}
• Mean |HM - f0|     : {_num(rep.mean_abs_hm_deviation, ' dB')}
• Mean committed load: {_pct(rep.mean_load)}
🔍 attempts={rep.attempts} admitted={rep.admitted} blocked(cov/res)={rep.blocked_coverage}/{rep.blocked_resource}
   completed={rep.completed} dropped={rep.dropped} active_at_end={rep.active_at_end}
   handovers={rep.handovers} rescues={rep.rescue_handovers}
#️⃣ events {rep.event_hash[:16]}
""".strip()


def format_validation(rep: ValidationReport) -> str:
    head = "✅ PASS" if rep.ok else "❌ FAIL"
    order = "?" if rep.order is None else rep.order
    lines = [
        f"{head} balancing f0={rep.f0:g} HM∈[{rep.hm_min:g}, {rep.hm_max:g}] order={order} ({rep.n_samples} points)",
        f"• monotone (non-increasing): {'yes' if rep.monotone else 'NO'}",
        f"• within [HM_min, HM_max]  : {'yes' if rep.in_range else 'NO'}",
        f"• f(x)+f(-x)=2f(0)         : {'yes' if rep.symmetric else 'NO'} (max error {rep.max_symmetry_error:.3e})",
        f"• clamped grid points      : {rep.clamped_points}",
    ]
    lines += [f"⚠️ {w}" for w in rep.warnings]
    lines += [f"❌ {v}" for v in rep.violations]
    return "\n".join(lines)


def format_sweep_summary(n_ok: int, n_failed: int, capacity: Dict[str, Optional[float]],
                         trend: Optional[float], level: float) -> str:
    lines = [f"📊 [SWEEP] runs ok={n_ok} failed={n_failed}"]
    for policy, lam in capacity.items():
        lines.append(f"• λ at {_pct(level)} access ({policy}): {_num(lam, '/s', 2)}")
    auto, fixed = capacity.get("auto"), capacity.get("fixed")
    if auto is not None and fixed:
        lines.append(f"• capacity gain auto/fixed: {auto / fixed:.2f}x")
    if trend is not None:
        lines.append(f"• Spearman(λ, mean |HM - f0|) for auto: {trend:+.3f}")
    return "\n".join(lines)
# ----------------------- /report/formatter.py -----------------------
