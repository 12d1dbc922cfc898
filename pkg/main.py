# ----------------------- main.py -----------------------
"""Command line: run | sweep | validate | layout.

Exit status: 0 ok, 1 invalid input (scenario, balancing curve), 2 runtime failure.
"""
from __future__ import annotations
import argparse
import asyncio
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

from config import settings as S
from core.engine import POLICIES, run
from core.errors import ScenarioError, SimulatorError
from core.metrics import MetricsReport, capacity_at_access, hm_deviation_trend, paired_summary
from data.layout import export_layout_csv
from data.scenario import Scenario, load_scenario, with_overrides
from report.export import (
    read_summary_csv, run_key, write_paired_summary, write_sinr_cdf, write_summary_csv,
)
from report.formatter import format_run_report, format_sweep_summary, format_validation
from strategy.balancing import BalancingFunction, validate_balancing
from utils.storage import MANIFEST_FILE, Storage

logger = logging.getLogger("hm_autotune")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def _float_list(raw: str) -> List[float]:
    try:
        vals = [float(p) for p in raw.replace(" ", "").split(",") if p]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {raw!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("list must not be empty")
    return vals


def _int_list(raw: str) -> List[int]:
    return [int(v) for v in _float_list(raw)]


def _load(args) -> Scenario:
    sc = load_scenario(args.scenario)
    return with_overrides(
        sc,
        seed=getattr(args, "seed", None),
        warmup_fraction=args.warmup_frac,
        snapshot_duration=args.snapshot_dt,
        sim_duration=args.duration,
    )


# =========================
# run
# =========================

def cmd_run(args) -> int:
    sc = _load(args)
    if args.arrival_rate is not None:
        sc = with_overrides(sc, arrival_rate=args.arrival_rate)
    os.makedirs(args.out, exist_ok=True)
    rep = run(sc, args.policy, event_log=args.event_log, hm_log=args.hm_log)
    key = run_key(rep.policy, rep.arrival_rate, rep.seed)
    write_summary_csv([rep], os.path.join(args.out, "summary.csv"))
    write_sinr_cdf(rep, os.path.join(args.out, f"sinr_cdf_{key}.csv"))
    Storage(os.path.join(args.out, MANIFEST_FILE)).put_run(key, _manifest_record(args.scenario, rep))
    print(format_run_report(rep))
    return EXIT_OK


def _manifest_record(scenario_path: str, rep: Optional[MetricsReport], error: str = "") -> dict:
    if rep is None:
        return {"scenario": scenario_path, "status": "failed", "error": error}
    return {
        "scenario": scenario_path,
        "policy": rep.policy,
        "lambda": rep.arrival_rate,
        "seed": rep.seed,
        "event_hash": rep.event_hash,
        "status": "ok",
    }


# =========================
# sweep
# =========================

@dataclass(frozen=True)
class SweepJob:
    key: str
    scenario: Scenario
    policy: str
    event_log: Optional[str] = None


@dataclass(frozen=True)
class SweepResult:
    key: str
    report: Optional[MetricsReport] = None
    error: str = ""


def execute_job(job: SweepJob) -> SweepResult:
    """Runs in a worker process; failures come back as data, never as exceptions."""
    try:
        return SweepResult(job.key, run(job.scenario, job.policy, event_log=job.event_log))
    except Exception as e:  # noqa: BLE001
        return SweepResult(job.key, error=f"{type(e).__name__}: {e}")


async def _run_jobs(jobs: Sequence[SweepJob], workers: int) -> List[SweepResult]:
    loop = asyncio.get_running_loop()
    sem = asyncio.Semaphore(workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        async def one(job: SweepJob) -> SweepResult:
            async with sem:
                res = await loop.run_in_executor(pool, execute_job, job)
            if res.error:
                logger.error("[SWEEP] %s failed: %s", res.key, res.error)
            else:
                logger.info("[SWEEP] %s done", res.key)
            return res
        return list(await asyncio.gather(*(one(j) for j in jobs)))


def run_jobs(jobs: Sequence[SweepJob], workers: int) -> List[SweepResult]:
    if workers <= 1 or len(jobs) <= 1:
        out = []
        for job in jobs:
            res = execute_job(job)
            if res.error:
                logger.error("[SWEEP] %s failed: %s", res.key, res.error)
            out.append(res)
        return out
    return asyncio.run(_run_jobs(jobs, workers))


def cmd_sweep(args) -> int:
    base = _load(args)
    out = args.out
    os.makedirs(os.path.join(out, "cdf"), exist_ok=True)
    if args.event_log:
        os.makedirs(os.path.join(out, "events"), exist_ok=True)

    jobs: List[SweepJob] = []
    for lam in args.lambdas:
        for seed in args.seeds:
            sc = with_overrides(base, arrival_rate=lam, seed=seed)
            for policy in POLICIES:
                key = run_key(policy, lam, seed)
                log = os.path.join(out, "events", f"events_{key}.csv") if args.event_log else None
                jobs.append(SweepJob(key, sc, policy, log))
    logger.info("[SWEEP] %d runs (%d λ x %d seeds x %d policies), workers=%d",
                len(jobs), len(args.lambdas), len(args.seeds), len(POLICIES), args.workers)

    results = run_jobs(jobs, args.workers)
    storage = Storage(os.path.join(out, MANIFEST_FILE))
    reports = []
    for res in results:
        storage.data.setdefault("runs", {})[res.key] = _manifest_record(args.scenario, res.report, res.error)
        if res.report is not None:
            reports.append(res.report)
            write_sinr_cdf(res.report, os.path.join(out, "cdf", f"sinr_cdf_{res.key}.csv"))
    storage.save()
    failed = len(results) - len(reports)

    if reports:
        summary_path = write_summary_csv(reports, os.path.join(out, "sweep_summary.csv"))
        df = read_summary_csv(summary_path)
        write_paired_summary(paired_summary(df), os.path.join(out, "paired_summary.csv"))
        from report.charts import plot_sweep_charts
        plot_sweep_charts(summary_path, os.path.join(out, "charts"))
        capacity = capacity_at_access(df, S.TARGET_ACCESS_LEVEL)
        trend = hm_deviation_trend(df)
        storage.set("capacity_at_access", capacity)
        print(format_sweep_summary(len(reports), failed, capacity, trend, S.TARGET_ACCESS_LEVEL))
    return EXIT_RUNTIME if failed else EXIT_OK


# =========================
# validate / layout
# =========================

def cmd_validate(args) -> int:
    bf = BalancingFunction(args.f0, args.hm_min, args.hm_max, args.order)
    rep = validate_balancing(bf, n_samples=args.samples)
    print(format_validation(rep))
    return EXIT_OK if rep.ok else EXIT_INVALID


def cmd_layout(args) -> int:
    sc = load_scenario(args.scenario)
    path = export_layout_csv(sc.sites, args.out)
    print(f"🗺️ [LAYOUT] {sc.n_sites} sites → {path}")
    return EXIT_OK


# =========================
# Parser
# =========================

def _add_scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", default=S.DEFAULT_SCENARIO,
                   help="scenario file (default: the shipped 45-site reference scenario)")
    p.add_argument("--warmup-frac", type=float, default=None,
                   help="fraction of the run excluded from metrics (default: scenario value, 0.1)")
    p.add_argument("--snapshot-dt", type=float, default=None,
                   help="snapshot duration in seconds (default: scenario value, 1.0)")
    p.add_argument("--duration", type=float, default=None,
                   help="simulated seconds (default: scenario value, 600)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="main.py",
        description="OFDMA system-level simulator: load-adaptive handover margins vs a fixed margin.",
        epilog="Environment: LOG_LEVEL (or a .env file) sets log verbosity only. "
               "Everything that shapes a run is a flag or a scenario-file value.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="one simulation run")
    _add_scenario_flags(p)
    p.add_argument("--policy", choices=POLICIES, default="auto",
                   help="auto = load-adaptive margins, fixed = constant f0 (default: auto)")
    p.add_argument("--seed", type=int, default=None, help="RNG seed (default: scenario value)")
    p.add_argument("--lambda", dest="arrival_rate", type=float, default=None,
                   help="arrival rate in mobiles/s (default: scenario value)")
    p.add_argument("--out", default=S.OUTPUT_DIR, help=f"output directory (default: {S.OUTPUT_DIR})")
    p.add_argument("--event-log", default=None, help="write the event log CSV to this path (default: off)")
    p.add_argument("--hm-log", default=None, help="write per-snapshot margins CSV to this path (default: off)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="λ x seed x policy sweep with summary CSV and charts")
    _add_scenario_flags(p)
    p.add_argument("--lambdas", type=_float_list, default=list(S.SWEEP_LAMBDAS),
                   help=f"comma-separated arrival rates (default: {','.join(f'{v:g}' for v in S.SWEEP_LAMBDAS)})")
    p.add_argument("--seeds", type=_int_list, default=list(S.SWEEP_SEEDS),
                   help=f"comma-separated seeds (default: {','.join(str(v) for v in S.SWEEP_SEEDS)})")
    p.add_argument("--out", default=S.OUTPUT_DIR, help=f"output directory (default: {S.OUTPUT_DIR})")
    p.add_argument("--workers", type=int, default=S.SWEEP_WORKERS,
                   help=f"concurrent runs, 1 = in-process (default: CPU count, {S.SWEEP_WORKERS})")
    p.add_argument("--event-log", action="store_true", help="write one event log per run under OUT/events")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="check a balancing curve against the margin theorem")
    p.add_argument("--f0", type=float, default=S.F0_DB, help=f"f(0) in dB (default: {S.F0_DB:g})")
    p.add_argument("--hm-min", type=float, default=S.HM_MIN_DB, help=f"lowest margin, dB (default: {S.HM_MIN_DB:g})")
    p.add_argument("--hm-max", type=float, default=S.HM_MAX_DB, help=f"highest margin, dB (default: {S.HM_MAX_DB:g})")
    p.add_argument("--order", type=int, choices=(0, 1), default=S.BALANCING_ORDER,
                   help=f"0 = constant, 1 = linear (default: {S.BALANCING_ORDER})")
    p.add_argument("--samples", type=int, default=S.VALIDATION_SAMPLES,
                   help=f"grid points over [-1, 1] (default: {S.VALIDATION_SAMPLES})")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("layout", help="export the site layout of a scenario as CSV")
    p.add_argument("--scenario", default=S.DEFAULT_SCENARIO, help="scenario file (default: reference scenario)")
    p.add_argument("--out", default=os.path.join(S.OUTPUT_DIR, "layout.csv"),
                   help="CSV path (default: out/layout.csv)")
    p.set_defaults(func=cmd_layout)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(
        level=getattr(logging, S.LOG_LEVEL, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, FileNotFoundError) as e:
        logger.error("[CLI] %s", e)
        return EXIT_INVALID
    except ValueError as e:
        if args.command == "validate":
            logger.error("[CLI] %s", e)
            return EXIT_INVALID
        logger.exception("[CLI] %s failed", args.command)
        return EXIT_RUNTIME
    except SimulatorError as e:
        logger.error("[CLI] %s", e)
        return EXIT_RUNTIME
    except Exception:
        logger.exception("[CLI] %s failed", args.command)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
# ----------------------- /main.py -----------------------
