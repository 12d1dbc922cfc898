import numpy as np
import pandas as pd
import pytest

from core.errors import ConsistencyError
from core.metrics import (
    MetricsAccumulator, access_probability, build_report, capacity_at_access, holding_probability,
    hm_deviation_trend, mean_user_throughput, paired_summary, sinr_cdf,
)
from report.export import (
    SUMMARY_COLUMNS, read_reports, read_sinr_cdf, read_summary_csv, run_key, write_sinr_cdf,
    write_summary_csv,
)


def _acc(**kw):
    acc = MetricsAccumulator()
    for k, v in kw.items():
        setattr(acc, k, v)
    return acc


class TestKpis:
    def test_access_and_holding(self):
        acc = _acc(attempts=100, admitted=90, blocked_coverage=4, blocked_resource=6, dropped=9, completed=70,
                   active_at_end=11)
        assert access_probability(acc) == pytest.approx(0.9)
        assert holding_probability(acc) == pytest.approx(0.9)

    def test_undefined_kpis_are_none(self):
        acc = MetricsAccumulator()
        assert access_probability(acc) is None
        assert holding_probability(acc) is None
        assert mean_user_throughput(acc) is None
        assert sinr_cdf(acc, [0.5]) is None

    def test_goodput_is_a_plain_mean(self):
        assert mean_user_throughput(_acc(throughput_samples=[1e6, 2e6])) == 1.5e6

    def test_sinr_quantiles_interpolate_and_never_fall(self):
        acc = _acc(sinr_samples_db=[0.0, 10.0, 20.0, 30.0])
        assert sinr_cdf(acc, [0.0, 0.5, 1.0]) == [0.0, 15.0, 30.0]
        q = sinr_cdf(_acc(sinr_samples_db=list(np.random.default_rng(1).normal(5, 7, 999))),
                     [k / 100 for k in range(101)])
        assert all(b >= a for a, b in zip(q, q[1:]))

    def test_impossible_counters_raise(self):
        with pytest.raises(ConsistencyError):
            _acc(attempts=1, admitted=2).check()
        with pytest.raises(ConsistencyError):
            _acc(attempts=3, admitted=2, dropped=2, completed=1).check()


class TestReport:
    def test_build_report(self):
        acc = _acc(attempts=4, admitted=3, blocked_resource=1, completed=2, active_at_end=1,
                   throughput_samples=[100.0, 300.0], sinr_samples_db=[1.0, 2.0, 3.0],
                   load_series=[np.array([0.2, 0.4]), np.array([0.4, 0.6])], hm_deviation_series=[1.0, 3.0])
        rep = build_report(acc, "auto", 2.0, 7, event_hash="ab", quantiles=[0.0, 0.5, 1.0])
        assert rep.conserves()
        assert rep.access_probability == 0.75 and rep.holding_probability == 1.0
        assert rep.mean_user_throughput == 200.0 and rep.median_sinr_db == 2.0
        assert rep.mean_abs_hm_deviation == 2.0
        assert rep.cell_mean_loads == pytest.approx((0.3, 0.5))
        assert rep.mean_load == pytest.approx(0.4)
        assert rep.sinr_cdf == ((0.0, 1.0), (0.5, 2.0), (1.0, 3.0))

    def test_conservation_flag(self):
        rep = build_report(_acc(attempts=2, admitted=2, completed=1), "fixed", 1.0, 1)
        assert not rep.conserves()


class TestExport:
    def test_summary_round_trip(self, tmp_path):
        reps = [
            build_report(_acc(attempts=10, admitted=9, blocked_coverage=1, completed=8, active_at_end=1,
                              throughput_samples=[123456.789], sinr_samples_db=[3.3]), p, lam, s,
                         event_hash=f"{p}{s}")
            for p in ("fixed", "auto") for lam in (4.0, 2.0) for s in (2, 1)
        ]
        reps.append(build_report(MetricsAccumulator(), "auto", 8.0, 1, event_hash="0123"))
        path = write_summary_csv(reps, str(tmp_path / "summary.csv"))
        df = read_summary_csv(path)
        assert list(df.columns) == SUMMARY_COLUMNS
        assert df[["lambda", "policy", "seed"]].values.tolist()[:3] == [[2.0, "auto", 1], [2.0, "auto", 2],
                                                                          [2.0, "fixed", 1]]
        back = {(r.policy, r.arrival_rate, r.seed): r for r in read_reports(path)}
        r = back[("auto", 2.0, 1)]
        assert r.mean_user_throughput == 123456.789
        assert r.access_probability == 0.9 and r.event_hash == "auto1"
        empty = back[("auto", 8.0, 1)]
        assert empty.access_probability is None and empty.mean_user_throughput is None
        assert empty.event_hash == "0123"

    def test_cdf_file(self, tmp_path):
        rep = build_report(_acc(attempts=1, admitted=1, active_at_end=1, sinr_samples_db=[0.0, 4.0]),
                           "auto", 1.0, 1, quantiles=[0.0, 0.25, 1.0])
        df = read_sinr_cdf(write_sinr_cdf(rep, str(tmp_path / "cdf.csv")))
        assert df.values.tolist() == [[0.0, 0.0], [0.25, 1.0], [1.0, 4.0]]

    def test_run_key(self):
        assert run_key("auto", 4.0, 3) == "auto_lam4_seed3"
        assert run_key("fixed", 2.5, 1) == "fixed_lam2.5_seed1"


def _sweep(auto, fixed, lambdas=(2.0, 4.0, 6.0, 8.0)):
    rows = []
    for lam, a, f in zip(lambdas, auto, fixed):
        for seed in (1, 2):
            rows.append({"lambda": lam, "policy": "auto", "seed": seed, "access_prob": a,
                         "holding_prob": 1.0, "mean_throughput": 2.0 * a, "median_sinr_db": 5.0,
                         "mean_abs_hm_deviation": lam / 10})
            rows.append({"lambda": lam, "policy": "fixed", "seed": seed, "access_prob": f,
                         "holding_prob": 1.0, "mean_throughput": f, "median_sinr_db": 4.0,
                         "mean_abs_hm_deviation": 0.0})
    return pd.DataFrame(rows)


class TestSweepAnalytics:
    def test_capacity_interpolates_first_crossing(self):
        df = _sweep(auto=[1.0, 0.99, 0.91, 0.8], fixed=[0.99, 0.92, 0.8, 0.7])
        cap = capacity_at_access(df, 0.95)
        assert cap["auto"] == pytest.approx(5.0)
        assert cap["fixed"] == pytest.approx(2.0 + 0.04 / 0.07 * 2.0)

    def test_capacity_never_reached(self):
        cap = capacity_at_access(_sweep(auto=[1.0] * 4, fixed=[0.9] * 4), 0.95)
        assert cap == {"auto": None, "fixed": None}

    def test_paired_summary(self):
        out = paired_summary(_sweep(auto=[1.0, 0.9, 0.8, 0.6], fixed=[1.0, 0.75, 0.5, 0.3]))
        assert out["lambda"].tolist() == [2.0, 4.0, 6.0, 8.0]
        assert out["access_gain"].tolist() == pytest.approx([1.0, 1.2, 1.6, 2.0])
        assert out["throughput_gain"].tolist() == pytest.approx([2.0, 2.4, 3.2, 4.0])
        assert out["median_sinr_db_auto"].tolist() == [5.0] * 4

    def test_margin_deviation_trend(self):
        df = _sweep(auto=[1.0] * 4, fixed=[1.0] * 4)
        assert hm_deviation_trend(df) == pytest.approx(1.0)
        df.loc[df["policy"] == "auto", "mean_abs_hm_deviation"] = -df["lambda"]
        assert hm_deviation_trend(df) == pytest.approx(-1.0)
        assert hm_deviation_trend(df.head(8)) is None
        # flat fixed-margin deviation has no rank correlation
        assert hm_deviation_trend(df, "fixed") is None
