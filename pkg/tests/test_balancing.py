import logging

import numpy as np
import pytest

from core.errors import BalancingDomainError
from core.radio import LoadVector
from strategy.balancing import (
    BalancingFunction, HandoverMarginMatrix, evaluate_f, update_margins, validate_balancing,
)


class TestBalancingFunction:
    def test_reference_values(self):
        bf = BalancingFunction(6.0, 0.0, 12.0, 1)
        assert evaluate_f(bf, 0.0) == 6.0
        assert evaluate_f(bf, 1.0) == 0.0
        assert evaluate_f(bf, -1.0) == 12.0
        assert evaluate_f(bf, 0.5) == 3.0
        assert bf(0.25) == 4.5

    def test_order_zero_is_flat(self):
        bf = BalancingFunction(6.0, 0.0, 12.0, 0)
        assert {evaluate_f(bf, x) for x in (-1.0, -0.3, 0.0, 0.8, 1.0)} == {6.0}

    def test_outside_domain_raises(self):
        bf = BalancingFunction()
        with pytest.raises(BalancingDomainError):
            evaluate_f(bf, 1.5)
        with pytest.raises(BalancingDomainError):
            bf.evaluate_array(np.array([0.0, -1.2]))

    def test_round_off_just_past_one_is_accepted(self):
        assert evaluate_f(BalancingFunction(), 1.0 + 1e-12) == 0.0

    def test_bad_construction(self):
        with pytest.raises(ValueError):
            BalancingFunction(13.0, 0.0, 12.0, 1)
        with pytest.raises(ValueError):
            BalancingFunction(6.0, 0.0, 12.0, 2)

    def test_off_midpoint_logs_warning(self, caplog):
        with caplog.at_level(logging.WARNING, logger="strategy.balancing"):
            BalancingFunction(8.0, 0.0, 12.0, 1)
        assert "not the midpoint" in caplog.text


class TestValidator:
    def test_reference_curve_passes(self):
        rep = validate_balancing(BalancingFunction(6.0, 0.0, 12.0, 1), n_samples=10_000)
        assert rep.ok and rep.monotone and rep.in_range and rep.symmetric
        assert rep.max_symmetry_error <= 1e-9
        assert not rep.warnings

    def test_fixed_margin_passes(self):
        assert validate_balancing(BalancingFunction(6.0, 0.0, 12.0, 0)).ok

    def test_rising_curve_fails_monotonicity_only(self):
        class Rising:
            f0, hm_min, hm_max = 6.0, 0.0, 12.0

            def __call__(self, x):
                return self.f0 + x

        rep = validate_balancing(Rising(), n_samples=101)
        assert not rep.ok
        assert not rep.monotone
        assert rep.in_range and rep.symmetric
        assert len(rep.violations) == 1 and rep.violations[0].startswith("monotonicity")

    def test_high_f0_warns_but_holds(self):
        rep = validate_balancing(BalancingFunction(8.0, 0.0, 12.0, 1))
        assert rep.ok
        assert rep.clamped_points == 0
        assert rep.warnings and "not the midpoint" in rep.warnings[0]

    def test_low_f0_clamps_and_breaks_symmetry(self):
        rep = validate_balancing(BalancingFunction(4.0, 0.0, 12.0, 1))
        assert not rep.ok
        assert not rep.symmetric
        assert rep.monotone and rep.in_range
        assert rep.clamped_points > 0

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            validate_balancing(BalancingFunction(), n_samples=1)


class TestMarginUpdate:
    ADJ = np.array([[False, True], [True, False]])

    def test_loaded_cell_lowers_its_outgoing_margin(self):
        hm = HandoverMarginMatrix.planned(self.ADJ, 6.0)
        hm = update_margins(hm, LoadVector(np.array([0.75, 0.25])), BalancingFunction())
        assert hm[0, 1] == 3.0
        assert hm[1, 0] == 9.0
        assert np.isnan(hm.margins[0, 0])

    def test_extreme_loads_hit_the_bounds(self):
        hm = HandoverMarginMatrix.planned(self.ADJ, 6.0)
        hm = update_margins(hm, LoadVector(np.array([1.0, 0.0])), BalancingFunction())
        assert (hm[0, 1], hm[1, 0]) == (0.0, 12.0)

    def test_planned_matrix(self):
        hm = HandoverMarginMatrix.planned(self.ADJ, 6.0, hysteresis=1.0)
        assert hm.pairs() == [(0, 1), (1, 0)]
        assert hm.mean_abs_deviation(6.0) == 0.0
        assert hm.hysteresis == 1.0

    def test_mutual_margins_sum_to_twice_f0(self):
        rng = np.random.default_rng(77)
        bf = BalancingFunction()
        for _ in range(200):
            n = int(rng.integers(2, 12))
            adj = rng.random((n, n)) < 0.4
            adj = adj | adj.T
            np.fill_diagonal(adj, False)
            hm = HandoverMarginMatrix.planned(adj, bf.f0)
            hm = update_margins(hm, LoadVector(rng.random(n)), bf)
            assert hm.max_reciprocity_error(bf.f0) <= 1e-9
            vals = hm.margins[adj]
            assert np.all((vals >= bf.hm_min) & (vals <= bf.hm_max))
