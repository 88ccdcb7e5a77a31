import dataclasses
import math

import numpy as np
import pytest

from tpmab.bounds import (
    BOUNDS_COLUMNS,
    InstanceSummary,
    bounds_table,
    kl_bernoulli,
    log_grid,
    lower_bound_curve,
    smooth_lower_bound,
    summarize_instance,
    tightness_condition,
    upper_bound_curve,
)
from tpmab.env import make_setting1
from tpmab.errors import DegenerateInstanceError, InvalidParameterError
from tpmab.spread import expected_index, named_spread, point_mass_spread, uniform_spread


def _two_arm(spread):
    return summarize_instance([0.5, 0.25], [1.0, 1.0], 2, spread)


class TestKlBernoulli:
    def test_identical(self):
        assert kl_bernoulli(0.3, 0.3) == 0.0

    def test_values(self):
        assert kl_bernoulli(0.5, 0.25) == pytest.approx(0.143841036225890, rel=1e-12)
        assert kl_bernoulli(0.0, 0.5) == pytest.approx(math.log(2), rel=1e-15)

    def test_degenerate_q(self):
        assert kl_bernoulli(0.1, 0.0) == math.inf
        assert kl_bernoulli(0.9, 1.0) == math.inf
        assert kl_bernoulli(1.0, 1.0) == 0.0

    def test_out_of_range(self):
        with pytest.raises(InvalidParameterError):
            kl_bernoulli(0.5, 1.5)
        with pytest.raises(InvalidParameterError):
            kl_bernoulli(-0.1, 0.5)


class TestTightness:
    def test_uniform_is_exactly_one(self):
        for alpha in (1, 2, 7, 20, 50, 100):
            assert tightness_condition(alpha, uniform_spread(alpha)) == (1.0, False)

    def test_point_mass_at_last_group(self):
        value, tighter = tightness_condition(4, point_mass_spread(4, 4))
        assert value == pytest.approx(2 * 4 * 4 / 5, rel=1e-15)
        assert tighter

    def test_begin(self):
        value, tighter = tightness_condition(20, named_spread('begin', 20))
        assert value == pytest.approx(0.998885846696117, rel=1e-10)
        assert not tighter

    def test_alpha_mismatch(self):
        with pytest.raises(InvalidParameterError):
            tightness_condition(10, uniform_spread(20))


class TestLowerBound:
    def test_point_mass_by_hand(self):
        inst = _two_arm(point_mass_spread(2, 1))
        assert lower_bound_curve(inst, 100) == pytest.approx(5.867413948642481, rel=1e-12)
        assert smooth_lower_bound(inst, 100) == pytest.approx(4.400560461481861, rel=1e-12)

    def test_uniform_reduces_to_smooth_bound(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            alpha = int(rng.choice([1, 2, 5, 10, 20]))
            K = int(rng.integers(2, 8))
            rewards = rng.uniform(1.0, 10.0, size=K)
            means = rewards.max() * rng.uniform(0.05, 0.95, size=K)
            means = np.minimum(means, rewards)
            inst = summarize_instance(means, rewards, alpha * 3, uniform_spread(alpha))
            T = float(rng.integers(2, 10 ** 6))
            assert lower_bound_curve(inst, T) == pytest.approx(smooth_lower_bound(inst, T),
                                                                rel=1e-10, abs=1e-10)

    def test_single_arm(self):
        inst = summarize_instance([0.5], [1.0], 4, uniform_spread(2))
        assert lower_bound_curve(inst, 1000) == 0.0
        assert upper_bound_curve(inst, 1000) == 0.0

    def test_optimal_mean_at_max_reward(self):
        inst = summarize_instance([1.0, 0.5], [1.0, 1.0], 2, uniform_spread(2))
        with pytest.raises(DegenerateInstanceError, match="mu\\* < R_max"):
            lower_bound_curve(inst, 100)

    def test_horizon_too_small(self):
        with pytest.raises(InvalidParameterError):
            lower_bound_curve(_two_arm(uniform_spread(2)), 1)

    def test_grows_with_log_horizon(self):
        inst = _two_arm(uniform_spread(2))
        ratio = lower_bound_curve(inst, 10 ** 4) / lower_bound_curve(inst, 10 ** 2)
        assert ratio == pytest.approx(2.0, rel=1e-12)


class TestUpperBound:
    def test_uniform_by_hand(self):
        assert upper_bound_curve(_two_arm(uniform_spread(2)), 100) == pytest.approx(
            80.642081505947971, rel=1e-12)

    def test_point_mass_by_hand(self):
        assert upper_bound_curve(_two_arm(point_mass_spread(2, 1)), 100) == pytest.approx(
            152.411482259337419, rel=1e-12)

    def test_increasing_in_horizon(self):
        inst = InstanceSummary.from_environment(make_setting1(), named_spread('begin', 20))
        values = [upper_bound_curve(inst, T) for T in (10, 100, 1000, 10 ** 5)]
        assert values == sorted(values)

    @pytest.mark.parametrize("name", ['extreme_begin', 'very_begin', 'begin', 'begin_middle'])
    def test_uniform_dominates_earlier_spreads(self, name):
        uniform = InstanceSummary.from_environment(make_setting1(), uniform_spread(20))
        spread = named_spread(name, 20)
        assert expected_index(spread) < uniform.mean_index
        # no PMF but the uniform one reaches IC = 1/alpha, so the moments are set directly
        earlier = dataclasses.replace(uniform, spread=spread, mean_index=expected_index(spread))
        for T in log_grid(3, 10 ** 6, 40):
            assert upper_bound_curve(earlier, T) < upper_bound_curve(uniform, T)

    def test_increasing_in_coincidence(self):
        inst = InstanceSummary.from_environment(make_setting1(), named_spread('begin', 20))
        values = [upper_bound_curve(dataclasses.replace(inst, coincidence=ic), 1000)
                  for ic in (0.05, 0.1, 0.3, 1.0)]
        assert values == sorted(values) and len(set(values)) == 4

    def test_horizon_too_small(self):
        with pytest.raises(InvalidParameterError):
            upper_bound_curve(_two_arm(uniform_spread(2)), 0)


class TestInstanceSummary:
    def test_setting1(self):
        inst = InstanceSummary.from_environment(make_setting1())
        assert inst.mu_star == 1150.0
        assert math.fsum(inst.gaps) == 5000.0
        assert inst.alpha == 20 and inst.phi == 5
        assert inst.mean_index == 10.5
        assert inst.suboptimal.tolist() == list(range(9))

    def test_validation(self):
        with pytest.raises(InvalidParameterError):
            summarize_instance([0.5, 0.2], [1.0], 2, uniform_spread(2))
        with pytest.raises(InvalidParameterError):
            summarize_instance([1.5], [1.0], 2, uniform_spread(2))
        with pytest.raises(InvalidParameterError, match="does not divide"):
            summarize_instance([0.5], [1.0], 3, uniform_spread(2))


class TestTables:
    def test_log_grid(self):
        grid = log_grid(2, 100000, 50)
        assert grid[0] == 2 and grid[-1] == 100000
        assert grid == sorted(set(grid))
        assert len(grid) <= 50
        assert log_grid(5, 5, 10) == [5]

    def test_log_grid_rejects_small_minimum(self):
        with pytest.raises(InvalidParameterError):
            log_grid(1, 100)

    def test_bounds_table(self):
        inst = InstanceSummary.from_environment(make_setting1(), named_spread('begin', 20))
        rows = bounds_table(inst, [10, 1000])
        assert [r['T'] for r in rows] == [10, 1000]
        assert set(rows[0]) == set(BOUNDS_COLUMNS)
        assert rows[0]['tightness_value'] == pytest.approx(0.998885846696117, rel=1e-10)

    def test_uniform_columns_coincide(self):
        inst = InstanceSummary.from_environment(make_setting1())
        for row in bounds_table(inst, log_grid(2, 10 ** 5, 10)):
            assert row['upper_bound'] == row['upper_bound_uniform']
            assert row['tightness_value'] == 1.0
