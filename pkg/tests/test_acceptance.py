"""
Desk-scale reproduction of the headline experiments.

Deselected by default; run with ``pytest -m slow``. With 8 workers each case
takes a few minutes.
"""

import dataclasses
import os

import numpy as np
import pytest

from tpmab.bounds import summarize_instance, upper_bound_curve
from tpmab.config import load_config
from tpmab.harness import run_experiment, summary_rows
from tpmab.spread import uniform_spread

pytestmark = pytest.mark.slow

WORKERS = min(8, os.cpu_count() or 1)
HORIZON = 100000


def _run(preset, runs, names=None, horizon=HORIZON):
    config = load_config(preset)
    policies = config.policies
    if names is not None:
        policies = [p for p in policies if p.name in names]
        assert len(policies) == len(names)
    config = dataclasses.replace(config, policies=policies, horizon=horizon, runs=runs,
                                 workers=WORKERS)
    return config, run_experiment(config)


def _by_name(result):
    return {p.name: p for p in result.policies}


def _decrease(result, learner, baseline):
    rows = {r['name']: r for r in summary_rows(result)}
    assert rows[baseline]['is_baseline']
    return rows[learner]['decrease']


class TestSetting1:
    def test_begin_learner_gain_alpha20(self):
        names = ['TP-UCB-FR-G(20, begin)', 'TP-UCB-FR(20)']
        _, result = _run('setting1_alpha20', runs=20, names=names)
        assert 12.0 <= _decrease(result, *names) <= 32.0

    def test_begin_learner_gain_and_ordering_alpha50(self):
        names = ['TP-UCB-FR-G(50, begin)', 'TP-UCB-FR-G(50, begin_middle)', 'TP-UCB-FR(50)',
                 'TP-UCB-FR-G(50, extreme_begin)']
        _, result = _run('setting1_alpha50', runs=20, names=names)
        assert 25.0 <= _decrease(result, names[0], names[2]) <= 46.0
        final = [_by_name(result)[n].final_mean for n in names]
        assert final == sorted(final)

    def test_matched_learner_stays_under_upper_bound(self):
        config, result = _run('setting1_alpha20', runs=20, names=['TP-UCB-FR(20)'])
        env = config.environment
        inst = summarize_instance(env.means, env.max_rewards, env.tau_max, uniform_spread(20))
        agg = result.policies[0]
        rounds = np.asarray(agg.rounds)
        keep = rounds >= env.num_arms + 1
        upper = np.array([upper_bound_curve(inst, t) for t in rounds[keep]])
        empirical = np.asarray(agg.mean_regret)[keep] + 2.0 * np.asarray(agg.ci_half_width)[keep]
        assert np.mean(empirical <= upper) >= 0.95


class TestSetting2:
    def test_configuration3_is_scenario_insensitive(self):
        regrets = {}
        for scenario in ('uniform', 'late', 'early'):
            _, result = _run(f'setting2_c3_{scenario}', runs=20)
            for agg in result.policies:
                regrets.setdefault(agg.name, []).append(agg.time_averaged_mean)
        for name, values in regrets.items():
            spread = max(values) / min(values) - 1.0
            assert spread < 0.03, f"{name}: {values}"

    def test_configuration4_begin_learner_gain(self):
        names = ['TP-UCB-FR-G(100, begin)', 'TP-UCB-FR(100)']
        _, result = _run('setting2_c4_uniform', runs=10, names=names)
        assert 38.0 <= _decrease(result, *names) <= 58.0
