import pytest

from tpmab.models import (
    ExperimentRun,
    PolicySummary,
    close_database,
    config_digest,
    init_database,
    recent_runs,
    record_run,
)


@pytest.fixture
def db(tmp_path):
    init_database(tmp_path)
    yield tmp_path
    close_database()


def _config(name='exp', seed=0):
    return {'name': name, 'horizon': 1000, 'runs': 2, 'seed': seed, 'workers': 1,
            'policies': [{'kind': 'ucb1', 'name': 'UCB1'}]}


def _row(name, value, decrease=None):
    return {'name': name, 'kind': 'ucb1', 'time_averaged': value, 'time_averaged_ci': 1.0,
            'final': 2 * value, 'final_ci': 2.0, 'decrease': decrease}


class TestDigest:
    def test_key_order_does_not_matter(self):
        assert config_digest({'a': 1, 'b': [1, 2]}) == config_digest({'b': [1, 2], 'a': 1})

    def test_changes_with_content(self):
        assert config_digest({'a': 1}) != config_digest({'a': 2})


class TestRegistry:
    def test_creates_database_file(self, db):
        assert (db / 'runs.db').exists()

    def test_record_and_list(self, db):
        record_run(_config('first'), [_row('UCB1', 10.0)], duration=1.5)
        run = record_run(_config('second', seed=2 ** 64 - 1),
                         [_row('UCB1', 10.0), _row('TP-UCB-FR(20)', 7.0, decrease=30.0)],
                         duration=3.0, output_csv='out.csv')
        runs = recent_runs(10)
        assert [r.name for r in runs] == ['second', 'first']
        assert runs[0].seed == str(2 ** 64 - 1)
        assert runs[0].output_csv == 'out.csv'
        best = min(run.summaries, key=lambda s: s.time_averaged)
        assert best.policy_name == 'TP-UCB-FR(20)'
        assert best.decrease == 30.0

    def test_failed_run(self, db):
        record_run(_config(), [], duration=0.2, success=False, message="2 episode(s) failed")
        run = ExperimentRun.get()
        assert not run.success
        assert run.message.startswith("2 episode")
        assert PolicySummary.select().count() == 0

    def test_limit(self, db):
        for i in range(5):
            record_run(_config(f'r{i}'), [], duration=0.1)
        assert len(recent_runs(3)) == 3
