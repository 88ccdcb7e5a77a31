import csv
import io
import json

import pytest
from click.testing import CliRunner

from tpmab import __version__
from tpmab.bounds import BOUNDS_COLUMNS
from tpmab.cli import main
from tpmab.config import list_presets
from tpmab.harness import RESULT_COLUMNS, load_results

SETTING1_MEANS = "50,150,300,450,600,750,900,1050,1100,1150"
SETTING1_REWARDS = "100,300,600,900,1200,1500,1800,2100,2200,2300"


@pytest.fixture
def runner(tpmab_home):
    return CliRunner()


@pytest.fixture
def tiny_config(tmp_path, tiny_trace):
    path = tmp_path / "tiny_exp.json"
    path.write_text(json.dumps({
        "environment": {"setting": "trace", "path": tiny_trace.name, "num_arms": 2,
                        "tau_max": 2},
        "policies": [{"kind": "tp_ucb_fr", "alpha_est": 2}, {"kind": "delayed_ucb1"}],
        "horizon": 60,
        "runs": 3,
        "seed": 1,
        "checkpoint_stride": 20,
    }))
    return path


class TestMain:
    def test_version(self, runner):
        result = runner.invoke(main, ['--version'])
        assert result.exit_code == 0
        assert __version__ in result.output

    def test_help_without_command(self, runner):
        result = runner.invoke(main, [])
        assert result.exit_code == 0
        for command in ('run', 'bounds', 'dist', 'plot', 'presets', 'history'):
            assert command in result.output


class TestRun:
    def test_writes_results_and_records(self, runner, tiny_config, tmp_path):
        out = tmp_path / "out"
        result = runner.invoke(main, ['run', '--config', str(tiny_config), '--out-dir', str(out)])
        assert result.exit_code == 0, result.output
        with open(out / "tiny_exp.csv", newline='') as f:
            rows = list(csv.reader(f))
        assert tuple(rows[0]) == RESULT_COLUMNS
        assert len(rows) == 1 + 2 * 3
        loaded = load_results(out / "tiny_exp.json")
        assert loaded.metadata['seeds'] == [1, 2, 3]

        history = runner.invoke(main, ['history'])
        assert history.exit_code == 0
        assert "tiny_exp" in history.output

    def test_overrides(self, runner, tiny_config, tmp_path):
        out = tmp_path / "o"
        result = runner.invoke(main, ['--seed', '7', 'run', '-c', str(tiny_config), '-T', '40',
                                      '-n', '2', '--out-dir', str(out), '--no-record'])
        assert result.exit_code == 0, result.output
        loaded = load_results(out / "tiny_exp.json")
        assert loaded.metadata['seeds'] == [7, 8]
        assert loaded.policies[0].rounds[-1] == 40
        assert "No runs recorded" in runner.invoke(main, ['history']).output

    def test_out_dir_from_environment(self, runner, tiny_config, tmp_path):
        out = tmp_path / "env_out"
        result = runner.invoke(main, ['run', '-c', str(tiny_config), '--no-record'],
                               env={'TPMAB_OUT_DIR': str(out)})
        assert result.exit_code == 0, result.output
        assert (out / "tiny_exp.csv").exists()

    @pytest.mark.parametrize("preset", list_presets())
    def test_dry_run_every_preset(self, runner, tmp_path, preset):
        result = runner.invoke(main, ['run', '-c', preset, '--dry-run', '-w', '1',
                                      '--out-dir', str(tmp_path), '--no-record'])
        assert result.exit_code == 0, result.output
        loaded = load_results(tmp_path / f"{preset}.json")
        assert all(p.rounds[-1] == 1000 for p in loaded.policies)
        assert all(p.runs == 2 for p in loaded.policies)

    def test_seed_determines_csv_bytes(self, runner, tmp_path):
        outputs = []
        for seed, out in (('11', "first"), ('11', "second"), ('12', "third")):
            result = runner.invoke(main, ['--seed', seed, 'run', '-c', 'setting1_alpha20', '-T',
                                          '300', '-n', '2', '-w', '1', '--out-dir',
                                          str(tmp_path / out), '--no-record'])
            assert result.exit_code == 0, result.output
            outputs.append((tmp_path / out / "setting1_alpha20.csv").read_bytes())
        assert outputs[0] == outputs[1]
        assert outputs[0] != outputs[2]

    def test_missing_config(self, runner, tmp_path):
        missing = tmp_path / "nowhere.json"
        result = runner.invoke(main, ['run', '--config', str(missing)])
        assert result.exit_code == 1
        assert "nowhere.json" in result.output

    def test_invalid_config(self, runner, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({
            "environment": {"setting": "setting1", "alpha": 20, "tau_max": 100},
            "policies": [],
            "horizon": 10,
        }))
        result = runner.invoke(main, ['run', '--config', str(path)])
        assert result.exit_code == 1
        assert "policies" in result.output


class TestBounds:
    def _invoke(self, runner, *extra):
        return runner.invoke(main, ['bounds', '--alpha', '20', '--tau-max', '100',
                                    '--means', SETTING1_MEANS, '--max-rewards', SETTING1_REWARDS,
                                    *extra])

    def test_csv_to_stdout(self, runner):
        result = self._invoke(runner, '--t-max', '1000', '--points', '5')
        assert result.exit_code == 0, result.output
        rows = list(csv.reader(io.StringIO(result.output)))
        assert tuple(rows[0]) == BOUNDS_COLUMNS
        assert rows[1][0] == '2' and rows[-1][0] == '1000'
        assert all(float(r[4]) == 1.0 for r in rows[1:])
        assert all(r[2] == r[3] for r in rows[1:])

    def test_output_file_and_tightness(self, runner, tmp_path):
        out = tmp_path / "b.csv"
        result = self._invoke(runner, '--dist', 'named:begin', '--points', '10', '--output',
                              str(out), '--tightness')
        assert result.exit_code == 0, result.output
        assert "tightness value: 0.99888" in result.output
        with open(out, newline='') as f:
            rows = list(csv.DictReader(f))
        assert rows[-1]['T'] == '100000'
        assert float(rows[-1]['upper_bound']) > float(rows[-1]['upper_bound_uniform'])

    def test_t_min_below_two(self, runner):
        result = self._invoke(runner, '--t-min', '1')
        assert result.exit_code == 2

    def test_degenerate_instance(self, runner):
        result = runner.invoke(main, ['bounds', '--alpha', '2', '--tau-max', '2', '--means',
                                      '1,0.5', '--max-rewards', '1,1'])
        assert result.exit_code == 1
        assert "mu* < R_max" in result.output

    def test_bad_distribution(self, runner):
        result = self._invoke(runner, '--dist', 'zipfian:')
        assert result.exit_code == 1


class TestDist:
    def test_uniform(self, runner, tmp_path):
        out = tmp_path / "u.csv"
        result = runner.invoke(main, ['dist', '--kind', 'uniform', '--alpha', '4', '--csv',
                                      str(out)])
        assert result.exit_code == 0, result.output
        assert "0.25" in result.output
        assert "2.5" in result.output
        rows = list(csv.reader(out.read_text().splitlines()))
        assert rows[0] == ['k', 'probability']
        assert [float(r[1]) for r in rows[1:5]] == [0.25] * 4
        assert rows[5] == ['expected_index', '2.5']
        assert rows[6] == ['index_of_coincidence', '0.25']

    def test_named_with_svg(self, runner, tmp_path):
        svg = tmp_path / "begin.svg"
        result = runner.invoke(main, ['dist', '--named', 'begin', '--alpha', '20', '--svg',
                                      str(svg)])
        assert result.exit_code == 0, result.output
        assert "4.8" in result.output
        assert svg.read_text().count('<rect') == 21

    def test_unknown_preset(self, runner):
        result = runner.invoke(main, ['dist', '--named', 'nowhere', '--alpha', '20'])
        assert result.exit_code == 1
        assert "extreme_begin" in result.output

    def test_needs_exactly_one_source(self, runner):
        assert runner.invoke(main, ['dist', '--alpha', '4']).exit_code == 2
        both = runner.invoke(main, ['dist', '--kind', 'uniform', '--named', 'begin',
                                    '--alpha', '4'])
        assert both.exit_code == 2

    def test_invalid_parameter(self, runner):
        result = runner.invoke(main, ['dist', '--kind', 'zipfian', '--s', '0', '--alpha', '4'])
        assert result.exit_code == 1


class TestPlot:
    def test_results_with_bounds_overlay(self, runner, tiny_config, tmp_path):
        out = tmp_path / "res"
        runner.invoke(main, ['run', '-c', str(tiny_config), '--out-dir', str(out),
                             '--no-record'])
        bounds = tmp_path / "bounds.csv"
        runner.invoke(main, ['bounds', '--alpha', '2', '--tau-max', '2', '--means', '2,3',
                             '--max-rewards', '4,4', '--t-max', '60', '--output', str(bounds)])
        svg = tmp_path / "fig.svg"
        result = runner.invoke(main, ['plot', '-i', str(out / "tiny_exp.csv"),
                                      '--overlay-bounds', str(bounds), '--log-x', '-o', str(svg)])
        assert result.exit_code == 0, result.output
        text = svg.read_text()
        assert text.count('<polyline') == 2 + 3
        assert 'stroke-dasharray' in text

    def test_empty_csv(self, runner, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        result = runner.invoke(main, ['plot', '-i', str(empty), '-o', str(tmp_path / "x.svg")])
        assert result.exit_code == 1
        assert "no data rows" in result.output

    def test_missing_columns(self, runner, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("policy_name,t\nx,1\n")
        result = runner.invoke(main, ['plot', '-i', str(bad), '-o', str(tmp_path / "x.svg")])
        assert result.exit_code == 1
        assert "mean_regret" in result.output


class TestPresets:
    def test_list(self, runner):
        result = runner.invoke(main, ['presets'])
        assert result.exit_code == 0
        assert "Bundled presets" in result.output

    def test_show(self, runner):
        result = runner.invoke(main, ['presets', '--show', 'setting2_c3_early'])
        assert result.exit_code == 0
        data = json.loads(result.output)
        assert data['environment'] == {'setting': 'setting2', 'configuration': 3,
                                       'scenario': 'early'}

    def test_show_unknown(self, runner):
        result = runner.invoke(main, ['presets', '--show', 'nope'])
        assert result.exit_code == 1
        assert "unknown preset" in result.output


class TestHistory:
    def test_empty(self, runner):
        result = runner.invoke(main, ['history'])
        assert result.exit_code == 0
        assert "No runs recorded yet" in result.output
