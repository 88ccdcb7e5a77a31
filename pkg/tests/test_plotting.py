import xml.etree.ElementTree as ET

import pytest

from tpmab.errors import NoDataError, ResultsSchemaError
from tpmab.harness import AggregateResult, PolicyAggregate, export_results
from tpmab.plotting import (
    Series,
    load_series,
    render_curves,
    render_pmf,
    series_from_bounds,
    series_from_result,
)
from tpmab.spread import named_spread

NS = {'svg': 'http://www.w3.org/2000/svg'}


def _result(*names):
    policies = tuple(
        PolicyAggregate(name=name, kind='ucb1', rounds=(100, 200, 300),
                        mean_regret=(10.0 * i, 15.0 * i, 18.0 * i),
                        ci_half_width=(1.0, 1.5, 2.0), final_mean=18.0 * i, final_ci=2.0,
                        time_averaged_mean=14.0 * i, time_averaged_ci=1.0, runs=5)
        for i, name in enumerate(names, start=1)
    )
    return AggregateResult(name='r', policies=policies)


def _parse(path):
    return ET.parse(path).getroot()


class TestLoadSeries:
    def test_results_csv(self, tmp_path):
        path = export_results(_result('UCB1', 'TP-UCB-FR(20)'), 'csv', tmp_path / 'r.csv')
        series = load_series(path)
        assert [s.name for s in series] == ['UCB1', 'TP-UCB-FR(20)']
        assert series[1].y == [20.0, 30.0, 36.0]
        assert series[0].half_width == [1.0, 1.5, 2.0]

    def test_results_json(self, tmp_path):
        path = export_results(_result('a'), 'json', tmp_path / 'r.json')
        assert load_series(path)[0].x == [100.0, 200.0, 300.0]

    def test_bounds_csv_drops_infinite_values(self, tmp_path):
        path = tmp_path / 'b.csv'
        path.write_text(
            "T,lower_bound,upper_bound,upper_bound_uniform,tightness_value\n"
            "2,inf,5.0,6.0,1.0\n"
            "10,1.5,9.0,11.0,1.0\n"
        )
        series = {s.name: s for s in series_from_bounds(path)}
        assert series['lower_bound'].x == [10.0]
        assert series['upper_bound'].y == [5.0, 9.0]
        assert all(s.dashed for s in series.values())

    def test_empty_csv(self, tmp_path):
        path = tmp_path / 'empty.csv'
        path.write_text('')
        with pytest.raises(NoDataError, match="no data rows"):
            load_series(path)

    def test_header_only(self, tmp_path):
        path = export_results(AggregateResult(name='none'), 'csv', tmp_path / 'h.csv')
        with pytest.raises(NoDataError):
            load_series(path)

    def test_unknown_schema(self, tmp_path):
        path = tmp_path / 'x.csv'
        path.write_text('a,b\n1,2\n')
        with pytest.raises(ResultsSchemaError, match="policy_name"):
            load_series(path)


class TestRenderCurves:
    def test_single_policy(self, tmp_path):
        path = render_curves(series_from_result(_result('UCB1')), tmp_path / 'one.svg',
                             title='Regret')
        root = _parse(path)
        assert root.tag == '{http://www.w3.org/2000/svg}svg'
        assert len(root.findall('.//svg:polyline', NS)) == 1
        assert len(root.findall('.//svg:polygon', NS)) == 1
        legend = [t.text for t in root.findall('.//svg:text', NS)]
        assert 'UCB1' in legend
        assert 'Regret' in legend

    def test_standalone(self, tmp_path):
        path = render_curves(series_from_result(_result('a', 'b')), tmp_path / 'p.svg')
        text = path.read_text()
        assert text.startswith('<?xml version="1.0" encoding="UTF-8"?>')
        assert '<script' not in text
        assert 'href' not in text

    def test_deterministic(self, tmp_path):
        series = series_from_result(_result('a', 'b'))
        a = render_curves(series, tmp_path / 'a.svg', log_x=True).read_bytes()
        b = render_curves(series, tmp_path / 'b.svg', log_x=True).read_bytes()
        assert a == b

    def test_dashed_overlay(self, tmp_path):
        series = series_from_result(_result('a'))
        series.append(Series(name='upper_bound', x=[100.0, 300.0], y=[50.0, 80.0], dashed=True))
        root = _parse(render_curves(series, tmp_path / 'o.svg'))
        dashed = [p for p in root.findall('.//svg:polyline', NS) if p.get('stroke-dasharray')]
        assert len(dashed) == 1

    def test_names_are_escaped(self, tmp_path):
        series = [Series(name='a<b & c', x=[1.0, 2.0], y=[0.0, 1.0])]
        root = _parse(render_curves(series, tmp_path / 'e.svg'))
        assert 'a<b & c' in [t.text for t in root.findall('.//svg:text', NS)]

    def test_no_series(self, tmp_path):
        with pytest.raises(NoDataError):
            render_curves([], tmp_path / 'none.svg')


class TestRenderPmf:
    def test_one_bar_per_group(self, tmp_path):
        root = _parse(render_pmf(named_spread('begin', 20), tmp_path / 'pmf.svg'))
        bars = root.findall('.//svg:g/svg:rect', NS)
        assert len(bars) == 20
