import pytest

from tpmab.errors import InvalidParameterError
from tpmab.utils import (
    format_duration,
    format_percent,
    format_regret,
    parse_dist_option,
    parse_float_list,
)


class TestParsing:
    def test_float_list(self):
        assert parse_float_list("50, 150,300") == [50.0, 150.0, 300.0]

    @pytest.mark.parametrize("text", ["", " , ", "1,two"])
    def test_float_list_errors(self, text):
        with pytest.raises(InvalidParameterError):
            parse_float_list(text)

    @pytest.mark.parametrize("text, record", [
        ("uniform", {'kind': 'uniform', 'alpha': 20}),
        ("named:begin", {'kind': 'named', 'alpha': 20, 'name': 'begin'}),
        ("very_end", {'kind': 'named', 'alpha': 20, 'name': 'very_end'}),
        ("beta_binomial:2,8", {'kind': 'beta_binomial', 'alpha': 20, 'a': 2.0, 'b': 8.0}),
        ("zipfian:1", {'kind': 'zipfian', 'alpha': 20, 's': 1.0}),
        ("boltzmann:0.5", {'kind': 'boltzmann', 'alpha': 20, 'lambda': 0.5}),
        ("hypergeometric:200", {'kind': 'hypergeometric', 'alpha': 20, 'n_pop': 200}),
    ])
    def test_dist_option(self, text, record):
        assert parse_dist_option(text, 20) == record

    @pytest.mark.parametrize("text", ["zipfian:1,2", "Begin!", "beta_binomial:2"])
    def test_dist_option_errors(self, text):
        with pytest.raises(InvalidParameterError):
            parse_dist_option(text, 20)


class TestFormatting:
    def test_regret(self):
        assert format_regret(856123.4) == "8.561e+05"
        assert format_regret(12.5) == "12.50"
        assert format_regret(float('nan')) == "-"
        assert format_regret(float('inf')) == "inf"

    def test_percent(self):
        assert format_percent(21.64) == "+21.6%"
        assert format_percent(None) == "-"

    def test_duration(self):
        assert format_duration(42) == "42s"
        assert format_duration(185) == "3m 05s"
        assert format_duration(3720) == "1h 02m"
        assert format_duration(None) == "-"
