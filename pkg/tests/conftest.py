"""Shared fixtures."""

import pytest

from tpmab.env import make_trace_env, write_trace


@pytest.fixture
def tpmab_home(tmp_path, monkeypatch):
    """Isolated registry directory."""
    home = tmp_path / "home"
    monkeypatch.setenv("TPMAB_HOME", str(home))
    monkeypatch.delenv("TPMAB_OUT_DIR", raising=False)
    return home


@pytest.fixture
def tiny_trace(tmp_path):
    """K=2, tau_max=2 trace with one deterministic record per arm: [2, 0] and [1, 2]."""
    path = tmp_path / "tiny.csv"
    write_trace(path, [(0, [2.0, 0.0]), (1, [1.0, 2.0])], num_arms=2, tau_max=2)
    return path


@pytest.fixture
def tiny_env(tiny_trace):
    return make_trace_env(tiny_trace, K=2, tau_max=2)
