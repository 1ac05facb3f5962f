import pytest
from hypothesis import given, strategies as st

from extinguish.errors import ConfigError
from extinguish.scenarios.catalog import CATALOG, load_scenario, scenario_names
from extinguish.scenarios.config import RunConfig, format_config, parse_config

MINIMAL = """
[equation]
m = 0.5
a = 0,1
"""


def test_minimal_uses_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg == RunConfig()
    assert cfg.params().a == 1j


def test_complex_literal_and_quotes():
    cfg = parse_config('[equation]\nm = 0.5\na = "-0.5+1j"\n[run]\nscenario = \'x\'\n')
    assert cfg.a == complex(-0.5, 1) and cfg.scenario == "x"


def test_m_out_of_range():
    with pytest.raises(ConfigError, match=r"m must lie in \(0,1\)"):
        parse_config("[equation]\nm = 1.5\n")


def test_a_outside_cone():
    with pytest.raises(ConfigError) as info:
        parse_config("[equation]\nm = 0.5\na = 1\n")
    msg = str(info.value)
    assert "cone" in msg and "Im(a) > 0" in msg


def test_unknown_key_reports_line():
    with pytest.raises(ConfigError, match=r"line 3: unknown key 'foo' in \[grid\]"):
        parse_config("[grid]\nn = 64\nfoo = 1\n")


def test_collects_every_problem():
    text = "[bogus]\nx = 1\n[grid]\nn = abc\nn = 3\nnot a pair\n"
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    msg = str(info.value)
    for frag in ("line 1: unknown section", "line 4: bad value", "line 6: expected"):
        assert frag in msg


def test_duplicate_key():
    with pytest.raises(ConfigError, match="duplicate key 'dt'"):
        parse_config("[time]\ndt = 0.1\ndt = 0.2\n")


def test_semantic_problems():
    bad = RunConfig(n=7, scheme="rk4", check="fancy", ell=3, source_kind="separable")
    probs = " ".join(bad.problems())
    for frag in ("power of two", "scheme", "check", "ell", "T0"):
        assert frag in probs


def test_vanishing_profile_needs_exponent_when_delta_ge_one():
    cfg = RunConfig(dims=4, n=8, ell=1, source_kind="vanishing_profile", source_T0=1.0, eps_star=1e-2)
    assert any("delta >= 1" in p for p in cfg.problems())
    assert not cfg.replace(source_exponent=2.0).problems()


def test_validate_false_defers():
    cfg = parse_config("[equation]\nm = 1.5\n", validate=False)
    assert cfg.problems()


@pytest.mark.parametrize("name", scenario_names())
def test_catalog_round_trip(name):
    cfg = load_scenario(name)
    assert cfg.scenario == name
    assert parse_config(format_config(cfg)) == cfg
    assert parse_config(format_config(cfg)).config_hash() == cfg.config_hash()


def test_unknown_scenario():
    with pytest.raises(KeyError):
        load_scenario("nope")
    assert set(scenario_names()) == set(CATALOG)


@given(st.floats(0.05, 0.95), st.floats(1e-4, 1e-1), st.integers(1, 50), st.booleans(),
       st.lists(st.floats(0, 10), max_size=3))
def test_format_round_trip(m, dt, cadence, disp, snaps):
    cfg = RunConfig(m=m, dt=dt, cadence=cadence, dispersion=disp,
                    snapshot_times=tuple(sorted(snaps)), fit_start=0.5)
    assert parse_config(format_config(cfg), validate=False) == cfg


def test_hash_ignores_output_only():
    a = RunConfig()
    assert a.config_hash() == a.replace(output="elsewhere").config_hash()
    assert a.config_hash() != a.replace(dt=2e-3).config_hash()
    assert len(a.config_hash()) == 16
