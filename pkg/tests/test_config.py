from pathlib import Path

import pytest

from vhjlab.config import ConfigError, load_config, parse_config
from vhjlab.solver import SchemeConfig

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def _base(**overrides):
    doc = {"q": 1.8, "horizon": 10.0,
           "datum": {"family": "gaussian", "amplitude": 1.0},
           "grid": {"spacing": 0.1, "radius": 20.0}}
    doc.update(overrides)
    return doc


def test_minimal_document():
    cfg = parse_config(_base())
    assert cfg.N == 1 and cfg.t0 == 0.01 and cfg.scheme == SchemeConfig()
    assert cfg.grid.node_count == 200
    spec = cfg.problem()
    assert spec.q == 1.8 and spec.horizon == 10.0
    times = cfg.output_times()
    assert times[0] == 0.01 and times[-1] == pytest.approx(10.0)


@pytest.mark.parametrize("key", ["q", "horizon", "datum", "grid"])
def test_missing_key_named(key):
    doc = _base()
    del doc[key]
    with pytest.raises(ConfigError, match=repr(key)):
        parse_config(doc)


@pytest.mark.parametrize("doc", [
    _base(q="1.5"),
    _base(q=1.0),
    _base(N=1.5),
    _base(datum={"family": "cauchy", "amplitude": 1.0}),
    _base(datum={"family": "gaussian"}),
    _base(datum={"family": "gaussian", "amplitude": -1.0, "sign": "nonnegative"}),
    _base(grid={"radius": 10.0}),
    _base(grid={"spacing": 0.1, "node_count": 10.5}),
    _base(schedule={"t0": 50.0}),
    _base(scheme={"integrator": "imex"}),
    _base(scheme={"time_integrator": "rk4"}),
    _base(diagnostics={"list": ["plots"]}),
    _base(diagnostics={"list": ["vss_error"]}),
    _base(q=2.5, diagnostics={"list": ["z_error"]}),
])
def test_invalid_documents(doc):
    with pytest.raises(ConfigError):
        parse_config(doc)


def test_full_document():
    cfg = parse_config(_base(
        q=1.3, N=2, datum={"family": "smooth_bump", "amplitude": 2.0, "support_radius": 1.5},
        grid={"spacing": 0.05, "node_count": 400}, schedule={"t0": 0.1, "ratio": 2.0},
        scheme={"time_integrator": "explicit_euler", "dt_max": 0.01},
        diagnostics={"list": ["vss_error", "monitors"]}, output={"dir": "runs/a"}))
    assert cfg.N == 2 and cfg.grid.dimension == 2 and cfg.grid.radius == pytest.approx(20.0)
    assert cfg.datum.support_radius == 1.5 and cfg.ratio == 2.0
    assert cfg.scheme.time_integrator == "explicit_euler"
    assert cfg.diagnostics == ("vss_error", "monitors") and cfg.output_dir == "runs/a"


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("q = = 1\n")
    with pytest.raises(ConfigError):
        load_config(bad)


@pytest.mark.parametrize("path", sorted(SCENARIOS.glob("*.toml")), ids=lambda p: p.stem)
def test_shipped_scenarios_parse(path):
    cfg = load_config(path)
    cfg.problem().initial_field()
