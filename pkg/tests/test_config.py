import pytest

from ymlab.config import SCHEMA, RunConfig, load_config, parse_config_text
from ymlab.errors import ConfigError


def test_defaults():
    cfg = RunConfig()
    assert cfg["group"] == "su2"
    assert cfg["flow.scheme"] == "explicit_euler"
    assert cfg.extent == (4, 4, 4, 4)
    assert cfg["asymptotics.mu"] == [-2.0]


def test_parse_text_with_comments():
    cfg = parse_config_text("""
        # small abelian run
        group = U1
        lattice.dim = 2        # square
        lattice.extent = 4, 6
        flow.dt = 0.02
        cone.radii = 0.5,1.0
    """)
    assert cfg["group"] == "u1"
    assert cfg.extent == (4, 6)
    assert cfg["flow.dt"] == 0.02
    assert cfg["cone.radii"] == [0.5, 1.0]


def test_file_then_overrides(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("seed = 3\nflow.t_max = 10\n")
    cfg = load_config(str(path), ["seed=5", "flow.scheme = RK4"])
    assert cfg["seed"] == 5
    assert cfg["flow.t_max"] == 10.0
    assert cfg["flow.scheme"] == "rk4"


@pytest.mark.parametrize("override, key", [
    ("flow.sceme=rk4", "flow.sceme"),
    ("group=su3", "group"),
    ("flow.dt=fast", "flow.dt"),
    ("lattice.extent=4,1", "lattice.extent"),
    ("gauge.steps=1", "gauge.steps"),
    ("cone.n=4", "cone.n"),
    ("lattice.dim=5", "lattice.dim"),
    ("lattice.dim=1", "lattice.dim"),
    ("asymptotics.mu=", "asymptotics.mu"),
])
def test_bad_values_name_the_key(override, key):
    with pytest.raises(ConfigError) as err:
        load_config(None, [override])
    assert err.value.key == key


def test_override_needs_equals():
    with pytest.raises(ConfigError):
        load_config(None, ["seed"])


def test_missing_file():
    with pytest.raises(ConfigError) as err:
        load_config("/nonexistent/ymlab.cfg")
    assert err.value.key == "--config"


def test_line_without_equals_reports_location():
    with pytest.raises(ConfigError) as err:
        parse_config_text("seed = 1\nflow.dt 0.1\n", source="run.cfg")
    assert err.value.key == "run.cfg:2"


def test_extent_length_checked():
    with pytest.raises(ConfigError) as err:
        load_config(None, ["lattice.dim=3", "lattice.extent=4,4"])
    assert err.value.key == "lattice.extent"


def test_dt_stability_bound():
    load_config(None, ["lattice.spacing=0.5", "flow.dt=0.025"])
    with pytest.raises(ConfigError) as err:
        load_config(None, ["lattice.spacing=0.5", "flow.dt=0.03"])
    assert err.value.key == "flow.dt"


def test_to_text_roundtrip():
    cfg = load_config(None, ["group=u1", "lattice.extent=3,4,5,6", "asymptotics.mu=-2,0.5", "seed=9"])
    text = cfg.to_text()
    assert len(text.splitlines()) == len(SCHEMA)
    again = parse_config_text(text)
    for key in SCHEMA:
        assert again[key] == cfg[key]


def test_output_dir_environment(monkeypatch):
    monkeypatch.setenv("YMLAB_OUTPUT_DIR", "/tmp/ymlab-env")
    assert str(RunConfig().output_dir) == "/tmp/ymlab-env"
    cfg = load_config(None, ["output.dir=elsewhere"])
    assert str(cfg.output_dir) == "elsewhere"
    monkeypatch.delenv("YMLAB_OUTPUT_DIR")
    assert str(RunConfig().output_dir) == "ymlab-out"


def test_unknown_key_lookup():
    with pytest.raises(ConfigError):
        RunConfig()["flow.nothing"]
