import pytest

from backend.config import context_for, load_config, mesh_for, parse_config
from backend.errors import ConfigError, InvalidGeometry
from tests.conftest import CONFIG_DIR


MINIMAL = """\
name = "minimal"

[domain]
xs = 0.5
xL = 1.0

[weights]
m1 = 1.0
m2 = "x - 0.75"
"""


def test_minimal_config_defaults():
    config = parse_config(MINIMAL)
    assert config.name == 'minimal' and config.seed == 0
    assert (config.domain.n1, config.domain.n2) == (64, 64)
    assert config.weights.m2.kind == 'expression'
    assert config.curve.n_rays == 512 and config.curve.tol_curve == 1e-6
    assert config.logistic.p1 == 2.0


def test_errors_point_at_the_offending_line():
    text = MINIMAL + "\n[curve]\nn_rays = 10\n"
    with pytest.raises(ConfigError) as info:
        parse_config(text, 'run.toml')
    line = text.splitlines().index('n_rays = 10') + 1
    assert f"run.toml:{line}: curve.n_rays" in info.value.detail
    assert info.value.status_code == 2


def test_nested_field_errors():
    text = MINIMAL.replace('m1 = 1.0', 'm1 = { kind = "piecewise", breakpoints = [0.2], values = [1.0] }')
    with pytest.raises(ConfigError) as info:
        parse_config(text, 'run.toml')
    assert 'run.toml:8: weights.m1' in info.value.detail


def test_toml_syntax_error():
    with pytest.raises(ConfigError):
        parse_config(MINIMAL + "[curve\n")


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / 'absent.toml'))


def test_reversed_logistic_range():
    with pytest.raises(ConfigError):
        parse_config(MINIMAL + "\n[logistic]\nlam1 = [3.0, -3.0]\n")


def test_overrides():
    config = parse_config(MINIMAL, overrides={'seed': 7, 'curve.n_rays': 128, 'eigen.tol_eig': None,
                                              'domain.n2': 32})
    assert config.seed == 7 and config.curve.n_rays == 128
    assert config.eigen.tol_eig == 1e-10
    assert config.domain.n2 == 32


def test_invalid_geometry_is_a_config_error():
    config = parse_config(MINIMAL.replace('xs = 0.5', 'xs = 1.5'))
    with pytest.raises(InvalidGeometry) as info:
        mesh_for(config)
    assert isinstance(info.value, ConfigError)


@pytest.mark.parametrize('path', sorted(CONFIG_DIR.glob('*.toml')), ids=lambda p: p.stem)
def test_shipped_configs_load(path):
    config = load_config(str(path))
    ctx = context_for(config, mesh_for(config, 16, 16))
    assert ctx.mesh.size == 34
