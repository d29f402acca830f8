from pathlib import Path

import pytest

from backend.config import context_for, load_config
from backend.fields import constant_field, sample_field, FieldDefinition
from backend.geometry import DomainSpec, build_mesh
from backend.spectral_maps import build_context


CONFIG_DIR = Path(__file__).resolve().parent.parent / 'configs'


def load(name: str, **overrides):
    return load_config(str(CONFIG_DIR / f"{name}.toml"), overrides or None)


def make_context(m1, m2, gamma1=1.0, gamma2=1.0, n1=64, n2=64, xs=0.5, xL=1.0, radial_power=0):
    mesh = build_mesh(DomainSpec(xs=xs, xL=xL, n1=n1, n2=n2, radial_power=radial_power))
    fields = [sample_field(FieldDefinition.model_validate(m), part, i)
              for i, (m, part) in enumerate(((m1, mesh.part1), (m2, mesh.part2)), start=1)]
    return build_context(mesh, *fields, gamma1, gamma2)


@pytest.fixture(scope='session')
def flat_mesh():
    return build_mesh(DomainSpec(xs=0.5, xL=1.0, n1=32, n2=32))


@pytest.fixture(scope='session')
def ones_ctx(flat_mesh):
    return build_context(flat_mesh, constant_field(1.0, flat_mesh.part1, 1), constant_field(1.0, flat_mesh.part2, 2),
                         1.0, 1.0)


@pytest.fixture(scope='session')
def nonneg_ctx():
    return context_for(load('both_nonneg'))


@pytest.fixture(scope='session')
def mixed_neg_ctx():
    return context_for(load('mixed_neg'))


@pytest.fixture(scope='session')
def both_sign_ctx():
    return context_for(load('both_sign'))
