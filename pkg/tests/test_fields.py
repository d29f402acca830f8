import numpy as np
import pytest

from backend.errors import AllZero, ConfigError
from backend.fields import (FieldDefinition, SignClass, classify_sign, constant_field, integrate, sample_field,
                            zero_set)
from backend.geometry import uniform_submesh


@pytest.fixture
def part():
    return uniform_submesh(0.5, 1.0, 50)


def test_shorthand_definitions(part):
    assert FieldDefinition.model_validate(1.5).kind == 'constant'
    field = sample_field(FieldDefinition.model_validate("4*(x - 0.75)"), part, 2)
    np.testing.assert_allclose(field.values, 4 * (part.nodes - 0.75))
    assert field.sign_class == SignClass.CHANGES


def test_trapezoid_is_exact_for_linear_weights(part):
    field = sample_field(FieldDefinition.model_validate("4*(x - 0.8)"), part, 2)
    assert integrate(field) == pytest.approx(-0.1, abs=1e-14)
    field = sample_field(FieldDefinition.model_validate("4*(x - 0.75)"), part, 2)
    assert abs(field.integral) <= 1e-14


def test_piecewise_is_right_continuous(part):
    definition = FieldDefinition(kind='piecewise', breakpoints=[0.6, 0.8], values=[1.0, 0.0, 2.0])
    f = definition.evaluator()
    np.testing.assert_array_equal(f(np.array([0.59, 0.6, 0.79, 0.8])), [1.0, 0.0, 0.0, 2.0])


def test_sampled_interpolates():
    definition = FieldDefinition(kind='sampled', points=[0.0, 1.0], values=[0.0, 2.0])
    assert definition.evaluator()(np.array([0.25]))[0] == pytest.approx(0.5)


@pytest.mark.parametrize('data', [
    {'kind': 'piecewise', 'breakpoints': [0.5], 'values': [1.0]},
    {'kind': 'piecewise', 'breakpoints': [0.7, 0.6], 'values': [1.0, 2.0, 3.0]},
    {'kind': 'sampled', 'points': [0.0], 'values': [1.0]},
    {'kind': 'expression'},
])
def test_malformed_definitions(data):
    with pytest.raises(ValueError):
        FieldDefinition.model_validate(data)


@pytest.mark.parametrize('text', ["y + 1", "log(x)", "__import__('os')", "x +* 2"])
def test_expression_grammar_rejects(text):
    with pytest.raises(ConfigError):
        FieldDefinition.model_validate(text).evaluator()


def test_sign_classes(part):
    assert constant_field(2.0, part, 1).sign_class == SignClass.NONNEG
    assert constant_field(-1.0, part, 1).sign_class == SignClass.NONPOS
    assert classify_sign(constant_field(0.0, part, 1)) == SignClass.ZERO
    with pytest.raises(AllZero):
        classify_sign(constant_field(0.0, part, 1), require_nontrivial=True)


def test_zero_set_runs(part):
    definition = FieldDefinition(kind='piecewise', breakpoints=[0.5999999, 0.8000001], values=[2.0, 0.0, 2.0])
    zs = zero_set(sample_field(definition, part, 2))
    assert len(zs.intervals) == 1
    assert zs.intervals[0] == pytest.approx((0.6, 0.8))
    assert zs.interior_flag

    edge = sample_field(FieldDefinition.model_validate("max(0, x - 0.7)"), part, 2)
    zs = zero_set(edge)
    assert zs.intervals[0][0] == 0.5
    assert not zs.interior_flag
    assert zero_set(constant_field(1.0, part, 2)).empty


def test_field_arithmetic(part):
    field = constant_field(2.0, part, 1)
    np.testing.assert_array_equal((-3.0 * field).values, -6.0)
    np.testing.assert_array_equal((field + field).values, 4.0)
    assert (-field).sign_class == SignClass.NONPOS
