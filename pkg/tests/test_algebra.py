import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from ymlab import algebra as alg
from ymlab.algebra import (AlgebraElement, Group, GroupElement, adjoint_action, exp_map, group_algebra_ops,
                           group_inv, group_mul, inner_product, lie_bracket, log_map)
from ymlab.errors import BranchCutError, GroupMismatch

vec3 = arrays(np.float64, 3, elements=st.floats(-1.0, 1.0))


def _su2(v):
    return alg.exp(Group.SU2, np.asarray(v, float))


@given(vec3)
def test_su2_exp_log_roundtrip(v):
    np.testing.assert_allclose(alg.log(Group.SU2, _su2(v)), v, atol=1e-12)


def test_su2_log_close_to_the_cut():
    v = np.array([0.0, 0.6, 0.8]) * (np.pi - 0.01)
    np.testing.assert_allclose(log_map(exp_map(AlgebraElement(Group.SU2, v))).data, v, atol=1e-9)


def test_su2_log_on_the_cut_raises():
    with pytest.raises(BranchCutError):
        alg.log(Group.SU2, _su2([np.pi, 0.0, 0.0]))


def test_u1_log_on_the_cut_raises():
    with pytest.raises(BranchCutError):
        alg.log(Group.U1, np.array([-1.0, 0.0]))


@given(vec3, vec3, vec3)
def test_su2_multiplication_is_associative(a, b, c):
    g, h, k = _su2(a), _su2(b), _su2(c)
    left = alg.mul(Group.SU2, alg.mul(Group.SU2, g, h), k)
    right = alg.mul(Group.SU2, g, alg.mul(Group.SU2, h, k))
    np.testing.assert_allclose(left, right, atol=1e-12)


@given(vec3)
def test_inverse_gives_identity(v):
    g = _su2(v)
    np.testing.assert_allclose(alg.mul(Group.SU2, g, alg.inv(Group.SU2, g)), alg.identity(Group.SU2), atol=1e-12)


@given(vec3, vec3, vec3)
def test_adjoint_preserves_bracket_and_metric(v, x, y):
    g = _su2(v)
    ad = lambda z: alg.adjoint(Group.SU2, g, z)
    np.testing.assert_allclose(ad(alg.bracket(Group.SU2, x, y)), alg.bracket(Group.SU2, ad(x), ad(y)), atol=1e-12)
    assert alg.inner(Group.SU2, ad(x), ad(y)) == pytest.approx(alg.inner(Group.SU2, x, y), abs=1e-12)


@given(vec3, vec3)
def test_adjoint_matches_conjugation(v, x):
    g = _su2(v)
    conj = alg.mul(Group.SU2, alg.mul(Group.SU2, g, _su2(1e-6 * x)), alg.inv(Group.SU2, g))
    np.testing.assert_allclose(alg.log(Group.SU2, conj) / 1e-6, alg.adjoint(Group.SU2, g, x), atol=1e-6)


def test_bracket_structure_constants():
    e = np.eye(3)
    np.testing.assert_allclose(alg.bracket(Group.SU2, e[0], e[1]), 2.0 * e[2])
    np.testing.assert_allclose(alg.bracket(Group.SU2, e[1], e[0]), -2.0 * e[2])


@given(vec3, vec3, vec3)
def test_jacobi_identity(x, y, z):
    b = lambda p, q: alg.bracket(Group.SU2, p, q)
    total = b(x, b(y, z)) + b(y, b(z, x)) + b(z, b(x, y))
    np.testing.assert_allclose(total, 0.0, atol=1e-12)


@pytest.mark.parametrize("x", [np.array([0.3, -0.2, 0.5]), np.array([1e-6, 0.0, 2e-6]), np.array([1.2, 0.9, -1.1])])
def test_dexpinv_inverts_the_exponential_differential(x):
    y = np.array([0.7, -0.4, 0.25])
    eps = 1e-5
    base_inv = alg.inv(Group.SU2, _su2(x))
    plus = alg.log(Group.SU2, alg.mul(Group.SU2, _su2(x + eps * y), base_inv))
    minus = alg.log(Group.SU2, alg.mul(Group.SU2, _su2(x - eps * y), base_inv))
    z = (plus - minus) / (2 * eps)
    np.testing.assert_allclose(alg.dexpinv(Group.SU2, x, z), y, atol=1e-7)


def test_u1_is_abelian():
    g = alg.exp(Group.U1, np.array([0.4]))
    x = np.array([1.5])
    np.testing.assert_allclose(alg.adjoint(Group.U1, g, x), x)
    np.testing.assert_allclose(alg.bracket(Group.U1, x, np.array([-2.0])), 0.0)
    np.testing.assert_allclose(alg.dexpinv(Group.U1, np.array([0.3]), x), x)


def test_u1_exp_wraps_angles():
    np.testing.assert_allclose(alg.log(Group.U1, alg.exp(Group.U1, np.array([2 * np.pi + 0.25]))), [0.25])


def test_element_api_combines():
    g = exp_map(AlgebraElement(Group.SU2, [0.1, 0.2, 0.3]))
    h = exp_map(AlgebraElement(Group.SU2, [-0.3, 0.0, 0.4]))
    x = AlgebraElement(Group.SU2, [1.0, 0.0, 0.0])
    y = AlgebraElement(Group.SU2, [0.0, 1.0, 0.0])
    gh, ginv, adx, xy = group_algebra_ops(g, h, x, y)
    np.testing.assert_allclose(gh.data, (g * h).data)
    np.testing.assert_allclose(group_mul(g, ginv).data, GroupElement.identity(Group.SU2).data, atol=1e-12)
    assert inner_product(adx, adx) == pytest.approx(2.0)
    np.testing.assert_allclose(xy.data, [0.0, 0.0, 2.0])
    np.testing.assert_allclose(lie_bracket(x, y).data, xy.data)
    np.testing.assert_allclose(group_inv(ginv).data, g.data)
    np.testing.assert_allclose(adjoint_action(GroupElement.identity(Group.SU2), x).data, x.data)


def test_mixing_groups_raises():
    x = AlgebraElement(Group.SU2, [1.0, 0.0, 0.0])
    y = AlgebraElement(Group.U1, [1.0])
    with pytest.raises(GroupMismatch):
        lie_bracket(x, y)
    with pytest.raises(GroupMismatch):
        x + y


def test_wrong_component_count_rejected():
    with pytest.raises(ValueError):
        GroupElement(Group.U1, [1.0, 0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        AlgebraElement(Group.SU2, [1.0])


def test_group_parse():
    assert Group.parse("su2") is Group.SU2
    assert Group.parse(" U1 ") is Group.U1
    with pytest.raises(ValueError):
        Group.parse("su3")
