import numpy as np
import pytest

from ymlab.algebra import Group
from ymlab.cone import (SampledBallField, CylinderPath, abelian_cone, angular_quadrature, builtin_field,
                        curvature_density, cylinder_check, cylinder_inverse, cylinder_transform, density_profile,
                        density_ratio, flat, instanton_cylinder, maxwell, radial_contraction, rescale, sample_field,
                        sphere_area, yang_monopole, ym_system_residual)
from ymlab.errors import InsufficientSmoothness, QuadratureUnderResolved


def _sphere_points(rng, n, count, min_first=-1.0):
    pts = rng.standard_normal((20 * count, n))
    pts /= np.linalg.norm(pts, axis=-1, keepdims=True)
    return pts[pts[:, 0] > min_first][:count]


# ---------- Quadrature ----------
def test_sphere_area():
    assert sphere_area(2) == pytest.approx(2 * np.pi)
    assert sphere_area(3) == pytest.approx(4 * np.pi)
    assert sphere_area(5) == pytest.approx(8 * np.pi ** 2 / 3)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_angular_rule_integrates_low_degree_polynomials(n):
    nodes, weights = angular_quadrature(n, 6)
    assert weights.sum() == pytest.approx(sphere_area(n), rel=1e-12)
    np.testing.assert_allclose(np.linalg.norm(nodes, axis=-1), 1.0, atol=1e-14)
    for k in range(n):
        assert weights @ nodes[:, k] ** 2 == pytest.approx(sphere_area(n) / n, rel=1e-12)
    assert weights @ (nodes[:, 0] * nodes[:, -1]) == pytest.approx(0.0, abs=1e-12)


def test_weights_are_checked():
    nodes, weights = angular_quadrature(5, 2)
    with pytest.raises(ValueError):
        SampledBallField("x", 5, Group.U1, np.array([0.5, 1.0]), nodes, 0.5 * weights,
                         np.zeros((2, len(nodes), 10, 1)))


# ---------- Fields ----------
def test_curvature_of_the_abelian_cone_on_the_sphere(rng):
    w = _sphere_points(rng, 5, 10)
    F = abelian_cone(5, 0.5).curvature(w)
    np.testing.assert_allclose(curvature_density(F, Group.U1), 4 * 0.25 * (1 - w[:, 0] ** 2 - w[:, 1] ** 2),
                               atol=1e-12)


def test_monopole_curvature_norm_is_constant_on_the_sphere(rng):
    w = _sphere_points(rng, 5, 10, min_first=-0.5)
    dens = curvature_density(yang_monopole().curvature(w), Group.SU2)
    np.testing.assert_allclose(dens, dens[0], rtol=1e-10)
    dens_half = curvature_density(yang_monopole().curvature(0.5 * w), Group.SU2)
    np.testing.assert_allclose(dens_half, 16 * dens[0], rtol=1e-10)


def test_builtin_lookup():
    assert builtin_field("maxwell", 6).n == 6
    with pytest.raises(ValueError):
        builtin_field("yang_monopole", 6)
    with pytest.raises(ValueError):
        builtin_field("hedgehog")
    with pytest.raises(ValueError):
        builtin_field("abelian_cone", 4)


# ---------- Density ratio ----------
def test_abelian_cone_density_ratio_is_constant():
    c = 0.5
    prof = density_profile(abelian_cone(5, c), [0.25, 0.5, 1.0])
    np.testing.assert_allclose(prof.ratios, 32 * np.pi ** 2 * c ** 2 / 5, rtol=1e-8)
    assert prof.spread < 1e-8
    assert prof.monotone
    assert prof.cone_defect < 1e-10


def test_maxwell_density_ratio_grows_like_rho_to_the_fourth():
    c = 2.0
    radii = [0.25, 0.5, 1.0]
    prof = density_profile(maxwell(5, c), radii)
    expected = [8 * np.pi ** 2 / 15 * c ** 2 * r ** 4 for r in radii]
    np.testing.assert_allclose(prof.ratios, expected, rtol=1e-8)
    assert prof.monotone
    assert prof.min_increment > 0
    assert prof.cone_defect > 0.1


def test_maxwell_radial_contraction():
    out = radial_contraction(maxwell(5, 3.0), np.array([2.0, 0.0, 0.0, 0.0, 0.0]))
    np.testing.assert_allclose(out[:, 0], [0.0, 3.0, 0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        radial_contraction(maxwell(), np.zeros(5))


def test_cones_have_no_radial_curvature(rng):
    x = 0.7 * _sphere_points(rng, 5, 8, min_first=-0.5)
    for f in (abelian_cone(), yang_monopole(), flat()):
        assert np.abs(radial_contraction(f, x)).max() < 1e-10


def test_rescaled_field_samples_the_smaller_ball():
    f = maxwell(5, 1.5)
    big = density_profile(f, [0.25, 0.5])
    small = density_profile(rescale(f, 0.5), [0.5, 1.0])
    np.testing.assert_allclose(small.ratios, big.ratios, rtol=1e-8)


def test_rescaled_samples():
    s = sample_field(instanton_cylinder(), 1e-3, 1.0, radial=65)
    r = rescale(s, 0.5)
    assert density_ratio(r, 1.0) == pytest.approx(density_ratio(s, 0.5), rel=1e-10)
    with pytest.raises(ValueError):
        rescale(s, 1.5)


def test_cone_is_unchanged_by_rescaling():
    f = abelian_cone()
    a = density_profile(f, [0.5, 1.0]).ratios
    b = density_profile(rescale(f, 0.25), [0.5, 1.0]).ratios
    np.testing.assert_allclose(a, b, rtol=1e-10)


def test_instanton_refines_at_second_order():
    f = instanton_cylinder()
    exact = density_ratio(sample_field(f, 1e-3, 1.0, radial=513), 1.0)
    errs = [abs(density_ratio(sample_field(f, 1e-3, 1.0, radial=k), 1.0) - exact) for k in (65, 129)]
    assert 3.0 < errs[0] / errs[1] < 5.0


def test_sample_count_is_made_odd():
    assert len(sample_field(flat(), 0.1, 1.0, radial=10).radii) == 11


def test_rho_outside_samples_rejected():
    s = sample_field(maxwell(), 0.1, 1.0)
    with pytest.raises(ValueError):
        density_ratio(s, 2.0)


def test_ragged_shells_are_under_resolved():
    nodes, weights = angular_quadrature(5, 2)
    curv = np.ones((9, len(nodes), 10, 1))
    curv[1::2] *= 100.0
    s = SampledBallField("ragged", 5, Group.U1, np.geomspace(1e-3, 1.0, 9), nodes, weights, curv)
    with pytest.raises(QuadratureUnderResolved):
        density_ratio(s, 1.0)


# ---------- Cylinder picture ----------
def test_monopole_is_a_stationary_cylinder_solution(rng):
    pts = _sphere_points(rng, 5, 6, min_first=-0.3)
    samples = cylinder_transform(yang_monopole(), pts, [0.0, 0.5])
    np.testing.assert_allclose(samples.beta, 0.0, atol=1e-12)
    norms = samples.curvature_norm
    assert np.ptp(norms) < 1e-10 * norms.max()
    check = cylinder_check(yang_monopole(), pts, [0.0, 0.5])
    assert check.norm_mismatch < 1e-6
    assert check.res1 < 1e-6
    assert check.res2 < 1e-6


def test_instanton_solves_the_cylinder_system(rng):
    pts = _sphere_points(rng, 5, 6)
    check = cylinder_check(instanton_cylinder(), pts, [0.0, 0.3])
    assert check.norm_mismatch < 1e-6
    assert check.res1 < 1e-6
    assert check.res2 < 1e-6


def test_abelian_cone_is_not_yang_mills():
    pts = np.array([[1.0, 1.0, 0.0, 0.0, 0.0]])
    check = cylinder_check(abelian_cone(), pts, [0.0])
    assert check.norm_mismatch < 1e-6
    assert check.res1 > 0.1


def test_flat_field_has_zero_residuals(rng):
    check = cylinder_check(flat(), _sphere_points(rng, 5, 3), [0.0, 1.0])
    assert check.res1 == 0.0
    assert check.res2 == 0.0


def test_cylinder_inverse_recovers_the_ball_connection(rng):
    f = instanton_cylinder()
    samples = cylinder_transform(f, _sphere_points(rng, 5, 5), [0.0, 0.4, 1.0])
    x, A = cylinder_inverse(samples)
    np.testing.assert_allclose(A, f.connection(x), atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(x, axis=-1),
                               np.broadcast_to(np.exp(-samples.times)[:, None], x.shape[:-1]))


def test_kinked_connection_is_not_smooth_enough():
    def connection(t, w):
        A = np.zeros(w.shape + (1,))
        A[..., 1, 0] = np.tanh((w[..., 0] - 0.3) / 1e-3)
        return A

    path = CylinderPath(5, Group.U1, connection, lambda t, w: np.zeros(w.shape[:-1] + (1,)))
    w = np.array([[0.301, np.sqrt(1 - 0.301 ** 2), 0.0, 0.0, 0.0]])
    with pytest.raises(InsufficientSmoothness):
        ym_system_residual(path, w, [0.0])
