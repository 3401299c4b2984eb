import numpy as np
import pytest

from ymlab.algebra import Group
from ymlab.functional import (coulomb_slice, curvature_variation, hessian_apply, indicial_roots, jacobi_apply,
                              spectrum, ym_action, ym_gradient)
from ymlab.lattice import (Lattice, constant_flux, curvature, d_A_star, gauge_transform, identity_links, perturb,
                           random_form, random_gauge, random_links)


def test_action_is_gauge_invariant(small, rng, group):
    U = random_links(small, group, rng, 0.5)
    g = random_gauge(small, group, rng, 2.0)
    assert ym_action(gauge_transform(U, g)) == pytest.approx(ym_action(U), rel=1e-12)


def test_flat_connection_is_critical(small, group):
    U = identity_links(small, group)
    assert ym_action(U) == 0.0
    assert ym_gradient(U).norm() == 0.0


def test_gradient_matches_energy_derivative(small, rng, group):
    U = random_links(small, group, rng, 0.4)
    a = random_form(small, group, 1, rng)
    eps = 1e-5
    fd = (ym_action(perturb(U, a, eps)) - ym_action(perturb(U, a, -eps))) / (2 * eps)
    assert fd == pytest.approx(2.0 * ym_gradient(U).inner(a), rel=1e-6)


def test_curvature_variation_matches_finite_differences(small, rng):
    U = random_links(small, Group.SU2, rng, 0.5)
    a = random_form(small, Group.SU2, 1, rng)
    eps = 1e-5
    fd = (curvature(perturb(U, a, eps)) - curvature(perturb(U, a, -eps))) / (2 * eps)
    np.testing.assert_allclose(curvature_variation(a, U).values, fd.values, atol=1e-7)


def test_hessian_matches_gradient_derivative(small, rng, group):
    U = random_links(small, group, rng, 0.4)
    a = random_form(small, group, 1, rng)
    eps = 1e-4
    fd = (ym_gradient(perturb(U, a, eps)) - ym_gradient(perturb(U, a, -eps))) / (2 * eps)
    H = hessian_apply(a, U)
    np.testing.assert_allclose(H.values, fd.values, atol=1e-6 * max(1.0, np.abs(H.values).max()))


def test_jacobi_is_symmetric_at_a_critical_point(rng):
    lat = Lattice(2, 4)
    U0 = constant_flux(lat, Group.SU2)
    assert ym_gradient(U0).norm() < 1e-12
    a = random_form(lat, Group.SU2, 1, rng)
    b = random_form(lat, Group.SU2, 1, rng)
    assert jacobi_apply(a, U0).inner(b) == pytest.approx(a.inner(jacobi_apply(b, U0)), rel=1e-10, abs=1e-10)


def test_flat_u1_spectrum_on_a_4x4_torus():
    U0 = identity_links(Lattice(2, 4), Group.U1)
    rep = spectrum(U0, 8)
    np.testing.assert_allclose(rep.eigenvalues, [0, 0, 2, 2, 2, 2, 4, 4], atol=1e-10)
    assert rep.slice_dimension == 17
    assert rep.kernel_dimension == 2
    assert max(rep.residuals) < 1e-10
    assert rep.gram_deviation < 1e-10
    assert rep.lowest_positive == pytest.approx(2.0)


def test_flat_su2_spectrum_triples_the_abelian_one():
    rep = spectrum(identity_links(Lattice(2, 4), Group.SU2), 18)
    np.testing.assert_allclose(rep.eigenvalues, [0] * 6 + [2] * 12, atol=1e-10)
    assert rep.kernel_dimension == 6


def test_flux_background_has_a_negative_mode():
    rep = spectrum(constant_flux(Lattice(2, 4), Group.SU2), 2)
    assert rep.eigenvalues[0] < -1e-3
    assert rep.asymmetry < 1e-8
    phi = rep.eigenforms[0]
    assert phi.norm() == pytest.approx(1.0)
    assert d_A_star(phi, constant_flux(Lattice(2, 4), Group.SU2)).norm() < 1e-10


def test_slice_is_coclosed(rng):
    U0 = random_links(Lattice(2, 3), Group.SU2, rng, 0.3)
    sl = coulomb_slice(U0)
    a = sl.form(rng.standard_normal(sl.dimension))
    assert d_A_star(a, U0).norm() < 1e-10
    np.testing.assert_allclose(sl.project(a).values, a.values, atol=1e-12)


def test_too_many_eigenpairs_rejected():
    with pytest.raises(ValueError):
        spectrum(identity_links(Lattice(2, 2), Group.U1), 100)


def test_indicial_roots_real_branch():
    roots = indicial_roots([-2.0], 1.0)
    assert roots.roots[0] == (2 + 0j, -1 + 0j)
    assert roots.delta1 == pytest.approx(2.0)
    assert roots.delta2 == pytest.approx(1.0)
    assert roots.branches == ["real"]
    assert not roots.degenerate


def test_indicial_roots_other_branches():
    roots = indicial_roots([0.25, 1.0, 0.0], 1.0)
    assert roots.branches == ["critical", "oscillatory", "real"]
    assert roots.degenerate
    assert roots.delta1 == pytest.approx(0.5)
    assert roots.delta2 is None
    assert roots.roots[1][0].imag == pytest.approx(np.sqrt(3) / 2)


def test_indicial_roots_need_positive_gamma():
    with pytest.raises(ValueError):
        indicial_roots([1.0], 0.0)
