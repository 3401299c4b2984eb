import numpy as np
import pytest

from ymlab import algebra as alg
from ymlab.algebra import Group
from ymlab.errors import NewtonDivergence, PartialResult
from ymlab.gauge import (PathConnection, coulomb_project, coulomb_residual, decompose_kernel, gauge_velocity,
                         solve_beta, stabilizer_through, standard_form, temporal_gauge_ode, transform_beta)
from ymlab.lattice import (AlgebraForm, GaugeField, Lattice, constant_flux, d_A, d_A_star, extract, fourier_mode,
                           gauge_transform, identity_links, kernel_component, laplacian, parallel_sections,
                           perturb, random_form, random_gauge, random_links)


def _coclosed(lat, group, rng, scale):
    """Small 1-form in Ker(d*) around the flat connection."""
    U0 = identity_links(lat, group)
    a = d_A_star(random_form(lat, group, 2, rng), U0)
    return a * (scale / a.sup_norm())


def test_pure_gauge_projects_to_the_reference(small, rng, group):
    U0 = identity_links(small, group)
    U = gauge_transform(U0, random_gauge(small, group, rng, 0.02))
    proj = coulomb_project(U, U0)
    assert proj.residual < 1e-10
    assert extract(proj.links, U0).norm() < 1e-8
    np.testing.assert_allclose(proj.gauge.values[0, 0, 0], alg.identity(group), atol=1e-12)


def test_projection_radius_is_inclusive(small, rng):
    U0 = identity_links(small, Group.SU2)
    U = gauge_transform(U0, random_gauge(small, Group.SU2, rng, 0.02))
    dist = extract(U, U0).sup_norm()
    assert coulomb_project(U, U0, radius=dist).residual < 1e-10
    with pytest.raises(NewtonDivergence):
        coulomb_project(U, U0, radius=dist * (1 - 1e-9))


def test_default_radius_scales_with_spacing(rng):
    lat = Lattice(3, (3, 3, 3), 0.5)
    U0 = identity_links(lat, Group.SU2)
    U = gauge_transform(U0, random_gauge(lat, Group.SU2, rng, 0.02))
    assert extract(U, U0).sup_norm() < 0.6
    assert coulomb_project(U, U0).residual < 1e-10


def test_projection_lands_in_the_slice(small, rng):
    U0 = identity_links(small, Group.SU2)
    a = _coclosed(small, Group.SU2, rng, 0.05)
    U = gauge_transform(perturb(U0, a), random_gauge(small, Group.SU2, rng, 0.02))
    proj = coulomb_project(U, U0)
    assert coulomb_residual(proj.links, U0) < 1e-10
    assert proj.iterations >= 1


def test_projection_refuses_distant_fields(small, rng):
    U0 = identity_links(small, Group.SU2)
    with pytest.raises(NewtonDivergence):
        coulomb_project(random_links(small, Group.SU2, rng, 2.0), U0)


def test_stabilizer_of_the_flux_background():
    lat = Lattice(2, 4)
    U0 = constant_flux(lat, Group.SU2)
    along = stabilizer_through(U0, alg.exp(Group.SU2, np.array([0.0, 0.0, 0.3])))
    assert along is not None
    np.testing.assert_allclose(gauge_transform(U0, along).links, U0.links, atol=1e-12)
    assert stabilizer_through(U0, alg.exp(Group.SU2, np.array([0.3, 0.0, 0.0]))) is None


def test_kernel_split():
    lat = Lattice(3, (4, 4, 3))
    U0 = identity_links(lat, Group.SU2)
    const = AlgebraForm(lat, Group.SU2, 0, np.broadcast_to([0.5, -1.0, 2.0], lat.form_shape(0, Group.SU2)))
    wave = fourier_mode(lat, Group.SU2, (1, 1, 0), component=1)
    ker, perp = decompose_kernel(const + wave, U0)
    np.testing.assert_allclose(ker.values, const.values, atol=1e-9)
    np.testing.assert_allclose(perp.values, wave.values, atol=1e-9)


def test_beta_vanishes_for_abelian_groups(small, rng):
    U0 = identity_links(small, Group.U1)
    a = random_form(small, Group.U1, 1, rng, 0.1)
    adot = random_form(small, Group.U1, 1, rng)
    assert solve_beta(a, adot, U0).norm() == 0.0


def test_beta_solves_the_constraint(small, rng):
    U0 = identity_links(small, Group.SU2)
    a = random_form(small, Group.SU2, 1, rng, 0.1)
    adot = random_form(small, Group.SU2, 1, rng)
    beta = solve_beta(a, adot, U0)
    A = perturb(U0, a)
    kernel = parallel_sections(U0)
    assert kernel_component(beta, kernel) < 1e-10
    lhs = laplacian(beta, A)
    rhs = d_A_star(adot, A) - d_A_star(adot, U0)
    # both sides compared after removing the constants
    diff = lhs - rhs
    for k in kernel:
        diff = diff - k * diff.inner(k)
    assert diff.norm() < 1e-8 * max(1.0, rhs.norm())


def test_temporal_gauge_of_constant_beta_is_an_exponential(small, rng):
    beta = random_form(small, Group.SU2, 0, rng, 0.5)
    times = np.linspace(0.0, 1.0, 101)
    gauges = temporal_gauge_ode([beta] * len(times), times)
    np.testing.assert_allclose(gauges[-1].values, alg.exp(Group.SU2, beta.values), atol=1e-9)
    np.testing.assert_allclose(gauges[0].values, alg.identity(Group.SU2, small.extent))


def test_temporal_gauge_accepts_a_callable(small):
    e = np.zeros(small.form_shape(0, Group.U1))
    beta = lambda t: AlgebraForm(small, Group.U1, 0, e + 2.0 * t)
    gauges = temporal_gauge_ode(beta, np.linspace(0.0, 1.0, 101), small, Group.U1)
    np.testing.assert_allclose(alg.log(Group.U1, gauges[-1].values), 1.0, atol=1e-7)
    with pytest.raises(ValueError):
        temporal_gauge_ode(beta, [0.0, 1.0])


def test_gauge_velocity_of_a_one_parameter_group(small, rng):
    X = random_form(small, Group.SU2, 0, rng, 0.3)
    dt = 0.1
    gauges = [GaugeField(small, Group.SU2, alg.exp(Group.SU2, k * dt * X.values)) for k in range(7)]
    for v in gauge_velocity(gauges, dt):
        np.testing.assert_allclose(v.values, X.values, atol=1e-10)


def test_transform_beta_keeps_pure_gauge_paths_trivial(small, rng):
    X = random_form(small, Group.SU2, 0, rng, 0.3)
    g = GaugeField(small, Group.SU2, alg.exp(Group.SU2, 0.4 * X.values))
    out = transform_beta(X, g, X)
    np.testing.assert_allclose(out.values, 0.0, atol=1e-12)


def _moving_gauge_path(lat, group, rng, frames=6, dt=0.1):
    U0 = identity_links(lat, group)
    a = _coclosed(lat, group, rng, 0.05)
    X = random_form(lat, group, 0, rng, 0.05)
    times = dt * np.arange(frames)
    links = [gauge_transform(perturb(U0, a * (1.0 + t)), GaugeField(lat, group, alg.exp(group, t * X.values)))
             for t in times]
    beta = [AlgebraForm.zeros(lat, group, 0) for _ in times]
    return PathConnection(lat, group, times, links, beta), U0


def test_standard_form_certificate_holds(small, rng, group):
    path, U0 = _moving_gauge_path(small, group, rng)
    out, gauges, cert = standard_form(path, U0)
    assert cert.holds
    assert cert.frames == len(path)
    assert cert.coulomb_residual < 1e-8
    assert cert.perp_residual < 1e-8
    for U, g, V in zip(path.links, gauges, out.links):
        np.testing.assert_allclose(gauge_transform(U, g).links, V.links, atol=1e-10)


def test_standard_form_reports_the_good_prefix(small, rng):
    path, U0 = _moving_gauge_path(small, Group.SU2, rng, frames=5)
    path.links[3] = random_links(small, Group.SU2, rng, 2.0)
    with pytest.raises(PartialResult) as info:
        standard_form(path, U0)
    err = info.value
    assert err.failed_index == 3
    assert len(err.path) == 3
    assert isinstance(err.cause, NewtonDivergence)
    assert err.certificate.frames == 3


def test_path_checks_its_grid(small):
    U = identity_links(small, Group.U1)
    with pytest.raises(ValueError):
        PathConnection.static(U, [0.0, 0.1, 0.3])
    path = PathConnection.static(U, [0.0, 0.5, 1.0])
    assert path.dt == pytest.approx(0.5)
    assert len(path.prefix(2)) == 2
    assert d_A(path.beta[0], U).norm() == 0.0
