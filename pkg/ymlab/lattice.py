# ymlab/lattice.py
"""Discrete exterior calculus for gauge fields on a periodic hypercubic lattice.

Storage conventions (C order, last axis = group/algebra components):

    LinkField      links   (*extent, dim, group_components)
    GaugeField     values  (*extent, group_components)
    AlgebraForm    k=0     (*extent, algebra_components)
                   k=1     (*extent, dim, algebra_components)
                   k=2     (*extent, n_planes, algebra_components), planes mu<nu

A link U_mu(x) = exp(a A_mu(x)) transports from x+mu back to x. Gauge
transformations act by U'_mu(x) = g(x) U_mu(x) g(x+mu)^-1 and on algebra
forms by Ad_{g(base point)}.
"""
from __future__ import annotations
import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import svd

from . import algebra as alg
from .algebra import Group, GroupElement
from .errors import GroupMismatch, KernelComponentError, NonConvergence

logger = logging.getLogger(__name__)

SOLVE_TOL = 1e-10


# ---------- Geometry ----------
@dataclass(frozen=True)
class Lattice:
    dim: int
    extent: Tuple[int, ...]
    spacing: float = 1.0

    def __post_init__(self):
        ext = self.extent
        if isinstance(ext, (int, np.integer)):
            ext = (int(ext),) * int(self.dim)
        object.__setattr__(self, "extent", tuple(int(n) for n in ext))
        if self.dim not in (2, 3, 4):
            raise ValueError(f"lattice dimension must be 2, 3 or 4, got {self.dim}")
        if len(self.extent) != self.dim:
            raise ValueError(f"extent {self.extent} does not match dim={self.dim}")
        if min(self.extent) < 2:
            raise ValueError(f"every extent must be >= 2, got {self.extent}")
        if not self.spacing > 0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.extent

    @property
    def volume(self) -> int:
        return int(np.prod(self.extent))

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    @property
    def planes(self) -> List[Tuple[int, int]]:
        return list(combinations(range(self.dim), 2))

    @property
    def n_planes(self) -> int:
        return self.dim * (self.dim - 1) // 2

    def plane_index(self, mu: int, nu: int) -> Tuple[int, int]:
        """(index into the stored planes, orientation sign)."""
        if mu == nu:
            raise ValueError("a plaquette needs two distinct directions")
        sign = 1 if mu < nu else -1
        return self.planes.index((min(mu, nu), max(mu, nu))), sign

    def site_index(self, coords: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(int(c) % n for c, n in zip(coords, self.extent)), self.extent))

    def site_coords(self, index: int) -> Tuple[int, ...]:
        return tuple(int(c) for c in np.unravel_index(int(index), self.extent))

    def link_index(self, coords: Sequence[int], mu: int) -> int:
        return self.site_index(coords) * self.dim + mu

    def link_from_index(self, index: int) -> Tuple[Tuple[int, ...], int]:
        site, mu = divmod(int(index), self.dim)
        return self.site_coords(site), mu

    def plaquette_index(self, coords: Sequence[int], mu: int, nu: int) -> int:
        p, _ = self.plane_index(mu, nu)
        return self.site_index(coords) * self.n_planes + p

    def plaquette_from_index(self, index: int) -> Tuple[Tuple[int, ...], int, int]:
        site, p = divmod(int(index), self.n_planes)
        mu, nu = self.planes[p]
        return self.site_coords(site), mu, nu

    def coordinates(self) -> np.ndarray:
        """Integer site coordinates, shape (*extent, dim)."""
        return np.stack(np.meshgrid(*[np.arange(n) for n in self.extent], indexing="ij"), axis=-1)

    def form_shape(self, degree: int, group: Group) -> Tuple[int, ...]:
        c = group.algebra_components
        if degree == 0:
            return self.extent + (c,)
        if degree == 1:
            return self.extent + (self.dim, c)
        if degree == 2:
            return self.extent + (self.n_planes, c)
        raise ValueError(f"forms of degree {degree} are not stored")


def shift(arr: np.ndarray, mu: int, step: int = 1) -> np.ndarray:
    """Value at x + step*mu, periodically wrapped."""
    return np.roll(arr, -step, axis=mu)


# ---------- Fields ----------
@dataclass
class LinkField:
    lattice: Lattice
    group: Group
    links: np.ndarray

    def __post_init__(self):
        self.links = np.asarray(self.links, dtype=float)
        want = self.lattice.extent + (self.lattice.dim, self.group.group_components)
        if self.links.shape != want:
            raise ValueError(f"link array has shape {self.links.shape}, expected {want}")

    def link(self, mu: int) -> np.ndarray:
        return self.links[..., mu, :]

    def copy(self) -> "LinkField":
        return LinkField(self.lattice, self.group, self.links.copy())

    def unitarity_defect(self) -> float:
        return float(np.max(np.abs(np.linalg.norm(self.links, axis=-1) - 1.0)))


@dataclass
class GaugeField:
    lattice: Lattice
    group: Group
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        want = self.lattice.extent + (self.group.group_components,)
        if self.values.shape != want:
            raise ValueError(f"gauge array has shape {self.values.shape}, expected {want}")

    def __mul__(self, other: "GaugeField") -> "GaugeField":
        _check_pair(self, other)
        return GaugeField(self.lattice, self.group, alg.mul(self.group, self.values, other.values))

    def inverse(self) -> "GaugeField":
        return GaugeField(self.lattice, self.group, alg.inv(self.group, self.values))

    def distance_from_identity(self) -> float:
        """sup over sites of |g(x) - Id| in the component norm."""
        return float(np.max(np.linalg.norm(self.values - alg.identity(self.group), axis=-1)))


@dataclass
class AlgebraForm:
    lattice: Lattice
    group: Group
    degree: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        want = self.lattice.form_shape(self.degree, self.group)
        if self.values.shape != want:
            raise ValueError(f"{self.degree}-form array has shape {self.values.shape}, expected {want}")

    @classmethod
    def zeros(cls, lattice: Lattice, group: Group, degree: int) -> "AlgebraForm":
        return cls(lattice, group, degree, np.zeros(lattice.form_shape(degree, group)))

    def like(self, values) -> "AlgebraForm":
        return AlgebraForm(self.lattice, self.group, self.degree, values)

    def _check(self, other: "AlgebraForm"):
        _check_pair(self, other)
        if other.degree != self.degree:
            raise ValueError(f"cannot combine a {self.degree}-form with a {other.degree}-form")

    def __add__(self, other):
        self._check(other)
        return self.like(self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return self.like(self.values - other.values)

    def __neg__(self):
        return self.like(-self.values)

    def __mul__(self, s: float):
        return self.like(float(s) * self.values)

    __rmul__ = __mul__

    def __truediv__(self, s: float):
        return self.like(self.values / float(s))

    def copy(self) -> "AlgebraForm":
        return self.like(self.values.copy())

    def inner(self, other: "AlgebraForm") -> float:
        self._check(other)
        return self.lattice.cell_volume * self.group.metric * float(np.sum(self.values * other.values))

    def norm(self) -> float:
        return float(np.sqrt(max(self.inner(self), 0.0)))

    def sup_norm(self) -> float:
        if self.values.size == 0:
            return 0.0
        return float(np.sqrt(self.group.metric * np.max(np.sum(self.values ** 2, axis=-1))))

    def component(self, mu: int, nu: Optional[int] = None) -> np.ndarray:
        if self.degree == 1:
            return self.values[..., mu, :]
        if self.degree == 2:
            p, sign = self.lattice.plane_index(mu, nu)
            return sign * self.values[..., p, :]
        raise ValueError("0-forms have no components")

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)


FieldLike = Union[LinkField, AlgebraForm, GaugeField]


def _check_pair(a, b):
    if a.lattice != b.lattice:
        raise ValueError(f"fields live on different lattices: {a.lattice} vs {b.lattice}")
    if a.group != b.group:
        raise GroupMismatch(f"fields carry different groups: {a.group.name} vs {b.group.name}")


# ---------- Curvature ----------
def _plaquette_array(U: LinkField, mu: int, nu: int) -> np.ndarray:
    g = U.group
    Umu, Unu = U.link(mu), U.link(nu)
    left = alg.mul(g, Umu, shift(Unu, mu))
    right = alg.mul(g, Unu, shift(Umu, nu))
    return alg.mul(g, left, alg.inv(g, right))


def plaquettes(U: LinkField) -> np.ndarray:
    """All plaquette holonomies, shape (*extent, n_planes, group_components)."""
    return np.stack([_plaquette_array(U, mu, nu) for mu, nu in U.lattice.planes], axis=-2)


def plaquette(U: LinkField, site: Sequence[int], mu: int, nu: int) -> GroupElement:
    """U_mu(x) U_nu(x+mu) U_mu(x+nu)^-1 U_nu(x)^-1 at one site."""
    if not mu < nu:
        raise ValueError(f"plaquette needs mu < nu, got ({mu}, {nu})")
    lat, g = U.lattice, U.group
    x = np.array(site, dtype=int) % lat.extent
    xm, xn = x.copy(), x.copy()
    xm[mu] = (xm[mu] + 1) % lat.extent[mu]
    xn[nu] = (xn[nu] + 1) % lat.extent[nu]
    at = lambda y, d: U.links[tuple(y) + (d,)]
    left = alg.mul(g, at(x, mu), at(xm, nu))
    right = alg.mul(g, at(x, nu), at(xn, mu))
    return GroupElement(g, alg.mul(g, left, alg.inv(g, right)))


def curvature(U: LinkField) -> AlgebraForm:
    """F_{mu nu}(x) = log(plaquette) / a^2."""
    F = alg.log(U.group, plaquettes(U)) / U.lattice.spacing ** 2
    return AlgebraForm(U.lattice, U.group, 2, F)


def cube_flux(U: LinkField) -> np.ndarray:
    """Signed sum of abelian curvature over the faces of each 3-cell.

    For U1 this is an integer multiple of 2 pi / a^2. Shape (*extent, n_cubes).
    """
    lat = U.lattice
    if lat.dim < 3:
        return np.zeros(lat.extent + (0,))
    F = curvature(U)
    out = []
    for mu, nu, la in combinations(range(lat.dim), 3):
        f_nl, f_ml, f_mn = F.component(nu, la)[..., 0], F.component(mu, la)[..., 0], F.component(mu, nu)[..., 0]
        out.append(shift(f_nl, mu) - f_nl - shift(f_ml, nu) + f_ml + shift(f_mn, la) - f_mn)
    return np.stack(out, axis=-1)


# ---------- Covariant differentials ----------
def d_A(form: AlgebraForm, U: LinkField) -> AlgebraForm:
    _check_pair(form, U)
    lat, g, h = U.lattice, U.group, U.lattice.spacing
    if form.degree == 0:
        f = form.values
        out = np.stack([alg.adjoint(g, U.link(mu), shift(f, mu)) - f for mu in range(lat.dim)], axis=-2)
        return AlgebraForm(lat, g, 1, out / h)
    if form.degree == 1:
        a = form.values
        out = []
        for mu, nu in lat.planes:
            a_mu, a_nu = a[..., mu, :], a[..., nu, :]
            e = a_mu + alg.adjoint(g, U.link(mu), shift(a_nu, mu))
            f = alg.adjoint(g, U.link(nu), shift(a_mu, nu)) + a_nu
            out.append(e - f)
        return AlgebraForm(lat, g, 2, np.stack(out, axis=-2) / h)
    raise ValueError(f"d_A is defined on 0- and 1-forms, got degree {form.degree}")


def d_A_star(form: AlgebraForm, U: LinkField) -> AlgebraForm:
    """Exact adjoint of d_A for the lattice L2 product sum a^d <.,.>."""
    _check_pair(form, U)
    lat, g, h = U.lattice, U.group, U.lattice.spacing
    if form.degree == 1:
        a = form.values
        out = np.zeros(lat.form_shape(0, g))
        for mu in range(lat.dim):
            moved = alg.adjoint(g, alg.inv(g, U.link(mu)), a[..., mu, :])
            out += shift(moved, mu, -1) - a[..., mu, :]
        return AlgebraForm(lat, g, 0, out / h)
    if form.degree == 2:
        B = form.values
        out = np.zeros(lat.form_shape(1, g))
        for p, (mu, nu) in enumerate(lat.planes):
            b = B[..., p, :]
            out[..., mu, :] += b
            out[..., nu, :] -= b
            out[..., nu, :] += shift(alg.adjoint(g, alg.inv(g, U.link(mu)), b), mu, -1)
            out[..., mu, :] -= shift(alg.adjoint(g, alg.inv(g, U.link(nu)), b), nu, -1)
        return AlgebraForm(lat, g, 1, out / h)
    raise ValueError(f"d_A_star is defined on 1- and 2-forms, got degree {form.degree}")


def laplacian(form: AlgebraForm, U: LinkField) -> AlgebraForm:
    if form.degree != 0:
        raise ValueError("the covariant Laplacian here acts on 0-forms")
    return d_A_star(d_A(form, U), U)


# ---------- Kernel of d_A on 0-forms ----------
def transport_from_origin(U: LinkField, v: np.ndarray) -> np.ndarray:
    """Spread v from the origin along a spanning tree, solving f(x+mu) = Ad_{U_mu(x)^-1} f(x)."""
    lat, g = U.lattice, U.group
    f = np.zeros(lat.form_shape(0, g))
    f[(0,) * lat.dim] = v
    for mu in range(lat.dim):
        head = (slice(None),) * mu
        tail = (0,) * (lat.dim - mu - 1)
        for k in range(1, lat.extent[mu]):
            src = head + (k - 1,) + tail
            link = U.links[src + (mu,)]
            f[head + (k,) + tail] = alg.adjoint(g, alg.inv(g, link), f[src])
    return f


def parallel_sections(U: LinkField, tol: float = 1e-8) -> List[AlgebraForm]:
    """L2-orthonormal basis of Ker(d_A) on 0-forms (covariantly constant sections)."""
    lat, g = U.lattice, U.group
    c = g.algebra_components
    candidates = [transport_from_origin(U, np.eye(c)[i]) for i in range(c)]
    closure = np.stack([d_A(AlgebraForm(lat, g, 0, f), U).flat() for f in candidates], axis=1)
    # absolute threshold: a transport that fails to close misses by O(holonomy)/a
    _, s, vh = svd(closure, full_matrices=True)
    s = np.concatenate([s, np.zeros(c - s.size)])
    coeffs = vh[s < tol / lat.spacing].T
    scale = np.sqrt(lat.cell_volume * g.metric * lat.volume)
    basis = []
    for col in coeffs.T:
        f = sum(w * cand for w, cand in zip(col, candidates))
        basis.append(AlgebraForm(lat, g, 0, f / scale))
    return basis


def project_out(form: AlgebraForm, basis: Sequence[AlgebraForm]) -> AlgebraForm:
    out = form.values.copy()
    for k in basis:
        out -= form.inner(k) * k.values
    return form.like(out)


def kernel_component(form: AlgebraForm, basis: Sequence[AlgebraForm]) -> float:
    return float(np.sqrt(sum(form.inner(k) ** 2 for k in basis)))


# ---------- Linear solves ----------
def conjugate_gradient(apply, b: np.ndarray, *, tol: float = 1e-12, maxiter: Optional[int] = None):
    """
    Conjugate gradient for a symmetric positive (semi)definite operator.

    Parameters
    ----------
    apply : callable
        Flat vector -> flat vector, the operator.
    b : numpy.ndarray
        Right-hand side.
    tol : float
        Stop when |r| <= tol |b|.
    maxiter : int
        Iteration cap, default 10 * len(b).

    Returns
    -------
    x : numpy.ndarray
        Approximate solution, starting from x0 = 0.
    info : dict
        {'niter', 'success', 'res_norm'}.
    """
    n = b.size
    maxiter = 10 * n if maxiter is None else maxiter
    x = np.zeros_like(b)
    r = b.copy()
    p = r.copy()
    am = float(r @ r)
    bnorm = np.sqrt(am)
    if bnorm == 0.0:
        return x, {'niter': 0, 'success': True, 'res_norm': 0.0}
    tol_sqr = (tol * bnorm) ** 2
    k = 0
    for k in range(1, maxiter + 1):
        v = apply(p)
        pv = float(p @ v)
        if pv <= 0.0:
            break
        l = am / pv
        x += l * p
        r -= l * v
        am1 = float(r @ r)
        if am1 < tol_sqr:
            am = am1
            break
        p = r + (am1 / am) * p
        am = am1
        if k % 100 == 0:
            logger.debug("cg iteration %d: residual %.3e", k, np.sqrt(am) / bnorm)
    res = float(np.sqrt(am))
    return x, {'niter': k, 'success': res < tol * bnorm, 'res_norm': res}


def solve_laplacian(rhs: AlgebraForm, U: LinkField, subspace: Optional[Sequence[AlgebraForm]] = None,
                    *, tol: float = SOLVE_TOL, maxiter: Optional[int] = None) -> AlgebraForm:
    """Solve Delta_A beta = rhs for beta orthogonal to `subspace`.

    `subspace` defaults to Ker(d_A). When it is the kernel of another
    connection A0 the solve is the compressed problem P Delta_A P beta = P rhs.
    """
    _check_pair(rhs, U)
    if rhs.degree != 0:
        raise ValueError("solve_laplacian expects a 0-form right-hand side")
    basis = parallel_sections(U) if subspace is None else list(subspace)
    rhs_norm = rhs.norm()
    comp = kernel_component(rhs, basis)
    if comp > tol * max(1.0, rhs_norm):
        raise KernelComponentError(comp, tol * max(1.0, rhs_norm))
    b = project_out(rhs, basis)
    if b.norm() == 0.0:
        return AlgebraForm.zeros(rhs.lattice, rhs.group, 0)

    shape = b.values.shape

    def apply(vec):
        x = project_out(AlgebraForm(rhs.lattice, rhs.group, 0, vec.reshape(shape)), basis)
        return project_out(laplacian(x, U), basis).flat()

    x, info = conjugate_gradient(apply, b.flat(), tol=0.05 * tol, maxiter=maxiter)
    beta = project_out(AlgebraForm(rhs.lattice, rhs.group, 0, x.reshape(shape)), basis)
    residual = (project_out(laplacian(beta, U), basis) - b).norm() / b.norm()
    logger.debug("solve_laplacian: %d iterations, relative residual %.3e", info['niter'], residual)
    if residual >= tol:
        raise NonConvergence(info['niter'], residual, "solve_laplacian")
    return beta


# ---------- Gauge action and charts ----------
def gauge_transform(obj: FieldLike, g: GaugeField):
    _check_pair(obj, g)
    grp, lat = g.group, g.lattice
    if isinstance(obj, LinkField):
        out = np.stack([alg.mul(grp, alg.mul(grp, g.values, obj.link(mu)), alg.inv(grp, shift(g.values, mu)))
                        for mu in range(lat.dim)], axis=-2)
        return LinkField(lat, grp, out)
    if isinstance(obj, AlgebraForm):
        gv = g.values if obj.degree == 0 else g.values[..., None, :]
        return obj.like(alg.adjoint(grp, gv, obj.values))
    if isinstance(obj, GaugeField):
        return g * obj
    raise TypeError(f"cannot gauge transform {type(obj).__name__}")


def perturb(U: LinkField, a: AlgebraForm, t: float = 1.0) -> LinkField:
    """U'_mu(x) = exp(t a a_mu(x)) U_mu(x) (left chart)."""
    _check_pair(U, a)
    if a.degree != 1:
        raise ValueError("perturb takes a 1-form")
    step = alg.exp(U.group, (t * U.lattice.spacing) * a.values)
    return LinkField(U.lattice, U.group, alg.mul(U.group, step, U.links))


def extract(U: LinkField, U0: LinkField) -> AlgebraForm:
    """Inverse of perturb: log(U U0^-1) / a."""
    _check_pair(U, U0)
    rel = alg.mul(U.group, U.links, alg.inv(U.group, U0.links))
    return AlgebraForm(U.lattice, U.group, 1, alg.log(U.group, rel) / U.lattice.spacing)


def link_distance(U: LinkField, U0: LinkField) -> float:
    return extract(U, U0).norm()


# ---------- Builders ----------
def identity_links(lattice: Lattice, group: Group) -> LinkField:
    return LinkField(lattice, group, alg.identity(group, lattice.extent + (lattice.dim,)))


def identity_gauge(lattice: Lattice, group: Group) -> GaugeField:
    return GaugeField(lattice, group, alg.identity(group, lattice.extent))


def random_gauge(lattice: Lattice, group: Group, rng, scale: float = 1.0) -> GaugeField:
    return GaugeField(lattice, group, alg.random_group(group, rng, lattice.extent, scale))


def random_form(lattice: Lattice, group: Group, degree: int, rng, scale: float = 1.0) -> AlgebraForm:
    shape = lattice.form_shape(degree, group)
    return AlgebraForm(lattice, group, degree, scale * np.asarray(rng.standard_normal(shape), dtype=float).reshape(shape))


def random_links(lattice: Lattice, group: Group, rng, scale: float = 1.0) -> LinkField:
    return perturb(identity_links(lattice, group), random_form(lattice, group, 1, rng, scale / lattice.spacing))


def fourier_mode(lattice: Lattice, group: Group, wave: Sequence[int], degree: int = 0,
                 direction: int = 0, component: int = 0, phase: float = 0.0) -> AlgebraForm:
    """cos(2 pi k.x / N + phase) in one component of one direction."""
    x = lattice.coordinates()
    arg = sum(2.0 * np.pi * k * x[..., m] / n for m, (k, n) in enumerate(zip(wave, lattice.extent))) + phase
    out = AlgebraForm.zeros(lattice, group, degree)
    if degree == 0:
        out.values[..., component] = np.cos(arg)
    else:
        out.values[..., direction, component] = np.cos(arg)
    return out


def laplacian_eigenvalue(lattice: Lattice, wave: Sequence[int]) -> float:
    """(4/a^2) sum_mu sin^2(pi k_mu / N_mu)."""
    return float(4.0 / lattice.spacing ** 2 * sum(np.sin(np.pi * k / n) ** 2 for k, n in zip(wave, lattice.extent)))


def constant_flux(lattice: Lattice, group: Group, quanta: int = 1, plane: Tuple[int, int] = (0, 1)) -> LinkField:
    """Constant-curvature torus configuration carrying `quanta` flux units in `plane`.

    Every plaquette in the plane has angle B = 2 pi m / (N_mu N_nu); SU2 uses
    the abelian subgroup generated by e3.
    """
    mu, nu = plane
    if not mu < nu < lattice.dim:
        raise ValueError(f"bad flux plane {plane}")
    n_mu, n_nu = lattice.extent[mu], lattice.extent[nu]
    B = 2.0 * np.pi * quanta / (n_mu * n_nu)
    x = lattice.coordinates()
    theta = np.zeros(lattice.extent + (lattice.dim,))
    theta[..., nu] = B * x[..., mu]
    theta[..., mu] = np.where(x[..., mu] == n_mu - 1, -B * n_mu * x[..., nu], 0.0)
    if group is Group.U1:
        v = theta[..., None]
    else:
        v = np.zeros(theta.shape + (3,))
        v[..., 2] = theta
    return LinkField(lattice, group, alg.exp(group, v))
