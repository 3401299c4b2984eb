# ymlab/cone.py
"""Continuum diagnostics for connections on R^n minus the origin.

Fields here are closed-form (or sampled) connections in Cartesian
components, shape (..., n, c) for A and (..., n, n, c) for F, with the
algebra chart of `ymlab.algebra` on the last axis. Nothing in this module
touches the lattice.
"""
from __future__ import annotations
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, ClassVar, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import gamma as gamma_fn, roots_gegenbauer

from . import algebra as alg
from .algebra import Group
from .errors import InsufficientSmoothness, QuadratureUnderResolved

logger = logging.getLogger(__name__)

Weight = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]

QUADRATURE_RTOL = 0.01
SMOOTHNESS_RTOL = 1e-3


def sphere_area(n: int) -> float:
    """|S^{n-1}|."""
    return float(2.0 * np.pi ** (n / 2.0) / gamma_fn(n / 2.0))


# ---------- Closed-form fields ----------
@dataclass
class BallField:
    """A_j(x) = w(x) sum_k x_k C[k, j]: a linear profile times a scalar weight."""
    name: str
    n: int
    group: Group
    coeffs: np.ndarray
    weight: Weight
    cone: bool = False
    stationary: bool = False

    def _profile(self, x: np.ndarray) -> np.ndarray:
        return np.einsum("...k,kjc->...jc", x, self.coeffs)

    def connection(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        w, _ = self.weight(x)
        return w[..., None, None] * self._profile(x)

    def jacobian(self, x) -> np.ndarray:
        """J[..., i, j, :] = d_i A_j."""
        x = np.asarray(x, dtype=float)
        w, dw = self.weight(x)
        return (w[..., None, None, None] * self.coeffs
                + dw[..., :, None, None] * self._profile(x)[..., None, :, :])

    def curvature(self, x) -> np.ndarray:
        A = self.connection(x)
        J = self.jacobian(x)
        return J - np.swapaxes(J, -3, -2) + alg.bracket(self.group, A[..., :, None, :], A[..., None, :, :])


def _unit_weight(x):
    return np.ones(x.shape[:-1]), np.zeros(x.shape)


def _inverse_square_weight(x):
    r2 = np.sum(x * x, axis=-1)
    return 1.0 / r2, -2.0 * x / (r2 ** 2)[..., None]


def _quaternion_coeffs(n: int, offset: int) -> np.ndarray:
    """Linear profile of Im(conj(y) dy) for y = x[offset:offset+4] read as a quaternion."""
    C = np.zeros((n, n, 3))
    e = np.eye(3)
    for m in range(3):
        C[offset + 1 + m, offset] = -e[m]
    for k in range(3):
        C[offset, offset + 1 + k] = e[k]
        for m in range(3):
            C[offset + 1 + m, offset + 1 + k] = np.cross(e[k], e[m])
    return C


def flat(n: int = 5, group: Group = Group.SU2) -> BallField:
    group = Group.parse(group)
    return BallField("flat", n, group, np.zeros((n, n, group.algebra_components)), _unit_weight,
                     cone=True, stationary=True)


def abelian_cone(n: int = 5, strength: float = 1.0) -> BallField:
    """U1 cone c (x1 dx2 - x2 dx1) / r^2; radially homogeneous but not Yang-Mills."""
    C = np.zeros((n, n, 1))
    C[1, 0, 0] = -strength
    C[0, 1, 0] = strength
    return BallField("abelian_cone", n, Group.U1, C, _inverse_square_weight, cone=True)


def maxwell(n: int = 5, strength: float = 1.0) -> BallField:
    """Constant U1 field strength c dx1 ^ dx2."""
    C = np.zeros((n, n, 1))
    C[0, 1, 0] = strength
    return BallField("maxwell", n, Group.U1, C, _unit_weight, stationary=True)


def yang_monopole() -> BallField:
    """Pull-back of the basic instanton on S^4 to R^5 minus 0; singular gauge along the -x1 axis."""
    def weight(x):
        r = np.linalg.norm(x, axis=-1)
        s = r + x[..., 0]
        rs = r * s
        grad = x * (s / r + 1.0)[..., None]
        grad[..., 0] += r
        return 0.5 / rs, -0.5 * grad / (rs ** 2)[..., None]

    return BallField("yang_monopole", 5, Group.SU2, _quaternion_coeffs(5, 1), weight, cone=True, stationary=True)


def instanton_cylinder(n: int = 5) -> BallField:
    """Basic instanton in x1..x4, constant along the remaining directions."""
    def weight(x):
        y = np.zeros_like(x)
        y[..., :4] = x[..., :4]
        q = 1.0 + np.sum(y * y, axis=-1)
        return 1.0 / q, -2.0 * y / (q ** 2)[..., None]

    return BallField("instanton_cylinder", n, Group.SU2, _quaternion_coeffs(n, 0), weight, stationary=True)


BUILTIN_FIELDS: Dict[str, Callable[..., BallField]] = {
    "flat": flat,
    "abelian_cone": abelian_cone,
    "maxwell": maxwell,
    "yang_monopole": lambda n=5: yang_monopole(),
    "instanton_cylinder": instanton_cylinder,
}


def builtin_field(name: str, n: int = 5) -> BallField:
    if name not in BUILTIN_FIELDS:
        raise ValueError(f"unknown field {name!r}; choose from {sorted(BUILTIN_FIELDS)}")
    if name == "yang_monopole" and n != 5:
        raise ValueError("yang_monopole lives on R^5")
    if n < 5 and name not in ("flat",):
        raise ValueError(f"ball dimension must be at least 5, got {n}")
    return BUILTIN_FIELDS[name](n)


# ---------- Hyperspherical quadrature ----------
def angular_quadrature(n: int, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Product rule on S^{n-1}: trapezoid in the azimuth, Gauss-Gegenbauer in each polar angle."""
    if n < 2 or order < 1:
        raise ValueError(f"need n >= 2 and order >= 1, got n={n}, order={order}")
    m = 2 * order
    phi = 2.0 * np.pi * np.arange(m) / m
    nodes = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    weights = np.full(m, 2.0 * np.pi / m)
    for dim in range(2, n):
        a = 0.5 * (dim - 1)
        t, wt = leggauss(order) if dim == 2 else roots_gegenbauer(order, a)
        s = np.sqrt(1.0 - t * t)
        head = np.repeat(t, len(nodes))[:, None]
        tail = (s[:, None, None] * nodes[None]).reshape(-1, dim)
        nodes = np.concatenate([head, tail], axis=-1)
        weights = (wt[:, None] * weights[None]).ravel()
    return nodes, weights


def _pair_indices(n: int):
    return np.triu_indices(n, k=1)


def curvature_density(F: np.ndarray, group: Group) -> np.ndarray:
    """|F|^2 = sum_{i<j} <F_ij, F_ij>."""
    i, j = _pair_indices(F.shape[-2])
    return group.metric * np.sum(F[..., i, j, :] ** 2, axis=(-2, -1))


@dataclass
class SampledBallField:
    name: str
    n: int
    group: Group
    radii: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    curvature: np.ndarray = field(repr=False)

    def __post_init__(self):
        total = float(np.sum(self.weights))
        if abs(total - sphere_area(self.n)) > 1e-6:
            raise ValueError(f"angular weights sum to {total}, expected {sphere_area(self.n)}")

    def shell_integrals(self) -> np.ndarray:
        """Phi(r_k) = integral over the unit sphere of |F(r_k w)|^2."""
        dens = self.group.metric * np.sum(self.curvature ** 2, axis=(-2, -1))
        return dens @ self.weights


def sample_field(f: BallField, rho_min: float, rho_max: float, radial: int = 33,
                 angular: int = 6) -> SampledBallField:
    """Curvature of `f` on a log-spaced radial grid times a product angular grid (radial count rounded up to odd)."""
    if not 0 < rho_min < rho_max:
        raise ValueError(f"need 0 < rho_min < rho_max, got {rho_min}, {rho_max}")
    radial = max(3, radial + (radial + 1) % 2)
    radii = np.geomspace(rho_min, rho_max, radial)
    nodes, weights = angular_quadrature(f.n, angular)
    i, j = _pair_indices(f.n)
    samples = np.stack([f.curvature(r * nodes)[..., i, j, :] for r in radii])
    logger.debug("sampled %s on %d radii x %d angular nodes", f.name, radial, len(nodes))
    return SampledBallField(f.name, f.n, f.group, radii, nodes, weights, samples)


# ---------- Density ratio ----------
def _segment(g0: float, g1: float, h: float) -> float:
    """Integral over a log-grid step of length h of the interpolant that is a power law in r."""
    if g0 > 0 and g1 > 0:
        s = float(np.log(g1 / g0))
        if abs(s) > 1e-8:
            return h * (g1 - g0) / s
    return 0.5 * h * (g0 + g1)


def _ball_integral(radii: np.ndarray, phi: np.ndarray, rho: float, n: int) -> float:
    """int_{B_rho} |F|^2 from shell integrals on a log grid; the innermost ball uses a power-law fit."""
    u = np.log(radii)
    g = radii ** n * phi
    if phi[0] > 0 and phi[1] > 0:
        p = np.log(phi[1] / phi[0]) / (u[1] - u[0])
    else:
        p = 0.0
    if n + p <= 0:
        raise ValueError(f"|F|^2 ~ r^{p:.3f} is not integrable at the origin in dimension {n}")
    total = g[0] / (n + p)
    v = np.log(rho)
    k = min(int(np.searchsorted(u, v, side="right")) - 1, len(u) - 1)
    total += sum(_segment(g[i], g[i + 1], u[i + 1] - u[i]) for i in range(k))
    if k < len(u) - 1 and v > u[k]:
        frac = (v - u[k]) / (u[k + 1] - u[k])
        if g[k] > 0 and g[k + 1] > 0:
            g_rho = g[k] * (g[k + 1] / g[k]) ** frac
        else:
            g_rho = g[k] + frac * (g[k + 1] - g[k])
        total += _segment(g[k], g_rho, v - u[k])
    return float(total)


def density_ratio(f: SampledBallField, rho: float) -> float:
    """rho^{4-n} int_{B_rho} |F|^2 (flat background)."""
    if not f.radii[0] <= rho <= f.radii[-1] * (1 + 1e-12):
        raise ValueError(f"rho={rho} outside the sampled range [{f.radii[0]}, {f.radii[-1]}]")
    phi = f.shell_integrals()
    fine = _ball_integral(f.radii, phi, rho, f.n)
    coarse = _ball_integral(f.radii[::2], phi[::2], rho, f.n)
    if abs(fine - coarse) > QUADRATURE_RTOL * abs(fine):
        raise QuadratureUnderResolved(rho ** (4 - f.n) * coarse, rho ** (4 - f.n) * fine)
    return float(rho ** (4 - f.n) * fine)


@dataclass
class DensityProfile:
    kind: ClassVar[str] = "density"
    field: str
    n: int
    radii: List[float]
    ratios: List[float]
    spread: float
    min_increment: float
    cone_defect: float
    monotone: bool


def density_profile(f: BallField, radii: Sequence[float], *, rho_min: Optional[float] = None,
                    radial: int = 65, angular: int = 6, monotone_tol: float = 1e-3) -> DensityProfile:
    """Density ratios on `radii` plus the spread, the worst decrease and the sup of the radial contraction."""
    radii = sorted(float(r) for r in radii)
    lo = rho_min if rho_min is not None else radii[0] * 1e-3
    sampled = sample_field(f, lo, radii[-1], radial=radial, angular=angular)
    ratios = [density_ratio(sampled, r) for r in radii]
    scale = max(max(abs(x) for x in ratios), 1e-300)
    spread = (max(ratios) - min(ratios)) / scale if any(ratios) else 0.0
    incr = float(min(np.diff(ratios))) / scale if len(ratios) > 1 else 0.0
    outer = radii[-1] * sampled.nodes
    defect = float(np.max(np.linalg.norm(radial_contraction(f, outer), axis=(-2, -1))))
    logger.info("%s: density ratios %s (spread %.3e)", f.name, np.array2string(np.array(ratios), precision=6), spread)
    return DensityProfile(field=f.name, n=f.n, radii=radii, ratios=[float(x) for x in ratios], spread=float(spread),
                          min_increment=incr, cone_defect=defect, monotone=incr >= -monotone_tol)


# ---------- Radial structure ----------
def radial_contraction(f: BallField, x) -> np.ndarray:
    """(d/dr) _| F at x, shape (..., n, c); identically zero for cones."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1, keepdims=True)
    if np.any(r == 0):
        raise ValueError("radial contraction is undefined at the origin")
    u = x / r
    return np.einsum("...i,...ijc->...jc", u, f.curvature(x))


def rescale(f, lam: float):
    """A_lam(x) = lam A(lam x), so F_lam(x) = lam^2 F(lam x)."""
    if not 0 < lam <= 1:
        raise ValueError(f"scale must lie in (0, 1], got {lam}")
    if isinstance(f, SampledBallField):
        return replace(f, name=f"{f.name}@{lam:g}", radii=f.radii / lam, curvature=lam ** 2 * f.curvature)

    base = f.weight

    def weight(x):
        w, dw = base(lam * x)
        return lam ** 2 * w, lam ** 3 * dw

    return replace(f, name=f"{f.name}@{lam:g}", weight=weight)


# ---------- Finite differences ----------
def _spatial_derivative(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order central differences; result[..., i, ...] = d_i fn(x)."""
    n = x.shape[-1]
    out = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        out.append((-fn(x + 2 * e) + 8 * fn(x + e) - 8 * fn(x - e) + fn(x - 2 * e)) / (12 * h))
    return np.stack(out, axis=x.ndim - 1)


def _time_derivative(fn: Callable[[float], np.ndarray], t: float, h: float) -> np.ndarray:
    return (-fn(t + 2 * h) + 8 * fn(t + h) - 8 * fn(t - h) + fn(t - 2 * h)) / (12 * h)


# ---------- Cylinder picture ----------
@dataclass
class CylinderPath:
    """A(t) + beta(t) dt on S^{n-1} x R, A tangential in Cartesian components."""
    n: int
    group: Group
    connection: Callable[[float, np.ndarray], np.ndarray]
    beta: Callable[[float, np.ndarray], np.ndarray]

    @classmethod
    def from_ball(cls, f: BallField) -> "CylinderPath":
        def connection(t, w):
            r = np.exp(-t)
            A = f.connection(r * w)
            radial = np.einsum("...i,...ic->...c", w, A)
            return r * (A - w[..., :, None] * radial[..., None, :])

        def beta(t, w):
            r = np.exp(-t)
            return -r * np.einsum("...i,...ic->...c", w, f.connection(r * w))

        return cls(f.n, f.group, connection, beta)

    # Degree-homogeneous extensions into R^n; at |x| = 1 ambient operators agree with the sphere ones.
    def _extended(self, t: float) -> Callable[[np.ndarray], np.ndarray]:
        def ext(x):
            r = np.linalg.norm(x, axis=-1)
            return self.connection(t, x / r[..., None]) / r[..., None, None]
        return ext

    def _extended_beta(self, t: float) -> Callable[[np.ndarray], np.ndarray]:
        def ext(x):
            return self.beta(t, x / np.linalg.norm(x, axis=-1, keepdims=True))
        return ext

    def curvature(self, t: float, w: np.ndarray, h: float) -> np.ndarray:
        A = self._extended(t)
        J = _spatial_derivative(A, w, h)
        a = A(w)
        return J - np.swapaxes(J, -3, -2) + alg.bracket(self.group, a[..., :, None, :], a[..., None, :, :])

    def covariant_beta(self, t: float, w: np.ndarray, h: float) -> np.ndarray:
        """d_A beta on the sphere."""
        b = self._extended_beta(t)
        return _spatial_derivative(b, w, h) + alg.bracket(self.group, self.connection(t, w), b(w)[..., None, :])

    def eta(self, t: float, w: np.ndarray, h: float, ht: float) -> np.ndarray:
        """A' - d_A beta."""
        adot = _time_derivative(lambda s: self.connection(s, w), t, ht)
        return adot - self.covariant_beta(t, w, h)

    def codifferential(self, form: Callable[[np.ndarray], np.ndarray], t: float, w: np.ndarray,
                       h: float) -> np.ndarray:
        """d_A* of a 1-form (..., n, c) or 2-form (..., n, n, c) given on R^n near the sphere."""
        A = self._extended(t)
        a = A(w)
        D = _spatial_derivative(form, w, h)
        val = form(w)
        if val.ndim == a.ndim:
            return -(np.einsum("...iic->...c", D) + np.sum(alg.bracket(self.group, a, val), axis=-2))
        return -(np.einsum("...iijc->...jc", D) + np.sum(alg.bracket(self.group, a[..., :, None, :], val), axis=-3))


@dataclass
class CylinderSamples:
    n: int
    group: Group
    times: np.ndarray
    points: np.ndarray
    connection: np.ndarray
    beta: np.ndarray
    curvature_norm: np.ndarray
    norm_mismatch: float


def _form_norm(x: np.ndarray, group: Group, degree: int) -> np.ndarray:
    if degree == 2:
        return np.sqrt(curvature_density(x, group))
    return np.sqrt(group.metric * np.sum(x ** 2, axis=(-2, -1)))


def cylinder_transform(f: BallField, points, times, h: float = 1e-3) -> CylinderSamples:
    """Push `f` to the cylinder t = -log|x| and check |F~| against (|F_A|^2 + |eta|^2)^{1/2}.

    The cylinder norm is r^2 |F(x)| from the ball curvature; the mismatch is
    measured against F_A and eta recomputed from the pushed connection by
    finite differences.
    """
    w = np.asarray(points, dtype=float)
    w = w / np.linalg.norm(w, axis=-1, keepdims=True)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    path = CylinderPath.from_ball(f)
    conn, beta, norms = [], [], []
    mismatch = 0.0
    for t in times:
        r = np.exp(-t)
        conn.append(path.connection(t, w))
        beta.append(path.beta(t, w))
        cyl = r ** 2 * _form_norm(f.curvature(r * w), f.group, 2)
        norms.append(cyl)
        FA = _form_norm(path.curvature(t, w, h), f.group, 2)
        eta = _form_norm(path.eta(t, w, h, h), f.group, 1)
        recon = np.sqrt(FA ** 2 + eta ** 2)
        scale = np.maximum(cyl, 1e-300)
        mismatch = max(mismatch, float(np.max(np.where(cyl > 0, np.abs(recon - cyl) / scale, recon))))
    logger.info("cylinder transform of %s: norm identity mismatch %.3e", f.name, mismatch)
    return CylinderSamples(f.n, f.group, times, w, np.array(conn), np.array(beta), np.array(norms), mismatch)


def cylinder_inverse(samples: CylinderSamples) -> Tuple[np.ndarray, np.ndarray]:
    """Ball points x = e^{-t} w and A~(x) = (A - beta w) / |x|, shapes (T, M, n) and (T, M, n, c)."""
    r = np.exp(-samples.times)[:, None, None]
    w = samples.points[None]
    x = r * w
    A = (samples.connection - w[..., None] * samples.beta[:, :, None, :]) / r[..., None]
    return x, A


# ---------- Cylinder Yang-Mills system ----------
@dataclass
class SystemResidual:
    res1: float
    res2: float


def _system_residual(path: CylinderPath, w: np.ndarray, times: np.ndarray, h: float) -> Tuple[float, float]:
    n, g = path.n, path.group
    r1 = r2 = 0.0
    for t in times:
        def eta_ext(x, s=t):
            r = np.linalg.norm(x, axis=-1)
            return path.eta(s, x / r[..., None], h, h) / r[..., None, None]

        def curv_ext(x, s=t):
            return path.curvature(s, x, h)

        eta = path.eta(t, w, h, h)
        deta = _time_derivative(lambda s: path.eta(s, w, h, h), t, h)
        Dt_eta = deta + alg.bracket(g, path.beta(t, w)[..., None, :], eta)
        res1 = Dt_eta - (n - 4) * eta - path.codifferential(curv_ext, t, w, h)
        res2 = path.codifferential(eta_ext, t, w, h)
        r1 = max(r1, float(np.max(_form_norm(res1, g, 1))))
        r2 = max(r2, float(np.max(np.sqrt(g.metric * np.sum(res2 ** 2, axis=-1)))))
    return r1, r2


def ym_system_residual(path: CylinderPath, points, times, h: float = 1e-3) -> SystemResidual:
    """Sup norms of D_t eta - (n-4) eta - d_A* F_A and d_A* eta over the given sphere points and times.

    Both are evaluated at steps h and 2h; disagreement beyond the
    discretization error raises InsufficientSmoothness.
    """
    w = np.asarray(points, dtype=float)
    w = w / np.linalg.norm(w, axis=-1, keepdims=True)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    fine = _system_residual(path, w, times, h)
    coarse = _system_residual(path, w, times, 2 * h)
    for c, f in zip(coarse, fine):
        if abs(c - f) > SMOOTHNESS_RTOL * (1.0 + abs(f)):
            raise InsufficientSmoothness(c, f)
    logger.info("cylinder system residuals %.3e, %.3e", *fine)
    return SystemResidual(*fine)


@dataclass
class CylinderCheck:
    kind: ClassVar[str] = "cylinder"
    field: str
    n: int
    times: List[float]
    points: int
    norm_mismatch: float
    res1: float
    res2: float


def cylinder_check(f: BallField, points, times, h: float = 1e-3) -> CylinderCheck:
    """Norm identity and cylinder Yang-Mills residuals of `f` on the given sphere points and times."""
    samples = cylinder_transform(f, points, times, h)
    res = ym_system_residual(CylinderPath.from_ball(f), samples.points, samples.times, h)
    return CylinderCheck(field=f.name, n=f.n, times=[float(t) for t in samples.times], points=len(samples.points),
                         norm_mismatch=samples.norm_mismatch, res1=res.res1, res2=res.res2)
