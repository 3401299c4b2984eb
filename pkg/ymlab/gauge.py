# ymlab/gauge.py
"""Gauge constructions around a reference connection A0.

Coulomb projection onto the slice Ker(d_{A0}*), the beta constraint solve,
the Ker(d_{A0}) / perp split, the temporal gauge ODE dg/dt = g beta and the
two-step standard form of a path of connections A(t) + beta(t) dt.
"""
from __future__ import annotations
import logging
from dataclasses import dataclass, field
from typing import Callable, ClassVar, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.interpolate import CubicSpline

from . import algebra as alg
from .algebra import Group
from .errors import NewtonDivergence, PartialResult, YMLabError
from .lattice import (AlgebraForm, GaugeField, Lattice, LinkField, d_A, d_A_star, extract, gauge_transform,
                      identity_gauge, kernel_component, parallel_sections, perturb, project_out,
                      solve_laplacian, transport_from_origin)

logger = logging.getLogger(__name__)

NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 50
CERT_TOL = 1e-8


# ---------- Paths ----------
@dataclass
class PathConnection:
    """A(t) + beta(t) dt sampled on a uniform time grid."""
    lattice: Lattice
    group: Group
    times: np.ndarray
    links: List[LinkField]
    beta: List[AlgebraForm]

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if not (len(self.times) == len(self.links) == len(self.beta)):
            raise ValueError(f"path has {len(self.times)} times, {len(self.links)} link fields "
                             f"and {len(self.beta)} beta forms")
        if len(self.times) > 2:
            steps = np.diff(self.times)
            if np.any(steps <= 0) or np.max(np.abs(steps - steps[0])) > 1e-9 * max(1.0, abs(steps[0])):
                raise ValueError("path times must form a uniform increasing grid")
        for U, b in zip(self.links, self.beta):
            if U.lattice != self.lattice or b.lattice != self.lattice or U.group != self.group:
                raise ValueError("every frame of a path must live on the path's lattice and group")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    def prefix(self, k: int) -> "PathConnection":
        return PathConnection(self.lattice, self.group, self.times[:k], self.links[:k], self.beta[:k])

    @classmethod
    def static(cls, U: LinkField, times: Sequence[float]) -> "PathConnection":
        zero = AlgebraForm.zeros(U.lattice, U.group, 0)
        return cls(U.lattice, U.group, np.asarray(times, float), [U.copy() for _ in times], [zero.copy() for _ in times])


@dataclass
class StandardFormCertificate:
    kind: ClassVar[str] = "standard_form"
    coulomb_residual: float
    perp_residual: float
    gauge_norm: float
    gauge_constant: float
    input_distance: float
    holds: bool
    frames: int


# ---------- Coulomb projection ----------
class CoulombProjection(NamedTuple):
    gauge: GaugeField
    links: LinkField
    residual: float
    iterations: int


def coulomb_residual(U: LinkField, U0: LinkField) -> float:
    return d_A_star(extract(U, U0), U0).norm()


def stabilizer_through(U0: LinkField, value: np.ndarray, tol: float = 1e-10) -> Optional[GaugeField]:
    """The element s of Stab(U0) with s(origin) = value, or None if there is none.

    Stabilizers satisfy s(x+mu) = U_mu(x)^-1 s(x) U_mu(x): the real part is
    constant and the vector part is a covariantly constant section.
    """
    lat, g = U0.lattice, U0.group
    s = np.empty(lat.extent + (g.group_components,))
    s[..., 0] = value[0]
    if g is Group.U1:
        s[..., 1] = value[1]
    else:
        s[..., 1:] = transport_from_origin(U0, np.asarray(value[1:], float))
    stab = GaugeField(lat, g, s)
    moved = gauge_transform(U0, stab)
    if np.max(np.abs(moved.links - U0.links)) > tol:
        return None
    return stab


def _origin_value(g: GaugeField) -> np.ndarray:
    return g.values[(0,) * g.lattice.dim]


def coulomb_project(U: LinkField, U0: LinkField, *, tol: float = NEWTON_TOL, max_iter: int = NEWTON_MAX_ITER,
                    radius: Optional[float] = None, normalize_origin: bool = True) -> CoulombProjection:
    """Gauge U into the slice d_{A0}*(extract(U1, U0)) = 0.

    Chord-Newton on h in Ker(d_{A0})^perp: Delta_{A0} h = d_{A0}* extract(U1, U0),
    g <- exp(h) g. The stabilizer ambiguity is fixed by g(origin) = Id.
    """
    radius = 0.3 / U0.lattice.spacing if radius is None else radius
    a = extract(U, U0)
    if a.sup_norm() > radius:
        raise NewtonDivergence(0, coulomb_residual(U, U0), f"|A - A0|_sup = {a.sup_norm():.3e} exceeds {radius:.3e}")
    kernel = parallel_sections(U0)
    g = identity_gauge(U.lattice, U.group)
    U1 = U
    res0 = res = d_A_star(a, U0).norm()
    it = 0
    while res >= tol:
        if it >= max_iter or not np.isfinite(res) or res > 1e3 * max(res0, tol):
            raise NewtonDivergence(it, res)
        r = d_A_star(extract(U1, U0), U0)
        h = solve_laplacian(r, U0, kernel)
        g = GaugeField(g.lattice, g.group, alg.mul(g.group, alg.exp(g.group, h.values), g.values))
        U1 = gauge_transform(U, g)
        it += 1
        res = coulomb_residual(U1, U0)
        logger.debug("coulomb newton %d: residual %.3e", it, res)
    if normalize_origin:
        stab = stabilizer_through(U0, _origin_value(g))
        if stab is not None:
            g = stab.inverse() * g
            U1 = gauge_transform(U, g)
            res = coulomb_residual(U1, U0)
        else:
            logger.debug("origin value of the gauge is not reachable inside Stab(A0); left as is")
    return CoulombProjection(g, U1, res, it)


# ---------- Kernel split and beta ----------
def decompose_kernel(beta: AlgebraForm, U0: LinkField,
                     kernel: Optional[Sequence[AlgebraForm]] = None) -> Tuple[AlgebraForm, AlgebraForm]:
    """(beta_ker, beta_perp) with beta_perp = (d*d)^-1 d*d beta on Ker(d_{A0})^perp."""
    perp = solve_laplacian(d_A_star(d_A(beta, U0), U0), U0, kernel)
    return beta - perp, perp


def solve_beta(a: AlgebraForm, adot: AlgebraForm, U0: LinkField,
               kernel: Optional[Sequence[AlgebraForm]] = None) -> AlgebraForm:
    """beta in Ker(d_{A0})^perp with Delta_A beta = (d_A* - d_{A0}*) adot, A = perturb(U0, a)."""
    A = perturb(U0, a)
    kernel = parallel_sections(U0) if kernel is None else list(kernel)
    rhs = project_out(d_A_star(adot, A) - d_A_star(adot, U0), kernel)
    if rhs.norm() == 0.0:
        return AlgebraForm.zeros(U0.lattice, U0.group, 0)
    return solve_laplacian(rhs, A, kernel)


# ---------- Temporal gauge ----------
BetaSource = Union[Sequence[AlgebraForm], Callable[[float], AlgebraForm]]


def _beta_interpolant(beta: BetaSource, times: np.ndarray) -> Callable[[float], np.ndarray]:
    if callable(beta):
        return lambda t: beta(t).values
    frames = np.stack([b.values for b in beta])
    if len(frames) != len(times):
        raise ValueError(f"{len(frames)} beta frames for {len(times)} times")
    if len(times) >= 4:
        spline = CubicSpline(times, frames, axis=0)
        return lambda t: spline(t)
    if len(times) == 1:
        return lambda t: frames[0]

    def linear(t):
        k = int(np.clip(np.searchsorted(times, t) - 1, 0, len(times) - 2))
        w = (t - times[k]) / (times[k + 1] - times[k])
        return (1.0 - w) * frames[k] + w * frames[k + 1]
    return linear


def temporal_gauge_ode(beta: BetaSource, times: Sequence[float], lattice: Optional[Lattice] = None,
                       group: Optional[Group] = None) -> List[GaugeField]:
    """Integrate dg/dt = g beta(t), g(t0) = Id, with classical RK4 and renormalization."""
    times = np.asarray(times, dtype=float)
    if not callable(beta):
        lattice, group = beta[0].lattice, beta[0].group
    if lattice is None or group is None:
        raise ValueError("a callable beta needs the lattice and group")
    f = _beta_interpolant(beta, times)
    rhs = lambda t, g: alg.right_tangent(group, g, f(t))
    g = alg.identity(group, lattice.extent)
    out = [GaugeField(lattice, group, g)]
    for t0, t1 in zip(times[:-1], times[1:]):
        dt = t1 - t0
        k1 = rhs(t0, g)
        k2 = rhs(t0 + 0.5 * dt, g + 0.5 * dt * k1)
        k3 = rhs(t0 + 0.5 * dt, g + 0.5 * dt * k2)
        k4 = rhs(t1, g + dt * k3)
        g = alg.normalize(g + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
        out.append(GaugeField(lattice, group, g))
    return out


# ---------- Time derivatives of gauge paths ----------
_CENTRAL = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_ONE_SIDED = {
    0: (np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0, 0),
    1: (np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0, -1),
}


def _stencil(k: int, n: int) -> Tuple[np.ndarray, int]:
    """Weights and first offset of a first-derivative stencil at index k of n points."""
    if n >= 5:
        if 2 <= k <= n - 3:
            return _CENTRAL, -2
        if k < 2:
            return _ONE_SIDED[k]
        w, start = _ONE_SIDED[n - 1 - k]
        return -w[::-1], -(start + 4)
    if n == 1:
        return np.zeros(1), 0
    if n == 2:
        return (np.array([-1.0, 1.0]), 0) if k == 0 else (np.array([-1.0, 1.0]), -1)
    if k == 0:
        return np.array([-1.5, 2.0, -0.5]), 0
    if k == n - 1:
        return np.array([0.5, -2.0, 1.5]), -2
    return np.array([-0.5, 0.0, 0.5]), -1


def gauge_velocity(gauges: Sequence[GaugeField], dt: float) -> List[AlgebraForm]:
    """(dg/dt) g^-1 at each time, differentiated in the chart X_j = log(g_{k+j} g_k^-1)."""
    n = len(gauges)
    out = []
    for k, gk in enumerate(gauges):
        grp, lat = gk.group, gk.lattice
        w, start = _stencil(k, n)
        ginv = alg.inv(grp, gk.values)
        acc = np.zeros(lat.form_shape(0, grp))
        for j, wj in enumerate(w):
            if wj == 0.0 or start + j == 0:
                continue
            acc += wj * alg.log(grp, alg.mul(grp, gauges[k + start + j].values, ginv))
        out.append(AlgebraForm(lat, grp, 0, acc / dt if dt else acc))
    return out


def transform_beta(beta: AlgebraForm, g: GaugeField, gdot_ginv: AlgebraForm) -> AlgebraForm:
    """beta' = Ad_g beta - (dg/dt) g^-1."""
    return gauge_transform(beta, g) - gdot_ginv


# ---------- Standard form ----------
def _certificate(path: PathConnection, gauges: Sequence[GaugeField], U0: LinkField,
                 kernel: Sequence[AlgebraForm], source: PathConnection) -> StandardFormCertificate:
    coul = max((coulomb_residual(U, U0) for U in path.links), default=0.0)
    perp = max((kernel_component(b, kernel) for b in path.beta), default=0.0)
    gnorm = max((g.distance_from_identity() for g in gauges), default=0.0)
    dist = max((extract(U, U0).sup_norm() for U in source.links), default=0.0)
    span = float(path.times[-1] - path.times[0]) if len(path) else 0.0
    const = gnorm / ((1.0 + span) * dist) if dist > 0 else 0.0
    return StandardFormCertificate(
        coulomb_residual=coul, perp_residual=perp, gauge_norm=gnorm, gauge_constant=const,
        input_distance=dist, holds=bool(coul < CERT_TOL and perp < CERT_TOL), frames=len(path),
    )


def _second_step(step1: PathConnection, gauges1: List[GaugeField], U0: LinkField,
                 kernel: Sequence[AlgebraForm]):
    parts = [decompose_kernel(b, U0, kernel) for b in step1.beta]
    beta0 = [ker for ker, _ in parts]
    g2 = temporal_gauge_ode(beta0, step1.times)
    links = [gauge_transform(U, g) for U, g in zip(step1.links, g2)]
    beta = [gauge_transform(perp, g) for (_, perp), g in zip(parts, g2)]
    total = [b * a for a, b in zip(gauges1, g2)]
    return PathConnection(step1.lattice, step1.group, step1.times, links, beta), total


def standard_form(path: PathConnection, U0: LinkField, *, newton_tol: float = NEWTON_TOL,
                  radius: Optional[float] = None):
    """Two-step standard form of `path` around U0.

    Step 1 puts every A(t) in Coulomb gauge; step 2 removes the Ker(d_{A0})
    part of beta with the stabilizing ODE gauge. Returns (path', g, cert)
    with path' = g(path) framewise. A failure at time index k raises
    PartialResult carrying the processed prefix [0, k).
    """
    kernel = parallel_sections(U0)
    gauges1, links1 = [], []
    for k, U in enumerate(path.links):
        try:
            proj = coulomb_project(U, U0, tol=newton_tol, radius=radius)
        except YMLabError as e:
            logger.warning("standard form stopped at t=%g: %s", path.times[k], e)
            prefix_path, prefix_gauges, cert = None, [], None
            if k > 0:
                prefix_path, prefix_gauges, cert = _finish(path.prefix(k), gauges1, links1, U0, kernel)
            raise PartialResult(prefix_path, prefix_gauges, cert, k, e) from e
        gauges1.append(proj.gauge)
        links1.append(proj.links)
    return _finish(path, gauges1, links1, U0, kernel)


def _finish(path: PathConnection, gauges1, links1, U0, kernel):
    vel = gauge_velocity(gauges1, path.dt)
    beta1 = [transform_beta(b, g, v) for b, g, v in zip(path.beta, gauges1, vel)]
    step1 = PathConnection(path.lattice, path.group, path.times, links1, beta1)
    out, gauges = _second_step(step1, gauges1, U0, kernel)
    cert = _certificate(out, gauges, U0, kernel, path)
    logger.info("standard form over %d frames: coulomb %.2e, perp %.2e, holds=%s",
                len(out), cert.coulomb_residual, cert.perp_residual, cert.holds)
    return out, gauges, cert
