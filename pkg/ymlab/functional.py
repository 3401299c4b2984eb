# ymlab/functional.py
"""Yang-Mills energy, its gradient, the Jacobi operator and its slice spectrum."""
from __future__ import annotations
import logging
from dataclasses import dataclass, field
from typing import ClassVar, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, eigh, null_space

from . import algebra as alg
from .errors import NonConvergence
from .lattice import AlgebraForm, LinkField, curvature, d_A, d_A_star, shift

logger = logging.getLogger(__name__)

ZERO_MODE_TOL = 1e-8
DEGENERATE_TOL = 1e-12


# ---------- Energy and gradient ----------
def ym_action(U: LinkField) -> float:
    """sum_x sum_{mu<nu} a^d <F_{mu nu}(x), F_{mu nu}(x)>."""
    F = curvature(U)
    return F.inner(F)


def ym_gradient(U: LinkField) -> AlgebraForm:
    """d_A* F_A; exact chart gradient: d/dt E(perturb(U, a, t)) = 2 <grad, a>."""
    return d_A_star(curvature(U), U)


def curvature_variation(a: AlgebraForm, U: LinkField) -> AlgebraForm:
    """d/dt curvature(perturb(U, a, t)) at t = 0.

    On each plaquette the right-trivialized holonomy variation is
    a (e - Ad_P f); pulling it through the logarithm gives
    (dexpinv(X, e) - dexpinv(-X, f)) / a with X = log P.
    """
    lat, g, h = U.lattice, U.group, U.lattice.spacing
    X = curvature(U).values * h ** 2
    av = a.values
    out = []
    for p, (mu, nu) in enumerate(lat.planes):
        a_mu, a_nu = av[..., mu, :], av[..., nu, :]
        e = a_mu + alg.adjoint(g, U.link(mu), shift(a_nu, mu))
        f = alg.adjoint(g, U.link(nu), shift(a_mu, nu)) + a_nu
        x = X[..., p, :]
        out.append(alg.dexpinv(g, x, e) - alg.dexpinv(g, -x, f))
    return AlgebraForm(lat, g, 2, np.stack(out, axis=-2) / h)


def _codifferential_variation(a: AlgebraForm, B: AlgebraForm, U: LinkField) -> AlgebraForm:
    """d/dt d*_{A(t)} B at fixed B, A(t) = perturb(U, a, t)."""
    lat, g = U.lattice, U.group
    av = a.values
    out = np.zeros(lat.form_shape(1, g))
    for p, (mu, nu) in enumerate(lat.planes):
        b = B.values[..., p, :]
        out[..., nu, :] -= shift(alg.adjoint(g, alg.inv(g, U.link(mu)), alg.bracket(g, av[..., mu, :], b)), mu, -1)
        out[..., mu, :] += shift(alg.adjoint(g, alg.inv(g, U.link(nu)), alg.bracket(g, av[..., nu, :], b)), nu, -1)
    return AlgebraForm(lat, g, 1, out)


def hessian_apply(a: AlgebraForm, U0: LinkField) -> AlgebraForm:
    """Exact derivative of ym_gradient along perturb(U0, a, t)."""
    dF = curvature_variation(a, U0)
    return _codifferential_variation(a, curvature(U0), U0) + d_A_star(dF, U0)


def jacobi_apply(a: AlgebraForm, U0: LinkField) -> AlgebraForm:
    """L a = D(grad)(a) + d_{A0} d_{A0}* a; self-adjoint at critical U0."""
    return hessian_apply(a, U0) + d_A(d_A_star(a, U0), U0)


# ---------- Coulomb slice and spectrum ----------
@dataclass
class CoulombSlice:
    """Euclidean-orthonormal columns spanning Ker(d_{A0}*) on flattened 1-forms."""
    U0: LinkField
    basis: np.ndarray

    @property
    def dimension(self) -> int:
        return int(self.basis.shape[1])

    def form(self, coeffs: np.ndarray) -> AlgebraForm:
        lat, g = self.U0.lattice, self.U0.group
        scale = np.sqrt(lat.cell_volume * g.metric)
        return AlgebraForm(lat, g, 1, (self.basis @ coeffs).reshape(lat.form_shape(1, g)) / scale)

    def project(self, a: AlgebraForm) -> AlgebraForm:
        v = a.flat()
        return a.like((self.basis @ (self.basis.T @ v)).reshape(a.values.shape))


def differential_matrix(U0: LinkField) -> np.ndarray:
    """Dense matrix of d_{A0} on flattened 0-forms."""
    lat, g = U0.lattice, U0.group
    n0 = int(np.prod(lat.form_shape(0, g)))
    cols = []
    for i in range(n0):
        e = np.zeros(n0)
        e[i] = 1.0
        cols.append(d_A(AlgebraForm(lat, g, 0, e.reshape(lat.form_shape(0, g))), U0).flat())
    return np.stack(cols, axis=1)


def coulomb_slice(U0: LinkField) -> CoulombSlice:
    return CoulombSlice(U0, null_space(differential_matrix(U0).T))


def _operator_matrix(apply, sl: CoulombSlice) -> np.ndarray:
    lat, g = sl.U0.lattice, sl.U0.group
    shape = lat.form_shape(1, g)
    cols = [apply(AlgebraForm(lat, g, 1, q.reshape(shape))).flat() for q in sl.basis.T]
    return sl.basis.T @ np.stack(cols, axis=1)


@dataclass
class SpectrumReport:
    kind: ClassVar[str] = "spectrum"
    eigenvalues: List[float]
    residuals: List[float]
    gram_deviation: float
    kernel_dimension: int
    slice_dimension: int
    asymmetry: float = 0.0
    eigenforms: List[AlgebraForm] = field(default_factory=list, repr=False, compare=False,
                                          metadata={"json": False})

    @property
    def lowest_positive(self) -> Optional[float]:
        pos = [m for m in self.eigenvalues if m > ZERO_MODE_TOL]
        return min(pos) if pos else None


def spectrum(U0: LinkField, count: int, slice: Optional[CoulombSlice] = None) -> SpectrumReport:
    """Lowest `count` eigenpairs of the Jacobi operator on Ker(d_{A0}*), dense solve."""
    sl = coulomb_slice(U0) if slice is None else slice
    if count > sl.dimension:
        raise ValueError(f"asked for {count} eigenpairs but the slice has dimension {sl.dimension}")
    M = _operator_matrix(lambda a: jacobi_apply(a, U0), sl)
    asym = float(np.max(np.abs(M - M.T))) if M.size else 0.0
    if asym > 1e-6 * max(1.0, float(np.max(np.abs(M)))):
        logger.warning("Jacobi matrix asymmetry %.3e: reference connection is not critical", asym)
    try:
        w, v = eigh(0.5 * (M + M.T))
    except LinAlgError as e:
        raise NonConvergence(0, float("nan"), f"dense eigensolve ({e})") from e
    forms = [sl.form(v[:, i]) for i in range(count)]
    residuals = [(jacobi_apply(phi, U0) - phi * w[i]).norm() for i, phi in enumerate(forms)]
    gram = np.array([[p.inner(q) for q in forms] for p in forms]) if forms else np.zeros((0, 0))
    gram_dev = float(np.max(np.abs(gram - np.eye(count)))) if count else 0.0
    kernel_dim = int(np.sum(np.abs(w) < ZERO_MODE_TOL))
    logger.info("slice dimension %d, kernel dimension %d, lowest eigenvalues %s",
                sl.dimension, kernel_dim, np.array2string(w[:count], precision=6))
    return SpectrumReport(
        eigenvalues=[float(x) for x in w[:count]],
        residuals=[float(r) for r in residuals],
        gram_deviation=gram_dev,
        kernel_dimension=kernel_dim,
        slice_dimension=sl.dimension,
        asymmetry=asym,
        eigenforms=forms,
    )


# ---------- Indicial roots ----------
@dataclass
class IndicialRoots:
    gamma: float
    mu: List[float]
    roots: List[Tuple[complex, complex]]
    delta1: Optional[float]
    delta2: Optional[float]
    degenerate: bool
    branches: List[str]


def indicial_roots(mu: Sequence[float], gamma: float) -> IndicialRoots:
    """Roots of lambda^2 - gamma lambda + mu_i = 0 and the gaps delta1, delta2."""
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    mus = [float(m) for m in mu]
    roots, branches, reals = [], [], []
    for m in mus:
        disc = gamma * gamma - 4.0 * m
        s = np.sqrt(complex(disc))
        lp, lm = 0.5 * (gamma + s), 0.5 * (gamma - s)
        roots.append((complex(lp), complex(lm)))
        branches.append("oscillatory" if disc < 0 else "critical" if disc == 0 else "real")
        reals += [lp.real, lm.real]
    pos = [r for r in reals if r > DEGENERATE_TOL]
    neg = [-r for r in reals if r < -DEGENERATE_TOL]
    degenerate = any(abs(r) <= DEGENERATE_TOL for r in reals)
    return IndicialRoots(
        gamma=float(gamma), mu=mus, roots=roots,
        delta1=min(pos) if pos else None,
        delta2=min(neg) if neg else None,
        degenerate=degenerate, branches=branches,
    )
