# ymlab/flow.py
"""Yang-Mills gradient flow: raw flow, gauge-fixed flow and reconstruction."""
from __future__ import annotations
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, ClassVar, List, Optional, Sequence, Tuple

import numpy as np

from . import algebra as alg
from .errors import BranchCutError, SliceExit, StepRejectionExhausted, YMLabError
from .functional import ym_action, ym_gradient
from .gauge import PathConnection, coulomb_project, coulomb_residual, solve_beta, temporal_gauge_ode
from .lattice import (AlgebraForm, GaugeField, LinkField, d_A, d_A_star, extract, gauge_transform,
                      parallel_sections, perturb)

logger = logging.getLogger(__name__)

MONOTONE_TOL = 1e-12


class Scheme(str, Enum):
    EXPLICIT_EULER = "explicit_euler"
    RK4 = "rk4"


class Outcome(str, Enum):
    CONVERGED = "converged"
    ENERGY_DROP = "energy_drop"
    TIMEOUT = "timeout"
    ERROR = "error"


@dataclass
class FlowConfig:
    dt: float = 0.05
    t_max: float = 50.0
    scheme: Scheme = Scheme.EXPLICIT_EULER
    grad_tol: float = 1e-6
    energy_drop_eps: float = 0.1
    trust_region: float = 0.5
    max_halvings: int = 20
    stagnation_window: int = 50
    stagnation_tol: float = 1e-6
    max_steps: int = 100_000
    checkpoint_every: int = 0
    slice_radius: Optional[float] = None

    def __post_init__(self):
        self.scheme = Scheme(self.scheme)
        for name in ("dt", "t_max", "grad_tol", "energy_drop_eps", "trust_region", "stagnation_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"flow.{name} must be positive, got {getattr(self, name)}")

    def validate(self, spacing: float):
        bound = 0.1 * spacing ** 2
        if self.dt > bound * (1 + 1e-12):
            raise ValueError(f"flow.dt={self.dt} exceeds the stability bound 0.1 a^2 = {bound}")


# ---------- Raw flow ----------
def _euler(U: LinkField, dt: float, grad: AlgebraForm) -> LinkField:
    return perturb(U, -grad, dt)


def _rk4(U: LinkField, dt: float, grad: AlgebraForm) -> LinkField:
    """Munthe-Kaas RK4 in the chart U(s) = exp(a Y(s)) U."""
    h, g = U.lattice.spacing, U.group

    def rhs(Y: Optional[AlgebraForm]) -> AlgebraForm:
        if Y is None:
            return -grad
        gr = ym_gradient(perturb(U, Y))
        return Y.like(alg.dexpinv(g, h * Y.values, -h * gr.values) / h)

    k1 = rhs(None)
    k2 = rhs(k1 * (0.5 * dt))
    k3 = rhs(k2 * (0.5 * dt))
    k4 = rhs(k3 * dt)
    return perturb(U, (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))


_SCHEMES = {Scheme.EXPLICIT_EULER: _euler, Scheme.RK4: _rk4}


def advance(U: LinkField, dt: float, scheme: Scheme = Scheme.EXPLICIT_EULER, *,
            trust_region: float = 0.5, max_halvings: int = 20,
            energy: Optional[float] = None, grad: Optional[AlgebraForm] = None) -> Tuple[LinkField, float, float]:
    """One accepted step: (U', dt actually used, E(U')).

    A step is rejected and dt halved when the energy rises by more than
    1e-12 (1 + |E|) or a link moves farther than `trust_region`.
    """
    step = _SCHEMES[Scheme(scheme)]
    E0 = ym_action(U) if energy is None else energy
    grad = ym_gradient(U) if grad is None else grad
    h = U.lattice.spacing
    trial = dt
    for halving in range(max_halvings + 1):
        try:
            U1 = step(U, trial, grad)
            move = extract(U1, U).sup_norm() * h
            E1 = ym_action(U1)
        except BranchCutError:
            E1, move = np.inf, np.inf
        if E1 <= E0 + MONOTONE_TOL * (1.0 + abs(E0)) and move <= trust_region:
            return U1, trial, E1
        logger.debug("step rejected at dt=%.3e (dE=%.3e, move=%.3e)", trial, E1 - E0, move)
        trial *= 0.5
    raise StepRejectionExhausted(max_halvings, trial * 2.0)


def flow_step(U: LinkField, dt: float, scheme: Scheme = Scheme.EXPLICIT_EULER) -> LinkField:
    return advance(U, dt, scheme)[0]


@dataclass
class FlowTrace:
    """One row per state, starting with the initial one (its dt is 0)."""
    times: List[float] = field(default_factory=list)
    energy: List[float] = field(default_factory=list)
    grad_norm: List[float] = field(default_factory=list)
    dist_ref: List[float] = field(default_factory=list)
    step_sizes: List[float] = field(default_factory=list)
    outcome: Optional[Outcome] = None
    message: str = ""
    reference_energy: float = 0.0
    final: Optional[LinkField] = None
    path: Optional[PathConnection] = None

    def append(self, t, E, gnorm, dist, dt):
        self.times.append(float(t))
        self.energy.append(float(E))
        self.grad_norm.append(float(gnorm))
        self.dist_ref.append(float(dist))
        self.step_sizes.append(float(dt))

    def __len__(self) -> int:
        return len(self.times)

    def rows(self):
        return zip(self.times, self.energy, self.grad_norm, self.dist_ref, self.step_sizes)

    def monotone(self) -> bool:
        E = self.energy
        return all(b <= a + MONOTONE_TOL * (1.0 + abs(a)) for a, b in zip(E, E[1:]))


@dataclass
class FlowOutcomeReport:
    kind: ClassVar[str] = "flow_outcome"
    outcome: Outcome
    message: str
    steps: int
    final_time: float
    final_energy: float
    final_grad_norm: float
    final_dist_ref: float
    reference_energy: float

    @classmethod
    def from_trace(cls, trace: FlowTrace) -> "FlowOutcomeReport":
        last = lambda xs: xs[-1] if xs else float("nan")
        return cls(outcome=trace.outcome, message=trace.message, steps=max(len(trace) - 1, 0),
                   final_time=last(trace.times), final_energy=last(trace.energy),
                   final_grad_norm=last(trace.grad_norm), final_dist_ref=last(trace.dist_ref),
                   reference_energy=trace.reference_energy)


def _distance(U: LinkField, U_ref: LinkField) -> float:
    try:
        return extract(U, U_ref).norm()
    except BranchCutError:
        return float("nan")


def _stagnated(dist: Sequence[float], window: int, tol: float) -> bool:
    tail = np.asarray(dist[-window:], dtype=float)
    if not np.all(np.isfinite(tail)):
        return False
    return float(tail.max() - tail.min()) <= tol


def run_flow(U_init: LinkField, U_ref: LinkField, cfg: FlowConfig,
             on_checkpoint: Optional[Callable[[int, LinkField], None]] = None,
             record_path: bool = False) -> FlowTrace:
    """Integrate the raw flow until convergence, an energy drop below the reference, or t_max."""
    cfg.validate(U_init.lattice.spacing)
    E_ref = ym_action(U_ref)
    trace = FlowTrace(reference_energy=E_ref)
    frames: List[LinkField] = []
    frame_times: List[float] = []
    U, t, dt_used, steps = U_init, 0.0, 0.0, 0
    recording = record_path
    E = ym_action(U)
    while True:
        grad = ym_gradient(U)
        gnorm = grad.norm()
        trace.append(t, E, gnorm, _distance(U, U_ref), dt_used)
        if recording and frame_times and abs(dt_used - cfg.dt) > 1e-15:
            recording = False
        if recording:
            frames.append(U)
            frame_times.append(t)
        if E <= E_ref - cfg.energy_drop_eps:
            trace.outcome, trace.message = Outcome.ENERGY_DROP, f"energy {E:.6g} <= {E_ref:.6g} - {cfg.energy_drop_eps:g}"
            break
        if gnorm < cfg.grad_tol and _stagnated(trace.dist_ref, cfg.stagnation_window, cfg.stagnation_tol):
            trace.outcome, trace.message = Outcome.CONVERGED, f"|grad| = {gnorm:.3e} < {cfg.grad_tol:g}"
            break
        if t >= cfg.t_max - 1e-12 or steps >= cfg.max_steps:
            trace.outcome, trace.message = Outcome.TIMEOUT, f"stopped at t={t:g} after {steps} steps"
            break
        try:
            U, dt_used, E = advance(U, min(cfg.dt, cfg.t_max - t), cfg.scheme, trust_region=cfg.trust_region,
                                    max_halvings=cfg.max_halvings, energy=E, grad=grad)
        except YMLabError as e:
            trace.outcome, trace.message = Outcome.ERROR, f"{type(e).__name__}: {e}"
            break
        t += dt_used
        steps += 1
        if on_checkpoint is not None and cfg.checkpoint_every and steps % cfg.checkpoint_every == 0:
            on_checkpoint(steps, U)
    trace.final = U
    if record_path and frames:
        zero = AlgebraForm.zeros(U.lattice, U.group, 0)
        trace.path = PathConnection(U.lattice, U.group, np.array(frame_times), frames,
                                    [zero.copy() for _ in frames])
    logger.info("flow finished: %s (%s)", trace.outcome.value, trace.message)
    return trace


# ---------- Gauge-fixed flow ----------
def fixed_velocity(a: AlgebraForm, U0: LinkField, sweeps: int = 1,
                   kernel: Optional[Sequence[AlgebraForm]] = None) -> Tuple[AlgebraForm, AlgebraForm]:
    """Right-hand side of the Coulomb-gauge-fixed flow and its beta.

    adot = -d_A* F_A - d_{A0} d_{A0}* a + d_A beta, with beta from the
    constraint solve fed by the current adot estimate (Picard sweeps).
    """
    A = perturb(U0, a)
    kernel = parallel_sections(U0) if kernel is None else kernel
    base = -ym_gradient(A) - d_A(d_A_star(a, U0), U0)
    v = base
    beta = AlgebraForm.zeros(U0.lattice, U0.group, 0)
    for _ in range(sweeps):
        beta = solve_beta(a, v, U0, kernel)
        v = base + d_A(beta, A)
    return v, beta


@dataclass
class FixedStep:
    a: AlgebraForm
    beta: AlgebraForm
    drift: float
    correction: float


def advance_gauge_fixed(a: AlgebraForm, U0: LinkField, dt: float, *, sweeps: int = 1,
                        slice_radius: Optional[float] = None,
                        kernel: Optional[Sequence[AlgebraForm]] = None) -> FixedStep:
    """One explicit step of the gauge-fixed flow followed by re-projection onto the slice.

    The re-projection gauge G is folded into beta: beta_total = beta - log(G) / dt.
    """
    radius = 0.3 / U0.lattice.spacing if slice_radius is None else slice_radius
    if a.norm() > radius:
        raise SliceExit(a.norm(), radius)
    kernel = parallel_sections(U0) if kernel is None else kernel
    v, beta = fixed_velocity(a, U0, sweeps, kernel)
    A_next = perturb(perturb(U0, a), v, dt)
    drift = coulomb_residual(A_next, U0)
    proj = coulomb_project(A_next, U0, normalize_origin=False)
    fix = AlgebraForm(U0.lattice, U0.group, 0, alg.log(U0.group, proj.gauge.values))
    return FixedStep(extract(proj.links, U0), beta - fix / dt, drift, fix.norm())


def gauge_fixed_flow_step(a: AlgebraForm, U0: LinkField, dt: float, **kw) -> AlgebraForm:
    return advance_gauge_fixed(a, U0, dt, **kw).a


@dataclass
class GaugeFixedRun:
    path: PathConnection
    drift: List[float]
    constraint: List[float]
    energy: List[float]


def run_gauge_fixed_flow(a0: AlgebraForm, U0: LinkField, dt: float, steps: int, *, sweeps: int = 1,
                         slice_radius: Optional[float] = None) -> GaugeFixedRun:
    """Integrate the gauge-fixed flow from perturb(U0, a0) projected onto the slice."""
    kernel = parallel_sections(U0)
    start = coulomb_project(perturb(U0, a0), U0, normalize_origin=False)
    a = extract(start.links, U0)
    times, links, betas, drift, constraint, energy = [], [], [], [], [], []
    for k in range(steps + 1):
        U = perturb(U0, a)
        times.append(k * dt)
        links.append(U)
        constraint.append(d_A_star(a, U0).norm())
        energy.append(ym_action(U))
        if k == steps:
            betas.append(betas[-1].copy() if betas else AlgebraForm.zeros(U0.lattice, U0.group, 0))
            break
        step = advance_gauge_fixed(a, U0, dt, sweeps=sweeps, slice_radius=slice_radius, kernel=kernel)
        betas.append(step.beta)
        drift.append(step.drift)
        a = step.a
    path = PathConnection(U0.lattice, U0.group, np.array(times), links, betas)
    return GaugeFixedRun(path, drift, constraint, energy)


# ---------- Reconstruction ----------
def reconstruct_flow(fixed_path: PathConnection) -> List[Tuple[GaugeField, LinkField]]:
    """Undo the gauge fixing: dg/dt = g beta, raw(t) = g(t)(A(t))."""
    gauges = temporal_gauge_ode(fixed_path.beta, fixed_path.times)
    return [(g, gauge_transform(U, g)) for g, U in zip(gauges, fixed_path.links)]


@dataclass
class ResidualAudit:
    max_residual: float
    grad_scale: float
    dt: float
    residuals: List[float]

    @property
    def ratio(self) -> float:
        return self.max_residual / (self.dt * self.grad_scale) if self.grad_scale > 0 and self.dt > 0 else 0.0


def flow_residual_audit(times: Sequence[float], links: Sequence[LinkField]) -> ResidualAudit:
    """max over interior times of |A_dot + d_A* F_A|, A_dot by central differences in the left chart."""
    times = np.asarray(times, dtype=float)
    res = []
    for k in range(1, len(links) - 1):
        dt2 = times[k + 1] - times[k - 1]
        adot = (extract(links[k + 1], links[k]) - extract(links[k - 1], links[k])) / dt2
        res.append((adot + ym_gradient(links[k])).norm())
    scale = max((ym_gradient(U).norm() for U in links), default=0.0)
    dt = float(times[1] - times[0]) if len(times) > 1 else 0.0
    return ResidualAudit(max(res, default=0.0), scale, dt, res)
