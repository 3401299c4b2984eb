# ymlab/asymptotics.py
"""Asymptotics of second-order evolution equations and flow traces.

Modal equation, with the optional hooks written on the right-hand side:

    a'' = gamma a' - mu a - N(a) - G1(a') - G2(a'')

For gamma = n - 4 this is the cylinder form of the Yang-Mills equation
in an eigenbasis of the Jacobi operator.
"""
from __future__ import annotations
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, ClassVar, List, Optional, Sequence, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import DegenerateWindow, NotDecaying, StiffnessError, WindowTooShort
from .functional import indicial_roots

logger = logging.getLogger(__name__)

Hook = Callable[[np.ndarray], np.ndarray]


# ---------- Closed-form linear solutions ----------
def linear_solution(gamma: float, mu: float, a: float, b: float, t, derivative: int = 0):
    """General solution of a'' - gamma a' + mu a = 0, or its first/second derivative.

    gamma^2 < 4 mu   e^{gamma t/2} (a cos(alpha t) - b sin(alpha t))
    gamma^2 = 4 mu   (a + b t) e^{gamma t/2}
    gamma^2 > 4 mu   a e^{lambda+ t} + b e^{lambda- t}
    """
    if derivative not in (0, 1, 2):
        raise ValueError(f"derivative must be 0, 1 or 2, got {derivative}")
    t = np.asarray(t, dtype=float)
    disc = gamma * gamma - 4.0 * mu
    half = 0.5 * gamma
    if abs(disc) <= 1e-12 * max(1.0, gamma * gamma):
        e = np.exp(half * t)
        p = a + b * t
        out = [e * p, e * (b + half * p), e * (2.0 * half * b + half * half * p)][derivative]
    elif disc < 0:
        alpha = 0.5 * np.sqrt(-disc)
        c, s = np.cos(alpha * t), np.sin(alpha * t)
        u = a * c - b * s
        du = -alpha * (a * s + b * c)
        ddu = -alpha * alpha * u
        e = np.exp(half * t)
        out = [e * u, e * (half * u + du), e * (half * half * u + gamma * du + ddu)][derivative]
    else:
        root = np.sqrt(disc)
        lp, lm = half + 0.5 * root, half - 0.5 * root
        out = a * lp ** derivative * np.exp(lp * t) + b * lm ** derivative * np.exp(lm * t)
    return float(out) if out.ndim == 0 else out


# ---------- Spectral-Galerkin evolution ----------
@dataclass
class SpectralEvolution:
    gamma: float
    mu: np.ndarray
    coeffs: np.ndarray
    nonlinear: Optional[Hook] = None
    g1: Optional[Hook] = None
    g2: Optional[Hook] = None

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        self.mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        self.coeffs = np.asarray(self.coeffs, dtype=float).reshape(len(self.mu), 2)
        zero = np.zeros_like(self.mu)
        for name in ("nonlinear", "g1", "g2"):
            hook = getattr(self, name)
            if hook is not None and np.any(np.abs(hook(zero)) > 1e-14):
                raise ValueError(f"hook {name} must vanish at the zero state")

    @property
    def max_rate(self) -> float:
        roots = indicial_roots(self.mu, self.gamma).roots
        return max(max(abs(lp), abs(lm)) for lp, lm in roots)

    def acceleration(self, a: np.ndarray, adot: np.ndarray) -> np.ndarray:
        acc = self.gamma * adot - self.mu * a
        if self.nonlinear is not None:
            acc = acc - self.nonlinear(a)
        if self.g1 is not None:
            acc = acc - self.g1(adot)
        if self.g2 is not None:
            acc = acc - self.g2(acc)
        return acc


@dataclass
class Trajectory:
    times: np.ndarray
    position: np.ndarray
    velocity: np.ndarray


def solve_second_order(ev: SpectralEvolution, t_span, dt: float) -> Trajectory:
    """RK4 on (a, a') per mode; the G2 hook is resolved with one fixed-point sweep."""
    rate = ev.max_rate
    if dt * rate >= 0.1:
        raise StiffnessError(dt, rate)
    t0, t1 = float(t_span[0]), float(t_span[1])
    n = int(np.ceil((t1 - t0) / dt - 1e-9))
    times = t0 + dt * np.arange(n + 1)
    times[-1] = t1
    a, v = ev.coeffs[:, 0].copy(), ev.coeffs[:, 1].copy()
    pos, vel = [a.copy()], [v.copy()]
    for k in range(n):
        h = times[k + 1] - times[k]
        k1a, k1v = v, ev.acceleration(a, v)
        k2a, k2v = v + 0.5 * h * k1v, ev.acceleration(a + 0.5 * h * k1a, v + 0.5 * h * k1v)
        k3a, k3v = v + 0.5 * h * k2v, ev.acceleration(a + 0.5 * h * k2a, v + 0.5 * h * k2v)
        k4a, k4v = v + h * k3v, ev.acceleration(a + h * k3a, v + h * k3v)
        a = a + h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        v = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        pos.append(a.copy())
        vel.append(v.copy())
    return Trajectory(times, np.array(pos), np.array(vel))


# ---------- Growth regimes ----------
def window_sup_norms(times: Sequence[float], norms: Sequence[float], L: float) -> np.ndarray:
    """S(j) = max of the samples in the closed window [t0 + (j-1)L, t0 + jL]."""
    t = np.asarray(times, dtype=float)
    x = np.asarray(norms, dtype=float)
    if not L > 0:
        raise ValueError(f"window length must be positive, got {L}")
    span = t[-1] - t[0] if len(t) else 0.0
    count = int(np.floor(span / L + 1e-9))
    if count < 1:
        raise WindowTooShort(f"samples span {span:g} < one window of length {L:g}")
    rel = t - t[0]
    eps = 1e-9 * L
    S = np.empty(count)
    for j in range(1, count + 1):
        inside = (rel >= (j - 1) * L - eps) & (rel <= j * L + eps)
        if not np.any(inside):
            raise WindowTooShort(f"window {j} [{(j - 1) * L:g}, {j * L:g}] holds no samples")
        S[j - 1] = np.max(x[inside])
    return S


def window_growth_rates(S: Sequence[float], L: float) -> np.ndarray:
    """log(S(j+1)/S(j)) / L per consecutive pair."""
    S = np.asarray(S, dtype=float)
    return np.log(S[1:] / S[:-1]) / L


@dataclass
class RegimeReport:
    kind: ClassVar[str] = "regimes"
    window_len: float
    sup_norms: List[float]
    k1: Union[int, str]
    k2: Union[int, str]
    delta: float
    delta1: float
    delta2: float
    decay: List[bool]
    slow: List[bool]
    growth: List[bool]
    consistent: bool


ALL_DECAY = "all_decay"
NO_GROWTH = "none"


def classify_regimes(S: Sequence[float], delta1: float, delta2: float, delta: float, L: float) -> RegimeReport:
    """Split the windows into decay, slow-variation and growth regimes.

    Index j (1-based) compares S(j+1) against S(j):
    k1 = first j that does not decay faster than e^{-(delta2-delta)L},
    k2 = first j >= k1 that grows at least like e^{(delta1-delta)L}.
    """
    if not 0 <= delta < 0.25 * min(delta1, delta2):
        raise ValueError(f"delta={delta} must be below min(delta1, delta2)/4 = {0.25 * min(delta1, delta2)}")
    S = np.asarray(S, dtype=float)
    if np.any(S < 0):
        raise ValueError("sup norms must be nonnegative")
    down = np.exp(-(delta2 - delta) * L)
    up = np.exp((delta1 - delta) * L)
    nxt, cur = S[1:], S[:-1]
    decay = nxt < down * cur
    growth = nxt >= up * cur
    slow = ~decay & ~growth
    N = len(S)
    k1: Union[int, str] = next((j for j in range(1, N) if not decay[j - 1]), ALL_DECAY)
    k2: Union[int, str] = NO_GROWTH
    if k1 != ALL_DECAY:
        k2 = next((j for j in range(k1, N) if growth[j - 1]), NO_GROWTH)
    first = N if k1 == ALL_DECAY else k1
    consistent = bool(np.all(decay[:first - 1]))
    if isinstance(k2, int):
        consistent = consistent and bool(np.all(growth[k2:]))
    return RegimeReport(
        window_len=float(L), sup_norms=[float(s) for s in S], k1=k1, k2=k2,
        delta=float(delta), delta1=float(delta1), delta2=float(delta2),
        decay=[bool(x) for x in decay], slow=[bool(x) for x in slow], growth=[bool(x) for x in growth],
        consistent=consistent,
    )


# ---------- Lojasiewicz exponent ----------
@dataclass
class LojasiewiczFit:
    kind: ClassVar[str] = "lojasiewicz"
    theta: float
    raw_theta: float
    intercept: float
    r_squared: float
    samples: int
    clamped: bool


THETA_FLOOR = 1e-3


def _linear_fit(x: np.ndarray, y: np.ndarray):
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2, float(np.sqrt(np.mean(resid ** 2)))


def lojasiewicz_fit(energies: Sequence[float], grads: Sequence[float], E0: float) -> LojasiewiczFit:
    """theta from the slope of log|M| against log(E - E0), slope = 1 - theta."""
    E = np.asarray(energies, dtype=float) - E0
    M = np.asarray(grads, dtype=float)
    if len(E) < 10:
        raise DegenerateWindow(f"need at least 10 samples, got {len(E)}")
    if np.any(E <= 0) or np.any(M <= 0):
        raise DegenerateWindow("energy gap and gradient norm must be positive on the window")
    decades = float(np.log10(E.max() / E.min()))
    if decades < 2.0:
        raise DegenerateWindow(f"E - E0 spans only {decades:.2f} decades")
    slope, intercept, r2, _ = _linear_fit(np.log(E), np.log(M))
    raw = 1.0 - slope
    theta = float(min(max(raw, THETA_FLOOR), 0.5))
    clamped = theta != raw
    if clamped:
        logger.info("lojasiewicz exponent %.4f clamped to %.4f", raw, theta)
    return LojasiewiczFit(theta=theta, raw_theta=raw, intercept=intercept, r_squared=r2,
                          samples=len(E), clamped=clamped)


# ---------- Convergence rates ----------
class RateModel(str, Enum):
    POWER_T = "power_t"
    EXPONENTIAL = "exponential"


@dataclass
class RateFit:
    kind: ClassVar[str] = "rate"
    model: RateModel
    alpha: float
    alpha_power: float = float("nan")
    alpha_exponential: float = float("nan")
    residual_power: float = float("nan")
    residual_exponential: float = float("nan")
    samples: int = 0


def rate_fit(times: Sequence[float], dist: Sequence[float]) -> RateFit:
    """Fit d ~ t^-alpha and d ~ e^{-alpha t}; the smaller log residual wins, ties go to exponential."""
    t = np.asarray(times, dtype=float)
    d = np.asarray(dist, dtype=float)
    if len(d) < 20:
        raise DegenerateWindow(f"need at least 20 samples, got {len(d)}")
    if np.any(d <= 0):
        raise DegenerateWindow("distances must be positive")
    q = len(d) // 4
    if np.mean(d[-q:]) > np.mean(d[-2 * q:-q]):
        raise NotDecaying("trailing average of the distance increases")
    logd = np.log(d)
    s_exp, _, _, res_exp = _linear_fit(t, logd)
    pos = t > 0
    if np.count_nonzero(pos) >= 2:
        s_pow, _, _, res_pow = _linear_fit(np.log(t[pos]), logd[pos])
    else:
        s_pow, res_pow = float("nan"), float("inf")
    model = RateModel.EXPONENTIAL if res_exp <= res_pow else RateModel.POWER_T
    alpha = -s_exp if model is RateModel.EXPONENTIAL else -s_pow
    logger.info("rate fit: %s alpha=%.6g (residuals exp %.3e, power %.3e)", model.value, alpha, res_exp, res_pow)
    return RateFit(model=model, alpha=float(alpha), alpha_power=float(-s_pow), alpha_exponential=float(-s_exp),
                   residual_power=float(res_pow), residual_exponential=float(res_exp), samples=len(d))


@dataclass
class RatePrediction:
    model: RateModel
    alpha: Optional[float]


def predicted_rate(theta: float) -> RatePrediction:
    """Decay law implied by a Lojasiewicz exponent: exponential at 1/2, else t^{-theta/(1-2 theta)}."""
    if not 0 < theta <= 0.5:
        raise ValueError(f"theta must lie in (0, 1/2], got {theta}")
    if abs(theta - 0.5) < 1e-12:
        return RatePrediction(RateModel.EXPONENTIAL, None)
    return RatePrediction(RateModel.POWER_T, theta / (1.0 - 2.0 * theta))


def linearized_rate(mu1: float, observable: str = "distance") -> float:
    """Exponential rate from the lowest positive slice eigenvalue: mu1 for distances, 2 mu1 for energy gaps."""
    factors = {"distance": 1.0, "gradient": 1.0, "energy": 2.0}
    if observable not in factors:
        raise ValueError(f"unknown observable {observable!r}")
    return factors[observable] * mu1


def tail_length(times: Sequence[float], speeds: Sequence[float]) -> np.ndarray:
    """d(t_k) = integral of |a'| from t_k to the end of the trace."""
    c = cumulative_trapezoid(np.asarray(speeds, float), np.asarray(times, float), initial=0.0)
    return c[-1] - c


# ---------- Integral bound audit ----------
@dataclass
class SimonAudit:
    kind: ClassVar[str] = "integral_bound"
    c_min: float
    theta: float
    epsilon: float
    samples: int
    worst_time: Optional[float]


def simon_integral_bound_audit(times: Sequence[float], speeds: Sequence[float], energies: Sequence[float],
                               E0: float, theta: float, epsilon: float = 0.0) -> SimonAudit:
    """Smallest C with int_{t1}^T |a'| <= C theta^-1 (|E(t1) - E0|^theta + eps^theta) for every t1."""
    tail = tail_length(times, speeds)
    gap = np.abs(np.asarray(energies, dtype=float) - E0)
    bound = (gap ** theta + epsilon ** theta) / theta
    c_min, worst = 0.0, None
    for k, (lhs, rhs) in enumerate(zip(tail, bound)):
        if lhs <= 0.0:
            continue
        ratio = lhs / rhs if rhs > 0 else float("inf")
        if ratio > c_min:
            c_min, worst = ratio, float(times[k])
    return SimonAudit(c_min=float(c_min), theta=float(theta), epsilon=float(epsilon),
                      samples=len(tail), worst_time=worst)
