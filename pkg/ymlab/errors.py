# ymlab/errors.py
from __future__ import annotations
from typing import Any, Optional


class YMLabError(Exception): pass

# ---------- algebra ----------
class GroupMismatch(YMLabError, ValueError): pass

class BranchCutError(YMLabError):
    """A group element sits on (or too close to) the cut locus of the principal logarithm."""

# ---------- solvers ----------
class NonConvergence(YMLabError):
    def __init__(self, iterations: int, residual: float, what: str = "solver"):
        self.iterations = iterations
        self.residual = residual
        super().__init__(f"{what} did not converge after {iterations} iterations (residual {residual:.3e})")

class KernelComponentError(YMLabError):
    def __init__(self, component: float, tol: float):
        self.component = component
        self.tol = tol
        super().__init__(f"right-hand side has kernel component {component:.3e} > {tol:.3e}")

# ---------- gauge ----------
class NewtonDivergence(YMLabError):
    def __init__(self, iterations: int, residual: float, reason: str = ""):
        self.iterations = iterations
        self.residual = residual
        msg = f"Coulomb Newton iteration diverged at iteration {iterations} (residual {residual:.3e})"
        super().__init__(f"{msg}: {reason}" if reason else msg)

class PartialResult(YMLabError):
    """Standard-form construction failed at `failed_index`; `path`/`gauges` hold the good prefix."""
    def __init__(self, path: Any, gauges: list, certificate: Any, failed_index: int, cause: BaseException):
        self.path = path
        self.gauges = gauges
        self.certificate = certificate
        self.failed_index = failed_index
        self.cause = cause
        super().__init__(f"construction stopped at time index {failed_index}: {type(cause).__name__}: {cause}")

# ---------- flow ----------
class StepRejectionExhausted(YMLabError):
    def __init__(self, halvings: int, dt: float):
        self.halvings = halvings
        self.dt = dt
        super().__init__(f"step rejected after {halvings} halvings (dt={dt:.3e})")

class SliceExit(YMLabError):
    def __init__(self, norm: float, radius: float):
        self.norm = norm
        self.radius = radius
        super().__init__(f"|a| = {norm:.3e} left the slice radius {radius:.3e}")

# ---------- asymptotics ----------
class StiffnessError(YMLabError, ValueError):
    def __init__(self, dt: float, rate: float):
        self.dt = dt
        self.rate = rate
        super().__init__(f"dt*max|lambda| = {dt * rate:.3e} >= 0.1 (dt={dt}, max|lambda|={rate:.3e})")

class WindowTooShort(YMLabError): pass
class DegenerateWindow(YMLabError): pass
class NotDecaying(YMLabError): pass

# ---------- cone ----------
class QuadratureUnderResolved(YMLabError):
    def __init__(self, value: float, refined: float):
        self.value = value
        self.refined = refined
        super().__init__(f"quadrature changed from {value:.6e} to {refined:.6e} under refinement")

class InsufficientSmoothness(YMLabError):
    def __init__(self, coarse: float, fine: float):
        self.coarse = coarse
        self.fine = fine
        super().__init__(f"difference stencils disagree across resolutions ({coarse:.3e} vs {fine:.3e})")

# ---------- io ----------
class CheckpointError(YMLabError):
    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        super().__init__(message)

class BadMagic(CheckpointError): pass
class VersionMismatch(CheckpointError): pass
class CrcMismatch(CheckpointError): pass
class TruncatedFile(CheckpointError): pass

# ---------- config ----------
class ConfigError(YMLabError):
    def __init__(self, key: str, reason: str):
        self.key = key
        super().__init__(f"{key}: {reason}")
