# ymlab/algebra.py
"""Structure groups U(1) and SU(2) and their Lie algebras.

Every kernel works on numpy arrays whose *last* axis holds the components,
so the same code handles one element or a whole lattice of them:

    U1   group (re, im)          algebra  theta
    SU2  group (w, x, y, z)      algebra  v = (v1, v2, v3)

The su(2) chart sends v to the pure quaternion (0, v); exp is the quaternion
exponential (cos|v|, sin|v| v/|v|), the bracket is the quaternion commutator
2 v x w (i.e. [e_i, e_j] = 2 eps_ijk e_k, the -i sigma matrices) and the
Ad-invariant metric is <v, w> = 2 v.w. For U1 the metric is plain theta*phi.
"""
from __future__ import annotations
from dataclasses import dataclass
from enum import IntEnum
from typing import Tuple

import numpy as np

from .errors import BranchCutError, GroupMismatch

BRANCH_TOL = 1e-10


class Group(IntEnum):
    U1 = 0
    SU2 = 1

    @property
    def group_components(self) -> int:
        return 2 if self is Group.U1 else 4

    @property
    def algebra_components(self) -> int:
        return 1 if self is Group.U1 else 3

    @property
    def metric(self) -> float:
        return 1.0 if self is Group.U1 else 2.0

    @property
    def abelian(self) -> bool:
        return self is Group.U1

    @classmethod
    def parse(cls, name) -> "Group":
        if isinstance(name, Group):
            return name
        key = str(name).strip().upper()
        if key not in cls.__members__:
            raise ValueError(f"unknown group {name!r} (expected u1 or su2)")
        return cls[key]


# ---------- Array kernels ----------
def identity(group: Group, shape: Tuple[int, ...] = ()) -> np.ndarray:
    out = np.zeros(tuple(shape) + (group.group_components,))
    out[..., 0] = 1.0
    return out


def zeros(group: Group, shape: Tuple[int, ...] = ()) -> np.ndarray:
    return np.zeros(tuple(shape) + (group.algebra_components,))


def normalize(g: np.ndarray) -> np.ndarray:
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def mul(group: Group, g: np.ndarray, h: np.ndarray) -> np.ndarray:
    if group is Group.U1:
        re = g[..., 0] * h[..., 0] - g[..., 1] * h[..., 1]
        im = g[..., 0] * h[..., 1] + g[..., 1] * h[..., 0]
        return normalize(np.stack([re, im], axis=-1))
    w1, v1 = g[..., :1], g[..., 1:]
    w2, v2 = h[..., :1], h[..., 1:]
    w = w1 * w2 - np.sum(v1 * v2, axis=-1, keepdims=True)
    v = w1 * v2 + w2 * v1 + np.cross(v1, v2)
    return normalize(np.concatenate([w, v], axis=-1))


def right_tangent(group: Group, g: np.ndarray, x: np.ndarray) -> np.ndarray:
    """g x as a tangent vector at g (no renormalization); the velocity of dg/dt = g x."""
    if group is Group.U1:
        theta = x[..., 0]
        return np.stack([-g[..., 1] * theta, g[..., 0] * theta], axis=-1)
    w, q = g[..., :1], g[..., 1:]
    return np.concatenate([-np.sum(q * x, axis=-1, keepdims=True), w * x + np.cross(q, x)], axis=-1)


def inv(group: Group, g: np.ndarray) -> np.ndarray:
    out = np.array(g, dtype=float, copy=True)
    out[..., 1:] *= -1.0
    return out


def exp(group: Group, x: np.ndarray) -> np.ndarray:
    if group is Group.U1:
        theta = x[..., 0]
        return np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    theta = np.linalg.norm(x, axis=-1, keepdims=True)
    # sin(theta)/theta without the 0/0
    return np.concatenate([np.cos(theta), np.sinc(theta / np.pi) * x], axis=-1)


def log(group: Group, g: np.ndarray) -> np.ndarray:
    w = g[..., 0]
    if np.any(w <= -1.0 + BRANCH_TOL):
        worst = float(np.min(w))
        raise BranchCutError(f"{group.name} element with real part {worst:.12f} is on the logarithm branch cut")
    if group is Group.U1:
        return np.arctan2(g[..., 1], w)[..., None]
    q = g[..., 1:]
    s = np.linalg.norm(q, axis=-1)
    theta = np.arctan2(s, w)
    small = s < 1e-8
    safe = np.where(small, 1.0, s)
    w_near = np.where(small, w, 1.0)
    factor = np.where(small, 1.0 / w_near - s * s / (3.0 * w_near ** 3), theta / safe)
    return factor[..., None] * q


def adjoint(group: Group, g: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Ad_g x = g x g^-1, i.e. the rotation of x by the unit quaternion g."""
    if group is Group.U1:
        return np.broadcast_to(x, np.broadcast_shapes(g.shape[:-1] + (1,), x.shape)).copy()
    w, q = g[..., :1], g[..., 1:]
    t = 2.0 * np.cross(q, x)
    return x + w * t + np.cross(q, t)


def bracket(group: Group, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    if group is Group.U1:
        return np.zeros(np.broadcast_shapes(x.shape, y.shape))
    return 2.0 * np.cross(x, y)


def inner(group: Group, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Pointwise metric; sums only the component axis."""
    return group.metric * np.sum(x * y, axis=-1)


def dexpinv(group: Group, x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Inverse differential of exp: if d/dt exp(X) exp(X)^-1 = Z then dX/dt = dexpinv(X, Z).

    For su(2), ad_X has eigenvalues 0 and +-2i|X|, so the Bernoulli series
    collapses to Z - [X,Z]/2 + c(|X|) [X,[X,Z]] with
    c = (1 - |X| cot|X|) / (4 |X|^2).
    """
    if group is Group.U1:
        return np.array(z, dtype=float, copy=True)
    theta = np.linalg.norm(x, axis=-1, keepdims=True)
    small = theta < 1e-4
    safe = np.where(small, 1.0, theta)
    c = np.where(small, 1.0 / 12.0 + theta ** 2 / 180.0,
                 (1.0 - safe / np.tan(safe)) / (4.0 * safe ** 2))
    xz = bracket(group, x, z)
    return z - 0.5 * xz + c * bracket(group, x, xz)


def random_algebra(group: Group, rng, shape: Tuple[int, ...] = (), scale: float = 1.0) -> np.ndarray:
    size = tuple(shape) + (group.algebra_components,)
    return scale * np.asarray(rng.standard_normal(size), dtype=float).reshape(size)


def random_group(group: Group, rng, shape: Tuple[int, ...] = (), scale: float = 1.0) -> np.ndarray:
    return exp(group, random_algebra(group, rng, shape, scale))


# ---------- Element-level API ----------
@dataclass(frozen=True)
class GroupElement:
    group: Group
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", np.asarray(self.data, dtype=float))
        if self.data.shape[-1:] != (self.group.group_components,):
            raise ValueError(f"{self.group.name} group data needs {self.group.group_components} components")

    @classmethod
    def identity(cls, group: Group) -> "GroupElement":
        return cls(group, identity(group))

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return group_mul(self, other)


@dataclass(frozen=True)
class AlgebraElement:
    group: Group
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", np.atleast_1d(np.asarray(self.data, dtype=float)))
        if self.data.shape[-1:] != (self.group.algebra_components,):
            raise ValueError(f"{self.group.name} algebra data needs {self.group.algebra_components} components")

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        _same_group(self, other)
        return AlgebraElement(self.group, self.data + other.data)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        _same_group(self, other)
        return AlgebraElement(self.group, self.data - other.data)

    def __mul__(self, s: float) -> "AlgebraElement":
        return AlgebraElement(self.group, s * self.data)

    __rmul__ = __mul__


def _same_group(*items) -> Group:
    groups = {it.group for it in items}
    if len(groups) != 1:
        raise GroupMismatch(f"mixed structure groups: {sorted(g.name for g in groups)}")
    return items[0].group


def exp_map(x: AlgebraElement) -> GroupElement:
    return GroupElement(x.group, exp(x.group, x.data))


def log_map(g: GroupElement) -> AlgebraElement:
    return AlgebraElement(g.group, log(g.group, g.data))


def group_mul(g: GroupElement, h: GroupElement) -> GroupElement:
    grp = _same_group(g, h)
    return GroupElement(grp, mul(grp, g.data, h.data))


def group_inv(g: GroupElement) -> GroupElement:
    return GroupElement(g.group, inv(g.group, g.data))


def adjoint_action(g: GroupElement, x: AlgebraElement) -> AlgebraElement:
    grp = _same_group(g, x)
    return AlgebraElement(grp, adjoint(grp, g.data, x.data))


def lie_bracket(x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    grp = _same_group(x, y)
    return AlgebraElement(grp, bracket(grp, x.data, y.data))


def inner_product(x: AlgebraElement, y: AlgebraElement) -> float:
    grp = _same_group(x, y)
    return float(np.sum(inner(grp, x.data, y.data)))


def group_algebra_ops(g: GroupElement, h: GroupElement, x: AlgebraElement, y: AlgebraElement):
    """(g h, g^-1, Ad_g x, [x, y]) in one call."""
    _same_group(g, h, x, y)
    return group_mul(g, h), group_inv(g), adjoint_action(g, x), lie_bracket(x, y)
