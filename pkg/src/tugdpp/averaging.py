"""Quadrature for the directional average I^z_eps u(x).

    I^z_eps u(x) = (1 / gamma_{N,p}) avg_{B_1} u(x + eps h) (z.h)_+^{p-2} dh

The weight is singular on the hyperplane z.h = 0 when p < 2.  Two rules are
provided, both built once in the canonical frame z = e_1 and rotated per
direction.

``polar`` (default)
    h = r * omega.  The radial factor r^{N+p-3} and the angular factor
    cos(phi)^{p-2} are absorbed into Gauss-Jacobi weights, so the remaining
    integrand is smooth and both factors converge spectrally.  Polynomials of
    degree <= 2 are reproduced to rounding.

``axial``
    h = t e_1 + y.  The axial weight t^{p-2} is removed by t = s^{1/(p-1)}
    and the cross-section is integrated with Gauss-Legendre (N = 2) or a
    polar product rule (N = 3).  The chord length sqrt(1 - t^2) leaves a
    square-root endpoint singularity at t = 1, so this rule only converges
    algebraically (about 1e-5 at 32 nodes).  Kept as an independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .errors import OutOfDomain, UnsupportedDimension
from .grid import GridField, field_stencil
from .kernel import KernelParams, ball_volume

SCHEMES = ("polar", "axial")


def unit(z, tol: float = 1e-12) -> np.ndarray:
    """Return z as a float array, checking |z| = 1 within ``tol``.

    Pass tol=None to normalize instead of checking.
    """
    z = np.asarray(z, dtype=float)
    n = float(np.linalg.norm(z))
    if tol is None:
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return z / n
    if abs(n - 1.0) > tol:
        raise ValueError(f"direction must be a unit vector, |z| = {n!r}")
    return z


@dataclass(frozen=True)
class Direction:
    components: tuple[float, ...]

    def __post_init__(self):
        unit(self.components)

    @classmethod
    def from_angle(cls, theta: float) -> "Direction":
        return cls((math.cos(theta), math.sin(theta)))

    @classmethod
    def normalized(cls, z) -> "Direction":
        return cls(tuple(unit(z, tol=None)))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.components, dtype=dtype)


def frame(z) -> np.ndarray:
    """Orthogonal matrix R with R e_1 = z (rotation in 2D, Householder in 3D+)."""
    z = np.asarray(z, dtype=float)
    if z.size == 2:
        return np.array([[z[0], -z[1]], [z[1], z[0]]])
    # reflect through whichever of e_1 -/+ z avoids cancellation
    e1 = np.zeros_like(z)
    e1[0] = 1.0
    sign = -1.0 if z[0] >= 0 else 1.0
    v = e1 - sign * z
    return sign * (np.eye(z.size) - 2.0 * np.outer(v, v) / float(v @ v))


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes (canonical frame, in B_1) and weights summing to one.

    ``axial_nodes`` / ``cross_nodes`` are the two one-dimensional factors of
    the product rule: (radius, weight) and (unit direction, weight) for the
    polar scheme, (t, weight) and (cross-section point, weight) for the axial
    scheme (there the cross weights are per unit chord, see ``build_rule``).
    """

    dim: int
    p: float
    scheme: str
    points: np.ndarray
    weights: np.ndarray
    axial_nodes: tuple
    cross_nodes: tuple
    raw_mass: float

    @property
    def total_node_count(self) -> int:
        return int(self.weights.size)

    def nodes(self, x, z, eps: float) -> np.ndarray:
        """Physical nodes x + eps R h for direction z."""
        return np.asarray(x, dtype=float) + eps * self.points @ frame(z).T


def _angular_2d(n: int, p: float):
    x, w = roots_jacobi(n, p - 2.0, p - 2.0)
    phi = 0.5 * math.pi * x
    # cos(pi x / 2) = (1 - x^2) S(x) with S smooth and S(+-1) = pi/4
    s = np.cos(phi) / (1.0 - x * x)
    w = w * (0.5 * math.pi) * s ** (p - 2.0)
    dirs = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    return dirs, w


def _angular_3d(n: int, p: float):
    x, w = roots_jacobi(n, 0.0, p - 2.0)
    c = 0.5 * (1.0 + x)
    w = w * 2.0 ** (-(p - 1.0))
    psi = 2.0 * math.pi * (np.arange(n) + 0.5) / n
    cc, pp = np.meshgrid(c, psi, indexing="ij")
    ss = np.sqrt(np.clip(1.0 - cc * cc, 0.0, None))
    dirs = np.stack([cc, ss * np.cos(pp), ss * np.sin(pp)], axis=-1).reshape(-1, 3)
    ww = (w[:, None] * np.full(n, 2.0 * math.pi / n)[None, :]).reshape(-1)
    return dirs, ww


def _polar_rule(params: KernelParams, axial_count: int, cross_count: int):
    n, p = params.dim, params.p
    xr, wr = roots_jacobi(axial_count, 0.0, n + p - 3.0)
    r = 0.5 * (1.0 + xr)
    wr = wr * 2.0 ** (-(n + p - 2.0))
    dirs, wa = _angular_2d(cross_count, p) if n == 2 else _angular_3d(cross_count, p)
    pts = (r[:, None, None] * dirs[None, :, :]).reshape(-1, n)
    wts = (wr[:, None] * wa[None, :]).reshape(-1)
    return pts, wts, tuple(zip(r, wr)), tuple(zip(map(tuple, dirs), wa))


def _axial_rule(params: KernelParams, axial_count: int, cross_count: int):
    n, p = params.dim, params.p
    xs, ws = roots_legendre(axial_count)
    s = 0.5 * (1.0 + xs)
    ws = 0.5 * ws
    if p < 2.0:
        # t^{p-2} dt = ds / (p - 1)
        t = s ** (1.0 / (p - 1.0))
        wt = ws / (p - 1.0)
    else:
        t = s
        wt = ws * t ** (p - 2.0)
    rho = np.sqrt(np.clip(1.0 - t * t, 0.0, None))
    if n == 2:
        yc, wc = roots_legendre(cross_count)
        cross = yc[:, None]
        cross_w = wc
    else:
        xr, wrr = roots_legendre(cross_count)
        rr = 0.5 * (1.0 + xr)
        wrr = 0.5 * wrr * rr
        psi = 2.0 * math.pi * (np.arange(cross_count) + 0.5) / cross_count
        R, P = np.meshgrid(rr, psi, indexing="ij")
        cross = np.stack([R * np.cos(P), R * np.sin(P)], axis=-1).reshape(-1, 2)
        cross_w = (wrr[:, None] * np.full(cross_count, 2.0 * math.pi / cross_count)).reshape(-1)
    # scale the unit cross-section to radius rho(t): volume factor rho^{N-1}
    pts = np.concatenate(
        [np.broadcast_to(t[:, None, None], (t.size, cross.shape[0], 1)),
         rho[:, None, None] * cross[None, :, :]], axis=2).reshape(-1, n)
    wts = (wt[:, None] * rho[:, None] ** (n - 1) * cross_w[None, :]).reshape(-1)
    return pts, wts, tuple(zip(t, wt)), tuple(zip(map(tuple, cross), cross_w))


def build_rule(params: KernelParams, axial_count: int = 32, cross_count: int = 32,
               scheme: str = "polar") -> QuadratureRule:
    """Quadrature rule for I^z_eps in the frame z = e_1.

    Weights are divided by gamma_{N,p} |B_1| and then renormalized to sum
    exactly to one; ``raw_mass`` keeps the pre-normalization total (which is
    1 up to quadrature error) for diagnostics.
    """
    if params.dim > 3:
        raise UnsupportedDimension("quadrature is implemented for N = 2 and N = 3 only")
    if axial_count < 4 or cross_count < 4:
        raise ValueError("node counts must be at least 4")
    if scheme == "polar":
        pts, wts, ax, cr = _polar_rule(params, axial_count, cross_count)
    elif scheme == "axial":
        pts, wts, ax, cr = _axial_rule(params, axial_count, cross_count)
    else:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    raw = wts / (params.gamma * ball_volume(params.dim))
    mass = float(raw.sum())
    pts = np.ascontiguousarray(pts)
    w = raw / mass
    pts.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(params.dim, params.p, scheme, pts, w, ax, cr, mass)


def _evaluate(u, pts: np.ndarray) -> np.ndarray:
    vals = np.asarray(u(pts), dtype=float)
    if vals.shape != (pts.shape[0],):
        vals = np.broadcast_to(vals, (pts.shape[0],))
    return vals


def apply(rule: QuadratureRule, u, x, z, params: KernelParams, correct: bool = True) -> float:
    """Quadrature value of I^z_eps u(x).

    ``u`` is a callable mapping an (n, N) array of points to n values, or a
    GridField.  Grid fields are averaged through a lattice stencil: the rule
    nodes are scattered multilinearly onto the lattice and (by default)
    moment corrected, see ``grid.field_stencil``.
    """
    z = unit(np.asarray(z, dtype=float))
    x = np.asarray(x, dtype=float)
    if x.size != rule.dim or z.size != rule.dim:
        raise UnsupportedDimension("point/direction dimension does not match the rule")
    pts = rule.nodes(x, z, params.eps)
    if isinstance(u, GridField):
        flat, w = field_stencil(u, x, pts, rule.weights, correct=correct)
        return float(w @ u.values.reshape(-1)[flat])
    return float(rule.weights @ _evaluate(u, pts))


def apply_many(rule: QuadratureRule, u: Callable, x, zs, eps: float) -> np.ndarray:
    """I^z_eps u(x) for a batch of directions zs (k, N), callable u only."""
    zs = np.atleast_2d(np.asarray(zs, dtype=float))
    x = np.asarray(x, dtype=float)
    out = np.empty(zs.shape[0])
    for k, z in enumerate(zs):
        out[k] = rule.weights @ _evaluate(u, rule.nodes(x, z, eps))
    return out


def interpolate(field_: GridField, x):
    from .grid import interpolate as _interp

    return _interp(field_, x)


def continuity_probe(field_, x, params: KernelParams, angle_pairs: Iterable, rule=None) -> float:
    """max |I^z u(x) - I^w u(x)| over the given (z, w) direction pairs.

    ``field_`` may be a GridField or a callable.  Empty input gives 0.
    """
    if rule is None:
        rule = build_rule(params)
    worst = 0.0
    cache: dict[tuple, float] = {}

    def value(d):
        key = tuple(np.round(np.asarray(d, dtype=float), 15))
        if key not in cache:
            cache[key] = apply(rule, field_, x, unit(d, tol=None), params)
        return cache[key]

    for z, w in angle_pairs:
        if np.array_equal(np.asarray(z, dtype=float), np.asarray(w, dtype=float)):
            continue
        worst = max(worst, abs(value(z) - value(w)))
    return worst


def angle_pairs_2d(delta: float, count: int = 64) -> list:
    """Pairs of directions at angular distance delta, spread over the circle."""
    out = []
    for k in range(count):
        a = 2.0 * math.pi * k / count
        out.append(((math.cos(a), math.sin(a)), (math.cos(a + delta), math.sin(a + delta))))
    return out


__all__ = [
    "Direction", "QuadratureRule", "SCHEMES", "angle_pairs_2d", "apply", "apply_many",
    "build_rule", "continuity_probe", "frame", "interpolate", "unit", "OutOfDomain",
]
