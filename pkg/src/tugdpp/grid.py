"""Domains, lattices and sampled fields.

A ``GridField`` lives on a uniform lattice covering Omega plus its collar.
Nodes are classified as interior (in Omega), collar (outside Omega but close
enough to be touched by some interior stencil) or exterior (never read).

Stencils
--------
Averages of a lattice field are computed by scattering a point cloud onto the
lattice with multilinear weights.  Multilinear interpolation reproduces affine
functions and mixed products x_i x_j exactly but overestimates every pure
square by s(1-s) dx^2.  That bias is O(dx^2) per average and, in a fixed point
iteration with eps^2 per step, grows to O(dx^2/eps^2) in the solution.
``moment_correct`` removes it: the scattered weights are reweighted by
(1 + P(m)) with P a quadratic polynomial in the lattice offset chosen so the
lattice measure has the same mass, mean and second moments as the point
cloud.  The correction is a few percent, so the weights stay nonnegative and
the averaging operator stays monotone.
"""

from __future__ import annotations

import csv
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, IoError, OutOfDomain, UnsupportedDimension

logger = logging.getLogger(__name__)

EXTERIOR, INTERIOR, COLLAR = 0, 1, 2
CLASS_NAMES = {EXTERIOR: "exterior", INTERIOR: "interior", COLLAR: "collar"}
CLASS_CODES = {v: k for k, v in CLASS_NAMES.items()}


@dataclass(frozen=True)
class DomainSpec:
    """Open domain Omega and step eps.

    ``shape`` is ``ball`` (center, radius), ``annulus`` (center, inner_radius,
    radius) or ``box`` (lower, upper corners).
    """

    shape: str
    eps: float
    dim: int = 2
    center: tuple[float, ...] | None = None
    radius: float = 1.0
    inner_radius: float = 0.0
    lower: tuple[float, ...] | None = None
    upper: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.shape not in ("ball", "annulus", "box"):
            raise ConfigError(f"unknown domain shape {self.shape!r}")
        if not self.eps > 0:
            raise ConfigError(f"eps must be positive, got {self.eps}")
        if self.center is None:
            object.__setattr__(self, "center", (0.0,) * self.dim)
        if len(self.center) != self.dim:
            raise ConfigError("center has the wrong dimension")
        if self.shape in ("ball", "annulus"):
            if not self.radius > 0:
                raise ConfigError("radius must be positive")
            if not self.eps < self.radius / 2:
                raise ConfigError(f"need eps < R/2, got eps={self.eps}, R={self.radius}")
        if self.shape == "annulus":
            if not 0 < self.inner_radius < self.radius:
                raise ConfigError("annulus needs 0 < inner_radius < radius")
        if self.shape == "box":
            if self.lower is None or self.upper is None:
                raise ConfigError("box domain needs lower and upper corners")
            if len(self.lower) != self.dim or len(self.upper) != self.dim:
                raise ConfigError("box corners have the wrong dimension")
            if any(u - lo <= 2 * self.eps for lo, u in zip(self.lower, self.upper)):
                raise ConfigError("box sides must exceed 2 eps")

    @classmethod
    def ball(cls, radius: float, eps: float, dim: int = 2, center=None) -> "DomainSpec":
        return cls("ball", eps, dim, None if center is None else tuple(center), radius)

    @classmethod
    def annulus(cls, inner: float, outer: float, eps: float, dim: int = 2, center=None):
        return cls("annulus", eps, dim, None if center is None else tuple(center), outer, inner)

    @classmethod
    def box(cls, lower, upper, eps: float) -> "DomainSpec":
        lower, upper = tuple(map(float, lower)), tuple(map(float, upper))
        center = tuple((a + b) / 2 for a, b in zip(lower, upper))
        return cls("box", eps, len(lower), center, lower=lower, upper=upper)

    def _radii(self, x: np.ndarray) -> np.ndarray:
        return np.linalg.norm(x - np.asarray(self.center), axis=-1)

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.shape == "box":
            return np.all((x > np.asarray(self.lower)) & (x < np.asarray(self.upper)), axis=-1)
        r = self._radii(x)
        inside = r < self.radius
        if self.shape == "annulus":
            inside &= r > self.inner_radius
        return inside

    def distance(self, x) -> np.ndarray:
        """Euclidean distance to Omega (zero inside)."""
        x = np.asarray(x, dtype=float)
        if self.shape == "box":
            lo, hi = np.asarray(self.lower), np.asarray(self.upper)
            d = np.maximum(np.maximum(lo - x, x - hi), 0.0)
            return np.linalg.norm(d, axis=-1)
        r = self._radii(x)
        d = np.maximum(r - self.radius, 0.0)
        if self.shape == "annulus":
            d = np.maximum(d, self.inner_radius - r)
        return d

    def bounding_box(self, pad: float) -> tuple[np.ndarray, np.ndarray]:
        if self.shape == "box":
            return np.asarray(self.lower) - pad, np.asarray(self.upper) + pad
        c = np.asarray(self.center)
        return c - self.radius - pad, c + self.radius + pad

    def project_to_collar(self, x: np.ndarray) -> np.ndarray:
        """Nearest point of the collar to points x inside Omega."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        tiny = 1e-12 * max(1.0, self.radius)
        if self.shape == "box":
            lo, hi = np.asarray(self.lower), np.asarray(self.upper)
            gaps = np.concatenate([x - lo, hi - x], axis=1)
            k = gaps.argmin(axis=1)
            out = x.copy()
            rows = np.arange(x.shape[0])
            axis = k % self.dim
            out[rows, axis] = np.where(k < self.dim, lo[axis] - tiny, hi[axis] + tiny)
            return out
        c = np.asarray(self.center)
        v = x - c
        r = np.linalg.norm(v, axis=1, keepdims=True)
        unit = np.where(r > 0, v / np.where(r > 0, r, 1.0), np.eye(self.dim)[0])
        target = np.full_like(r, self.radius + tiny)
        if self.shape == "annulus":
            inner_closer = (r - self.inner_radius) < (self.radius - r)
            target = np.where(inner_closer, self.inner_radius - tiny, target)
        return c + unit * target


@dataclass(frozen=True)
class Lattice:
    origin: np.ndarray
    spacing: float
    shape: tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.shape)

    def coords(self) -> np.ndarray:
        axes = [self.origin[i] + self.spacing * np.arange(n) for i, n in enumerate(self.shape)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1)


@dataclass(frozen=True, eq=False)
class GridField:
    """Real values on a uniform lattice with a per-node class label."""

    origin: np.ndarray
    spacing: float
    values: np.ndarray
    classes: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float))
        vals = np.array(self.values, dtype=float)
        cls_ = np.array(self.classes, dtype=np.int8)
        if vals.shape != cls_.shape or vals.ndim != self.origin.size:
            raise ValueError("values/classes/origin shapes disagree")
        vals.setflags(write=False)
        cls_.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "classes", cls_)

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def lattice(self) -> Lattice:
        return Lattice(self.origin, self.spacing, self.shape)

    @property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        upper = self.origin + self.spacing * (np.asarray(self.shape) - 1)
        return self.origin.copy(), upper

    def coords(self) -> np.ndarray:
        return self.lattice.coords()

    def node(self, index) -> np.ndarray:
        return self.origin + self.spacing * np.asarray(index, dtype=float)

    def interior_indices(self) -> np.ndarray:
        return np.argwhere(self.classes == INTERIOR)

    def with_values(self, values: np.ndarray, **meta) -> "GridField":
        return GridField(self.origin, self.spacing, values, self.classes, {**self.meta, **meta})

    def covered(self) -> np.ndarray:
        return self.classes != EXTERIOR

    def to_csv(self, path) -> None:
        """Write ``x1,...,xN,value,class``, one row per lattice node."""
        coords = self.coords().reshape(-1, self.dim)
        vals = self.values.reshape(-1)
        cls_ = self.classes.reshape(-1)
        header = [f"x{i + 1}" for i in range(self.dim)] + ["value", "class"]
        try:
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(header)
                for xyz, v, c in zip(coords, vals, cls_):
                    w.writerow([format(t, ".17g") for t in xyz] + [format(v, ".17g"), CLASS_NAMES[int(c)]])
        except OSError as exc:
            raise IoError(str(exc)) from exc

    @classmethod
    def from_csv(cls, path) -> "GridField":
        try:
            with open(path, newline="") as fh:
                rows = list(csv.reader(fh))
        except OSError as exc:
            raise IoError(str(exc)) from exc
        dim = len(rows[0]) - 2
        data = np.array([[float(t) for t in r[:dim + 1]] for r in rows[1:]])
        classes = np.array([CLASS_CODES[r[-1]] for r in rows[1:]], dtype=np.int8)
        axes = [np.unique(data[:, i]) for i in range(dim)]
        shape = tuple(a.size for a in axes)
        spacing = float(np.median(np.diff(axes[0])))
        origin = np.array([a[0] for a in axes])
        # rows were written in C order, so a reshape restores the lattice
        return cls(origin, spacing, data[:, dim].reshape(shape), classes.reshape(shape))


def build_lattice(domain: DomainSpec, dx: float, min_shape: int = 8) -> tuple[Lattice, np.ndarray]:
    """Lattice aligned with the domain center, plus node classes.

    Collar nodes are every node outside Omega within eps + sqrt(N) dx of it:
    that is the reach of a multilinear stencil around a point of the eps-ball
    of an interior node, so coverage holds by construction.
    """
    if not dx > 0:
        raise ConfigError("grid spacing must be positive")
    dim = domain.dim
    reach = domain.eps + math.sqrt(dim) * dx * (1 + 1e-9)
    lo, hi = domain.bounding_box(reach + dx)
    c = np.asarray(domain.center)
    n_lo = np.ceil((c - lo) / dx).astype(int)
    n_hi = np.ceil((hi - c) / dx).astype(int)
    shape = tuple(int(max(a + b + 1, min_shape)) for a, b in zip(n_lo, n_hi))
    origin = c - n_lo * dx
    lat = Lattice(origin, float(dx), shape)
    pts = lat.coords()
    classes = np.zeros(shape, dtype=np.int8)
    inside = domain.contains(pts)
    near = domain.distance(pts) < reach
    classes[near & ~inside] = COLLAR
    classes[inside] = INTERIOR
    if not inside.any():
        raise OutOfDomain("lattice has no interior nodes; refine grid.dx")
    return lat, classes


def sample_field(domain: DomainSpec, dx: float, func: Callable, lattice=None) -> GridField:
    """Sample ``func`` at interior and collar nodes; exterior values are NaN."""
    if lattice is None:
        lattice, classes = build_lattice(domain, dx)
    else:
        lattice, classes = lattice
    pts = lattice.coords()
    vals = np.full(lattice.shape, np.nan)
    mask = classes != EXTERIOR
    vals[mask] = np.asarray(func(pts[mask]), dtype=float)
    return GridField(lattice.origin, lattice.spacing, vals, classes)


# ---------------------------------------------------------------------------
# interpolation and stencils


def _cell_coords(field_: GridField, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    s = (x - field_.origin) / field_.spacing
    base = np.floor(s).astype(np.int64)
    frac = s - base
    # points sitting on the last node row interpolate from the cell below
    top = np.asarray(field_.shape) - 1
    on_top = base == top
    base = np.where(on_top, top - 1, base)
    frac = np.where(on_top, 1.0, frac)
    return base, frac


def _corner_offsets(dim: int) -> np.ndarray:
    return np.array(list(itertools.product((0, 1), repeat=dim)), dtype=np.int64)


def scatter_weights(field_: GridField, points: np.ndarray, weights: np.ndarray):
    """Multilinear scatter of a weighted point cloud onto lattice nodes.

    Returns (flat node indices, weights), merged and sorted by index.
    Raises OutOfDomain if any touched node is exterior or off the lattice.
    """
    points = np.atleast_2d(points)
    dim = field_.dim
    base, frac = _cell_coords(field_, points)
    shape = np.asarray(field_.shape)
    if np.any(base < 0) or np.any(base + 1 >= shape):
        raise OutOfDomain("stencil leaves the lattice")
    corners = _corner_offsets(dim)
    idx = base[:, None, :] + corners[None, :, :]
    w = np.prod(np.where(corners[None, :, :] == 1, frac[:, None, :], 1.0 - frac[:, None, :]), axis=2)
    w = w * weights[:, None]
    flat = np.ravel_multi_index(tuple(idx.reshape(-1, dim).T), field_.shape)
    w = w.reshape(-1)
    uniq, inv = np.unique(flat, return_inverse=True)
    merged = np.bincount(inv, weights=w)
    keep = merged != 0.0
    uniq, merged = uniq[keep], merged[keep]
    if np.any(field_.classes.reshape(-1)[uniq] == EXTERIOR):
        raise OutOfDomain("stencil touches exterior nodes")
    return uniq, merged


def _quadratic_basis(m: np.ndarray) -> np.ndarray:
    dim = m.shape[1]
    cols = [np.ones(m.shape[0])]
    cols += [m[:, i] for i in range(dim)]
    cols += [m[:, i] * m[:, j] for i in range(dim) for j in range(i, dim)]
    return np.stack(cols, axis=1)


def moment_correct(offsets: np.ndarray, weights: np.ndarray, target: np.ndarray) -> np.ndarray | None:
    """Tilt lattice weights by (1 + P(offset)) to hit ``target`` moments.

    ``offsets`` are node positions relative to the evaluation point in units
    of dx, ``target`` the moments (1, mean, upper-triangular second moments)
    of the continuous point cloud in the same units.  Returns None if the
    tilt would create a negative weight.
    """
    basis = _quadratic_basis(offsets)
    current = basis.T @ weights
    gram = (basis * weights[:, None]).T @ basis
    try:
        coef = np.linalg.solve(gram, target - current)
    except np.linalg.LinAlgError:
        return None
    factor = 1.0 + basis @ coef
    if np.any(factor < 0):
        return None
    return weights * factor


def cloud_moments(rel_points: np.ndarray, weights: np.ndarray) -> np.ndarray:
    return _quadratic_basis(rel_points).T @ weights


def unit_stencil(rel_points: np.ndarray, weights: np.ndarray, correct: bool = True):
    """Scatter a weighted cloud given in lattice units onto integer offsets.

    Returns (offsets (k, N) int, weights (k,)).  With ``correct`` the weights
    are moment corrected; if that fails the plain multilinear weights are
    returned and ``ok`` is False in the third slot.
    """
    rel_points = np.atleast_2d(rel_points)
    dim = rel_points.shape[1]
    base = np.floor(rel_points).astype(np.int64)
    frac = rel_points - base
    corners = _corner_offsets(dim)
    idx = (base[:, None, :] + corners[None]).reshape(-1, dim)
    w = np.prod(np.where(corners[None] == 1, frac[:, None, :], 1.0 - frac[:, None, :]), axis=2)
    w = (w * weights[:, None]).reshape(-1)
    offsets, inv = np.unique(idx, axis=0, return_inverse=True)
    merged = np.bincount(inv.reshape(-1), weights=w)
    keep = merged != 0.0
    offsets, merged = offsets[keep], merged[keep]
    ok = True
    if correct:
        fixed = moment_correct(offsets.astype(float), merged, cloud_moments(rel_points, weights))
        if fixed is None:
            ok = False
        else:
            merged = fixed
    return offsets, merged, ok


def field_stencil(field_: GridField, x: np.ndarray, points: np.ndarray, weights: np.ndarray,
                  correct: bool = True):
    """Flat node indices and weights averaging the field over a point cloud."""
    if not correct:
        return scatter_weights(field_, points, weights)
    x = np.asarray(x, dtype=float)
    anchor = np.floor((x - field_.origin) / field_.spacing).astype(np.int64)
    rel = (points - field_.origin) / field_.spacing - anchor
    offsets, w, ok = unit_stencil(rel, weights, correct=True)
    if not ok:
        logger.warning("moment correction would break positivity; using plain multilinear weights")
    nodes = offsets + anchor
    shape = np.asarray(field_.shape)
    if np.any(nodes < 0) or np.any(nodes >= shape):
        raise OutOfDomain("stencil leaves the lattice")
    flat = np.ravel_multi_index(tuple(nodes.T), field_.shape)
    if np.any(field_.classes.reshape(-1)[flat] == EXTERIOR):
        raise OutOfDomain("stencil touches exterior nodes")
    return flat, w


def interpolate(field_: GridField, x) -> np.ndarray | float:
    """Multilinear interpolation at one point (N,) or many points (n, N)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if pts.shape[1] != field_.dim:
        raise UnsupportedDimension("point dimension does not match field")
    base, frac = _cell_coords(field_, pts)
    shape = np.asarray(field_.shape)
    if np.any(base < 0) or np.any(base + 1 >= shape):
        raise OutOfDomain("point outside the lattice")
    corners = _corner_offsets(field_.dim)
    idx = base[:, None, :] + corners[None, :, :]
    w = np.prod(np.where(corners[None] == 1, frac[:, None, :], 1.0 - frac[:, None, :]), axis=2)
    tup = tuple(idx[..., k] for k in range(field_.dim))
    vals = field_.values[tup]
    touched = (w > 0)
    if np.any(field_.classes[tup][touched] == EXTERIOR):
        raise OutOfDomain("interpolation touches exterior nodes")
    out = np.sum(np.where(touched, w * np.nan_to_num(vals), 0.0), axis=1)
    return float(out[0]) if single else out
