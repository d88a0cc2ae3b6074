"""Pucci-type extremal operators and the extremal inequalities of DPP solutions.

    L^+ u(x) = (alpha sup_{h in B_Lambda} du(x, eps h) + beta avg_{B_1} du(x, eps h)) / (2 eps^2)
    L^- u(x) = (alpha inf_{h in B_Lambda} du(x, eps h) + beta avg_{B_1} du(x, eps h)) / (2 eps^2)

with du(x, eps h) = u(x + eps h) + u(x - eps h) - 2 u(x).  A DPP solution with
1 < p <= 2 satisfies L^+ u + f >= 0 >= L^- u + f when beta = 1/(2 gamma_{N,p}):
the symmetrized kernel |z.h|^{p-2} / (2 gamma) is then beta times the uniform
density plus alpha times a probability density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import qmc

from .averaging import apply, build_rule
from .errors import DegenerateDecomposition, ExponentOutOfRange
from .grid import INTERIOR, GridField, interpolate
from .kernel import KernelParams

SLACK = 1e-6


@dataclass(frozen=True)
class ExtremalParams:
    alpha: float
    beta: float
    Lambda: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError(f"alpha must lie in [0, 1), got {self.alpha}")
        if abs(self.alpha + self.beta - 1.0) > 1e-12:
            raise ValueError("alpha + beta must equal 1")
        if self.Lambda < 1.0:
            raise ValueError("Lambda must be at least 1")

    @classmethod
    def from_beta(cls, beta: float, Lambda: float = 1.0) -> "ExtremalParams":
        return cls(1.0 - beta, beta, Lambda)

    @classmethod
    def for_kernel(cls, kernel: KernelParams, Lambda: float = 1.0) -> "ExtremalParams":
        """beta = 1/(2 gamma_{N,p}); only a valid mixture for 1 < p <= 2."""
        if kernel.p > 2.0:
            raise ExponentOutOfRange(
                f"p = {kernel.p} > 2: the kernel density vanishes on z.h = 0, so it is not a "
                "convex combination of the uniform density and a probability measure and the "
                "extremal inequalities do not hold")
        return cls.from_beta(kernel.beta, Lambda)


def _values(u, pts: np.ndarray) -> np.ndarray:
    if isinstance(u, GridField):
        return np.asarray(interpolate(u, pts))
    return np.asarray(u(pts), dtype=float)


def second_difference(u, x, h, eps: float) -> np.ndarray | float:
    """u(x + eps h) + u(x - eps h) - 2 u(x) for one h (N,) or many (n, N)."""
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)
    single = h.ndim == 1
    hh = np.atleast_2d(h)
    plus = _values(u, x + eps * hh)
    minus = _values(u, x - eps * hh)
    centre = _values(u, x[None, :])[0]
    out = plus + minus - 2.0 * centre
    return float(out[0]) if single else out


@lru_cache(maxsize=16)
def _ball_samples(dim: int, count: int) -> np.ndarray:
    """Deterministic Halton points in B_1 plus the center."""
    sampler = qmc.Halton(d=dim, scramble=False)
    pts = np.empty((0, dim))
    while pts.shape[0] < count:
        cand = 2.0 * sampler.random(2 * count) - 1.0
        cand = cand[np.einsum("ij,ij->i", cand, cand) < 1.0]
        pts = np.vstack([pts, cand])
    pts = np.vstack([np.zeros((1, dim)), pts[: count - 1]])
    pts.setflags(write=False)
    return pts


def extreme_second_difference(u, x, eps: float, Lambda: float = 1.0, maximize: bool = True,
                              samples: int = 4096, refine_tol: float = 1e-6):
    """sup (or inf) of du(x, eps h) over h in the open ball B_Lambda.

    Low-discrepancy scan (h = 0 included, which realizes the open-ball limit
    for fields with a strict local extremum) followed by a compass search
    around the best candidates.  Returns (value, h).
    """
    x = np.asarray(x, dtype=float)
    dim = x.size
    sign = 1.0 if maximize else -1.0
    pts = Lambda * _ball_samples(dim, samples)
    vals = sign * second_difference(u, x, pts, eps)
    order = np.argsort(-vals, kind="stable")[:4]
    limit = Lambda * (1.0 - 1e-12)
    best_v, best_h = vals[order[0]], pts[order[0]]
    step0 = Lambda * (math.gamma(dim / 2 + 1) ** (-1 / dim)) * samples ** (-1.0 / dim)
    moves = np.concatenate([np.eye(dim), -np.eye(dim)])
    for k in order:
        h = pts[k].copy()
        v = vals[k]
        step = step0
        while step > refine_tol * Lambda:
            cand = h + step * moves
            norms = np.linalg.norm(cand, axis=1)
            cand = np.where(norms[:, None] > limit, cand * (limit / np.maximum(norms, 1e-300))[:, None], cand)
            cv = sign * second_difference(u, x, cand, eps)
            j = int(np.argmax(cv))
            if cv[j] > v:
                h, v = cand[j], cv[j]
            else:
                step *= 0.5
        if v > best_v:
            best_v, best_h = v, h
    return sign * float(best_v), best_h


@lru_cache(maxsize=8)
def _uniform_rule(dim: int, axial: int, cross: int):
    return build_rule(KernelParams(dim, 2.0), axial, cross)


def mean_second_difference(u, x, eps: float, axial: int = 32, cross: int | None = None) -> float:
    """avg_{B_1} du(x, eps h) = I^z_{p=2} u + I^{-z}_{p=2} u - 2 u(x)."""
    x = np.asarray(x, dtype=float)
    dim = x.size
    rule = _uniform_rule(dim, axial, cross if cross is not None else (32 if dim == 2 else 16))
    params = KernelParams(dim, 2.0, eps)
    e1 = np.eye(dim)[0]
    centre = _values(u, x[None, :])[0]
    return apply(rule, u, x, e1, params) + apply(rule, u, x, -e1, params) - 2.0 * centre


def _pucci(u, x, params: ExtremalParams, kernel: KernelParams, maximize: bool, samples: int) -> float:
    eps = kernel.eps
    ext, _ = extreme_second_difference(u, x, eps, params.Lambda, maximize, samples)
    mean = mean_second_difference(u, x, eps)
    return (params.alpha * ext + params.beta * mean) / (2.0 * eps * eps)


def pucci_plus(u, x, params: ExtremalParams, kernel: KernelParams, samples: int = 4096) -> float:
    return _pucci(u, x, params, kernel, True, samples)


def pucci_minus(u, x, params: ExtremalParams, kernel: KernelParams, samples: int = 4096) -> float:
    return _pucci(u, x, params, kernel, False, samples)


@dataclass(frozen=True)
class ExtremalReport:
    points: np.ndarray
    Lplus: np.ndarray
    Lminus: np.ndarray
    f: np.ndarray
    slack: float
    alpha: float
    beta: float

    @property
    def margin_plus(self) -> np.ndarray:
        """L^+ u + f, which should be >= 0."""
        return self.Lplus + self.f

    @property
    def margin_minus(self) -> np.ndarray:
        """-(L^- u + f), which should be >= 0."""
        return -(self.Lminus + self.f)

    @property
    def worst_plus(self) -> float:
        return float(self.margin_plus.min())

    @property
    def worst_minus(self) -> float:
        return float(self.margin_minus.min())

    @property
    def ok(self) -> bool:
        return self.worst_plus >= -self.slack and self.worst_minus >= -self.slack

    def rows(self) -> list[dict]:
        out = []
        for i in range(self.points.shape[0]):
            row = {f"x{j + 1}": float(self.points[i, j]) for j in range(self.points.shape[1])}
            row.update(Lplus=float(self.Lplus[i]), Lminus=float(self.Lminus[i]), f=float(self.f[i]),
                       margin_plus=float(self.margin_plus[i]), margin_minus=float(self.margin_minus[i]))
            out.append(row)
        return out


def sample_interior_nodes(field_: GridField, count: int, seed: int = 0, margin: float = 0.0) -> np.ndarray:
    """``count`` distinct interior lattice nodes chosen with a seeded generator."""
    idx = field_.interior_indices()
    pts = field_.origin + field_.spacing * idx
    if margin > 0:
        from scipy.ndimage import distance_transform_edt

        dist = distance_transform_edt(field_.classes == INTERIOR) * field_.spacing
        pts = pts[dist[tuple(idx.T)] > margin]
    rng = np.random.default_rng(seed)
    take = rng.choice(pts.shape[0], size=min(count, pts.shape[0]), replace=False)
    return pts[np.sort(take)]


def verify_extremal_inequalities(solution: GridField, problem, sample_nodes, seed: int = 0,
                                 slack: float = SLACK, samples: int = 4096) -> ExtremalReport:
    """Evaluate L^+ u + f >= 0 and L^- u + f <= 0 at interior nodes.

    ``sample_nodes`` is a count (nodes drawn with ``seed``) or an (n, N)
    array of points.
    """
    kernel = problem.params
    params = ExtremalParams.for_kernel(kernel)
    if np.isscalar(sample_nodes):
        pts = sample_interior_nodes(solution, int(sample_nodes), seed)
    else:
        pts = np.atleast_2d(np.asarray(sample_nodes, dtype=float))
    lp = np.array([pucci_plus(solution, x, params, kernel, samples) for x in pts])
    lm = np.array([pucci_minus(solution, x, params, kernel, samples) for x in pts])
    fv = np.asarray(problem.f(pts), dtype=float)
    return ExtremalReport(pts, lp, lm, fv, slack, params.alpha, params.beta)


def decomposition_density(p: float, N: int, z, h, beta: float | None = None):
    """Density of nu in |z.h|^{p-2}/(2 gamma) = beta + (1 - beta) nu.

    With the default beta = 1/(2 gamma_{N,p}) this is
    (|z.h|^{p-2} - 1) / (2 gamma_{N,p} - 1).  Any other beta in (0, 1) can be
    passed to probe whether some convex mixture exists.
    """
    kernel = KernelParams(N, p)
    two_gamma = 2.0 * kernel.gamma
    z = np.asarray(z, dtype=float)
    h = np.asarray(h, dtype=float)
    t = np.abs(h @ z)
    with np.errstate(divide="ignore"):
        w = t ** (p - 2.0)
    if beta is None:
        if abs(two_gamma - 1.0) < 1e-14:
            raise DegenerateDecomposition("p = 2: gamma = 1/2 and the decomposition is degenerate")
        return (w - 1.0) / (two_gamma - 1.0)
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    return (w / two_gamma - beta) / (1.0 - beta)


@dataclass(frozen=True)
class DecompositionCheck:
    p: float
    dim: int
    beta_kernel: float
    alpha_kernel: float
    min_density: float
    max_density: float
    betas: tuple
    sign_change_for_all_betas: bool

    @property
    def convex_mixture_exists(self) -> bool:
        return self.alpha_kernel >= 0.0 and self.min_density >= 0.0


def decomposition_check(p: float, N: int, samples: int = 20000, seed: int = 0,
                        betas=(0.05, 0.25, 0.5, 0.75, 0.95)) -> DecompositionCheck:
    """Scan the nu density on random (z, h) and a ladder of beta values.

    For 1 < p < 2 the kernel beta = 1/(2 gamma) lies in (0, 1) and the
    density is nonnegative.  For p > 2 the kernel beta exceeds 1 (negative
    alpha), and for every beta in (0, 1) the density takes both signs:
    negative near z.h = 0 where the kernel vanishes, positive near |z.h| = 1.
    """
    kernel = KernelParams(N, p)
    rng = np.random.default_rng(seed)
    h = rng.normal(size=(samples, N))
    h *= (rng.uniform(size=(samples, 1)) ** (1.0 / N)) / np.linalg.norm(h, axis=1, keepdims=True)
    z = np.eye(N)[0]
    # include the two extreme configurations explicitly
    h = np.vstack([h, np.eye(N)[1] * 0.5, z * (1.0 - 1e-12)])
    if abs(p - 2.0) < 1e-14:
        dens = np.zeros(1)
    else:
        dens = decomposition_density(p, N, z, h)
    flags = []
    for b in betas:
        d = decomposition_density(p, N, z, h, beta=b)
        d = d[np.isfinite(d)]
        flags.append(bool(d.min() < 0.0 < d.max()))
    finite = dens[np.isfinite(dens)]
    return DecompositionCheck(
        p=p, dim=N, beta_kernel=kernel.beta, alpha_kernel=1.0 - kernel.beta,
        min_density=float(finite.min()), max_density=float(finite.max()),
        betas=tuple(betas), sign_change_for_all_betas=all(flags))
