"""Fixed-point solver for the tug-of-war DPP on a lattice.

    u(x) = 1/2 (sup_z I^z u(x) + inf_z I^z u(x)) + eps^2 f(x)   in Omega
    u    = g                                                    on the collar

Every interior node uses the same family of lattice stencils, one per
direction of a symmetric direction bank (z and -z are both present).  With x
on a node the stencil of I^z is translation invariant, so a whole sweep is M
correlations of the field with small kernels, done with FFTs.  The kernels
stay inside the lattice for every interior node (the collar is wide enough),
so the periodic wrap of the FFT never reaches a value that is read.

Two iterations are available.  ``value`` is the plain Jacobi fixed-point
sweep; started from the explicit subsolution it is nondecreasing.  ``policy``
freezes the maximizing and minimizing directions, solves the resulting linear
system with a Krylov method and repeats until the directions stop changing
(a semismooth Newton step).  Both stop on the same sup-norm residual of one
Jacobi sweep, so their answers are interchangeable.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.fft as sfft
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .averaging import QuadratureRule, build_rule, frame, unit
from .errors import ConfigError, MismatchedProblems, NotConverged, OutOfDomain
from .grid import COLLAR, EXTERIOR, INTERIOR, DomainSpec, GridField, build_lattice, unit_stencil
from .kernel import KernelParams

logger = logging.getLogger(__name__)

METHODS = ("value", "policy")
INITS = ("subsolution", "g-extension")


def _zero(x):
    return np.zeros(np.atleast_2d(x).shape[0])


def _as_function(value) -> Callable:
    if callable(value):
        return value
    c = float(value)
    return lambda x: np.full(np.atleast_2d(x).shape[0], c)


@dataclass(frozen=True)
class SearchConfig:
    """Direction search: bank size and refinement tolerance (radians)."""

    coarse: int | None = None
    tol: float = 1e-8

    def bank_size(self, dim: int) -> int:
        m = self.coarse if self.coarse is not None else (64 if dim == 2 else 256)
        if m < 4:
            raise ConfigError("search.coarse must be at least 4")
        return m


@dataclass(frozen=True, eq=False)
class DppProblem:
    """Domain, exponent, data and numerical settings of one DPP solve.

    ``f`` and ``g`` map an (n, N) array of points to n values (numbers are
    accepted as constants).  ``dx`` defaults to eps/8 and ``tol`` to
    1e-9 max(1, sup|g|) with the sup taken over collar nodes.
    """

    domain: DomainSpec
    p: float
    f: Callable | float = 0.0
    g: Callable | float = 0.0
    dx: float | None = None
    tol: float | None = None
    max_iter: int = 100_000
    search: SearchConfig = field(default_factory=SearchConfig)
    axial_count: int = 32
    cross_count: int = 32
    method: str = "value"
    init: str = "subsolution"
    moment_correct: bool = True
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "f", _as_function(self.f))
        object.__setattr__(self, "g", _as_function(self.g))
        if self.method not in METHODS:
            raise ConfigError(f"solver.method must be one of {METHODS}")
        if self.init not in INITS:
            raise ConfigError(f"solver.init must be one of {INITS}")
        if self.max_iter < 1:
            raise ConfigError("solver.max_iter must be positive")
        if self.tol is not None and not self.tol > 0:
            raise ConfigError("solver.tol must be positive")
        if self.dx is not None and self.dx > self.domain.eps / 4 * (1 + 1e-12):
            raise ConfigError("grid.dx must not exceed eps/4")
        self.params  # validates p and dim

    @property
    def eps(self) -> float:
        return self.domain.eps

    @property
    def dim(self) -> int:
        return self.domain.dim

    @cached_property
    def params(self) -> KernelParams:
        return KernelParams(self.domain.dim, self.p, self.domain.eps)

    @property
    def spacing(self) -> float:
        return self.dx if self.dx is not None else self.domain.eps / 8

    @cached_property
    def rule(self) -> QuadratureRule:
        return build_rule(self.params, self.axial_count, self.cross_count)

    @cached_property
    def disc(self) -> "Discretization":
        return Discretization(self)

    def same_setup(self, other: "DppProblem") -> bool:
        return (self.domain == other.domain and self.p == other.p and self.spacing == other.spacing
                and self.search == other.search and self.axial_count == other.axial_count
                and self.cross_count == other.cross_count and self.moment_correct == other.moment_correct)

    def with_changes(self, **kw) -> "DppProblem":
        names = ("domain", "p", "f", "g", "dx", "tol", "max_iter", "search", "axial_count",
                 "cross_count", "method", "init", "moment_correct", "labels")
        args = {n: getattr(self, n) for n in names}
        args.update(kw)
        return DppProblem(**args)


def direction_bank(dim: int, count: int) -> np.ndarray:
    """Symmetric set of unit vectors: the circle split evenly (2D) or a
    Fibonacci half-sphere together with its antipodes (3D)."""
    if dim == 2:
        if count % 2:
            count += 1
        th = 2.0 * math.pi * np.arange(count) / count
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    half = (count + 1) // 2
    k = np.arange(half) + 0.5
    zc = k / half  # in (0, 1): upper half sphere
    phi = math.pi * (3.0 - math.sqrt(5.0)) * np.arange(half)
    s = np.sqrt(1.0 - zc * zc)
    up = np.stack([s * np.cos(phi), s * np.sin(phi), zc], axis=1)
    return np.concatenate([up, -up])


class Discretization:
    """Lattice, stencil bank and data samples shared by all solves of a problem."""

    def __init__(self, problem: DppProblem):
        t0 = time.perf_counter()
        self.problem = problem
        dom = problem.domain
        self.lattice, self.classes = build_lattice(dom, problem.spacing)
        self.shape = self.lattice.shape
        self.coords = self.lattice.coords()
        self.interior = self.classes == INTERIOR
        self.collar = self.classes == COLLAR
        self.bank = direction_bank(dom.dim, problem.search.bank_size(dom.dim))
        rule = problem.rule
        reach = int(math.ceil(dom.eps / problem.spacing)) + 1
        self.reach = reach
        self.kernels = []
        ok_all = True
        for z in self.bank:
            rel = dom.eps * rule.points @ frame(z).T / problem.spacing
            offs, w, ok = unit_stencil(rel, rule.weights, correct=problem.moment_correct)
            ok_all &= ok
            self.kernels.append((offs, w))
        if not ok_all:
            logger.warning("moment correction failed for some directions; plain weights used there")
        self._check_coverage()
        self.f_values = np.zeros(self.shape)
        self.f_values[self.interior] = problem.f(self.coords[self.interior])
        self.g_values = np.zeros(self.shape)
        self.g_values[self.collar] = problem.g(self.coords[self.collar])
        for name, arr in (("f", self.f_values), ("g", self.g_values)):
            if not np.all(np.isfinite(arr)):
                raise ConfigError(f"{name} is not finite on the lattice")
        self.interior_flat = np.flatnonzero(self.interior)
        self.setup_seconds = time.perf_counter() - t0

    def _check_coverage(self):
        idx = np.argwhere(self.interior)
        lo = idx.min(axis=0)
        hi = idx.max(axis=0)
        shape = np.asarray(self.shape)
        max_off = max(int(np.abs(o).max()) for o, _ in self.kernels)
        if np.any(lo - max_off < 0) or np.any(hi + max_off >= shape):
            raise OutOfDomain("stencils leave the lattice; collar too thin")
        # every node read by an interior stencil must be interior or collar
        reachable = np.zeros(self.shape, dtype=bool)
        union = np.unique(np.concatenate([o for o, _ in self.kernels]), axis=0)
        for off in union:
            reachable |= np.roll(self.interior, shift=tuple(off), axis=tuple(range(len(self.shape))))
        if np.any(reachable & (self.classes == EXTERIOR)):
            raise OutOfDomain("an interior stencil reads an exterior node")

    @cached_property
    def fft_shape(self) -> tuple[int, ...]:
        # zero padding to FFT-friendly sizes; reads never wrap, so any size
        # at least the lattice shape gives the same correlations
        return tuple(sfft.next_fast_len(n, real=True) for n in self.shape)

    @cached_property
    def spectra(self) -> np.ndarray:
        fs = self.fft_shape
        arr = np.zeros((len(self.kernels),) + fs)
        for k, (offs, w) in enumerate(self.kernels):
            idx = tuple(((-offs[:, d]) % fs[d]) for d in range(offs.shape[1]))
            np.add.at(arr[k], idx, w)
        axes = tuple(range(1, arr.ndim))
        return sfft.rfftn(arr, axes=axes)

    @cached_property
    def _gather_index(self) -> np.ndarray:
        idx = np.unravel_index(self.interior_flat, self.shape)
        return np.ravel_multi_index(idx, self.fft_shape)

    def correlate_all(self, u: np.ndarray) -> np.ndarray:
        """I^{z_k} u at interior nodes for every bank direction, shape (M, n_int)."""
        axes = tuple(range(1, u.ndim + 1))
        spec = sfft.rfftn(u, s=self.fft_shape)
        full = sfft.irfftn(self.spectra * spec[None], s=self.fft_shape, axes=axes, overwrite_x=True)
        return full.reshape(full.shape[0], -1)[:, self._gather_index]

    def flat_offsets(self, offs: np.ndarray) -> np.ndarray:
        strides = np.array([int(np.prod(self.shape[d + 1:])) for d in range(len(self.shape))])
        return offs @ strides

    def policy_matrix(self, a_idx: np.ndarray, b_idx: np.ndarray) -> sp.csr_matrix:
        """Sparse (n_int x n_nodes) matrix of 1/2 (I^{z_a} + I^{z_b}) for a frozen policy."""
        n_int = self.interior_flat.size
        rows, cols, vals = [], [], []
        for choice in (a_idx, b_idx):
            for k in np.unique(choice):
                sel = np.flatnonzero(choice == k)
                offs, w = self.kernels[k]
                fo = self.flat_offsets(offs)
                rows.append(np.repeat(sel, fo.size))
                cols.append((self.interior_flat[sel][:, None] + fo[None, :]).reshape(-1))
                vals.append(np.tile(0.5 * w, sel.size))
        mat = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                            shape=(n_int, int(np.prod(self.shape))))
        return mat

    def field(self, values: np.ndarray, **meta) -> GridField:
        out = np.where(self.classes == EXTERIOR, np.nan, values)
        return GridField(self.lattice.origin, self.lattice.spacing, out, self.classes, meta)


@dataclass(frozen=True, eq=False)
class SolveReport:
    solution: GridField
    iterations: int
    residual_history: list
    final_residual: float
    apriori_bound_ok: bool
    monotone_ok: bool
    converged: bool
    tol: float
    method: str
    init: str
    apriori_bound: float
    seconds: float
    policy_max: np.ndarray | None = None
    policy_min: np.ndarray | None = None
    bank: np.ndarray | None = None
    problem: DppProblem | None = None
    linear_iterations: int = 0

    def summary(self) -> dict:
        return {
            "iterations": self.iterations,
            "final_residual": self.final_residual,
            "tol": self.tol,
            "converged": self.converged,
            "apriori_bound_ok": self.apriori_bound_ok,
            "apriori_bound": self.apriori_bound,
            "monotone_ok": self.monotone_ok,
            "method": self.method,
            "init": self.init,
            "linear_iterations": self.linear_iterations,
            "residual_history": list(self.residual_history),
        }


# ---------------------------------------------------------------------------
# pointwise right-hand side with continuous direction search


def _golden_max(fun, a: float, b: float, tol: float) -> tuple[float, float]:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    t = 0.5 * (a + b)
    return t, fun(t)


def _sphere(theta: float, phi: float) -> np.ndarray:
    s = math.sin(theta)
    return np.array([s * math.cos(phi), s * math.sin(phi), math.cos(theta)])


def _angles(z: np.ndarray) -> tuple[float, float]:
    return math.acos(max(-1.0, min(1.0, z[2]))), math.atan2(z[1], z[0])


def _refine_3d(fun, z0: np.ndarray, step: float, tol: float) -> tuple[np.ndarray, float]:
    """Compass search in spherical coordinates, halving the step on failure."""
    th, ph = _angles(z0)
    best = fun(_sphere(th, ph))
    while step > tol:
        moved = False
        for dth, dph in ((step, 0), (-step, 0), (0, step), (0, -step)):
            s = max(math.sin(th), 1e-3)
            cand = (th + dth, ph + dph / s)
            val = fun(_sphere(*cand))
            if val > best:
                th, ph, best, moved = cand[0], cand[1], val, True
                break
        if not moved:
            step *= 0.5
    return _sphere(th, ph), best


def direction_search(value_of: Callable[[np.ndarray], float], dim: int, search: SearchConfig,
                     maximize: bool = True) -> tuple[np.ndarray, float]:
    """Optimize a continuous function of |z| = 1 by bank scan plus refinement.

    The first bank candidate wins ties before refinement.
    """
    sign = 1.0 if maximize else -1.0
    bank = direction_bank(dim, search.bank_size(dim))
    vals = np.array([sign * value_of(z) for z in bank])
    k = int(np.argmax(vals))
    if dim == 2:
        h = 2.0 * math.pi / bank.shape[0]
        th0 = math.atan2(bank[k, 1], bank[k, 0])
        fun = lambda t: sign * value_of(np.array([math.cos(t), math.sin(t)]))
        t, v = _golden_max(fun, th0 - h, th0 + h, search.tol)
        if v < vals[k]:
            t, v = th0, vals[k]
        return np.array([math.cos(t), math.sin(t)]), sign * v
    step = math.sqrt(4.0 * math.pi / bank.shape[0])
    z, v = _refine_3d(lambda zz: sign * value_of(zz), bank[k], step, search.tol)
    if v < vals[k]:
        z, v = bank[k], vals[k]
    return z, sign * v


def _avg_value(problem: DppProblem, u, x: np.ndarray, z: np.ndarray) -> float:
    from .averaging import apply

    return apply(problem.rule, u, x, z, problem.params, correct=problem.moment_correct)


def dpp_rhs(u, x, problem: DppProblem):
    """(1/2)(sup_z I^z u(x) + inf_z I^z u(x)) + eps^2 f(x), with the optimizers.

    ``u`` is a GridField or a callable.  Returns (value, argmax_z, argmin_z).
    """
    x = np.asarray(x, dtype=float)
    if not problem.domain.contains(x):
        raise OutOfDomain("dpp_rhs needs an interior point")
    val = lambda z: _avg_value(problem, u, x, z)
    zmax, vmax = direction_search(val, problem.dim, problem.search, maximize=True)
    zmin, vmin = direction_search(val, problem.dim, problem.search, maximize=False)
    fx = float(problem.f(x[None, :])[0])
    return 0.5 * (vmax + vmin) + problem.eps**2 * fx, zmax, zmin


# ---------------------------------------------------------------------------
# initialization and bounds


def _radius_sq(problem: DppProblem, coords: np.ndarray) -> np.ndarray:
    return np.sum((coords - np.asarray(problem.domain.center)) ** 2, axis=-1)


def subsolution_constant(problem: DppProblem) -> float:
    d = problem.disc
    fsup = float(np.abs(d.f_values[d.interior]).max(initial=0.0))
    gsup = float(np.abs(d.g_values[d.collar]).max(initial=0.0))
    return 3.0 * (fsup + gsup / problem.eps**2)


def initial_subsolution(problem: DppProblem) -> GridField:
    """C(|x - c|^2 - R^2) + eps^2 f in Omega, g on the collar.

    C = 3 (sup|f| + sup|g| / eps^2) and R is the largest |x - c| over the
    interior and collar nodes, c the domain center.
    """
    d = problem.disc
    C = subsolution_constant(problem)
    r2 = _radius_sq(problem, d.coords)
    R2 = float(r2[d.interior | d.collar].max())
    u = np.where(d.interior, C * (r2 - R2) + problem.eps**2 * d.f_values, d.g_values)
    return d.field(u, kind="subsolution", C=C, R=math.sqrt(R2))


def g_extension(problem: DppProblem) -> GridField:
    d = problem.disc
    u = d.g_values.copy()
    u[d.interior] = problem.g(d.coords[d.interior])
    return d.field(u, kind="g-extension")


def apriori_bound(problem: DppProblem) -> float:
    """sup|g| + 2^{2k+1} eps^2 sup|f| with k = ceil(4 sup|x - c|^2 / eps^2)."""
    d = problem.disc
    fsup = float(np.abs(d.f_values[d.interior]).max(initial=0.0))
    gsup = float(np.abs(d.g_values[d.collar]).max(initial=0.0))
    if fsup == 0.0:
        return gsup
    sup_r2 = float(_radius_sq(problem, d.coords)[d.interior | d.collar].max())
    k = math.ceil(4.0 * sup_r2 / problem.eps**2)
    try:
        return gsup + math.ldexp(problem.eps**2 * fsup, 2 * k + 1)
    except OverflowError:
        return math.inf


def default_tol(problem: DppProblem) -> float:
    if problem.tol is not None:
        return problem.tol
    d = problem.disc
    gsup = float(np.abs(d.g_values[d.collar]).max(initial=0.0))
    return 1e-9 * max(1.0, gsup)


# ---------------------------------------------------------------------------
# iterations


def _sweep(d: Discretization, u: np.ndarray, eps2f: np.ndarray):
    vals = d.correlate_all(u)
    kmax = np.argmax(vals, axis=0)
    kmin = np.argmin(vals, axis=0)
    cols = np.arange(vals.shape[1])
    new = 0.5 * (vals[kmax, cols] + vals[kmin, cols]) + eps2f
    return new, kmax, kmin


def _value_iteration(problem, d, u, tol, max_iter, history):
    eps2f = problem.eps**2 * d.f_values.reshape(-1)[d.interior_flat]
    flat = u.reshape(-1)
    monotone = True
    kmax = kmin = None
    it = 0
    res = math.inf
    while it < max_iter:
        new, kmax, kmin = _sweep(d, u, eps2f)
        diff = new - flat[d.interior_flat]
        res = float(np.abs(diff).max())
        monotone &= bool(diff.min() >= -1e-10)
        flat[d.interior_flat] = new
        it += 1
        history.append(res)
        if res <= tol:
            break
    return it, res, monotone, kmax, kmin, 0


def _policy_iteration(problem, d, u, tol, max_iter, history):
    eps2f = problem.eps**2 * d.f_values.reshape(-1)[d.interior_flat]
    flat = u.reshape(-1)
    n_int = d.interior_flat.size
    is_int = np.zeros(flat.size, dtype=bool)
    is_int[d.interior_flat] = True
    col_map = -np.ones(flat.size, dtype=np.int64)
    col_map[d.interior_flat] = np.arange(n_int)
    monotone = True
    it = 0
    lin_total = 0
    res = math.inf
    kmax = kmin = None
    prev = None
    while it < max_iter:
        new, kmax, kmin = _sweep(d, u, eps2f)
        diff = new - flat[d.interior_flat]
        res = float(np.abs(diff).max())
        history.append(res)
        it += 1
        if res <= tol:
            monotone &= bool(diff.min() >= -1e-10)
            flat[d.interior_flat] = new
            break
        key = (kmax.tobytes(), kmin.tobytes())
        if key == prev:
            # directions are stable but the linear solve was not accurate
            # enough: a plain sweep makes progress and keeps the bookkeeping
            monotone &= bool(diff.min() >= -1e-10)
            flat[d.interior_flat] = new
            continue
        prev = key
        P = d.policy_matrix(kmax, kmin)
        P_int = P[:, d.interior_flat]
        boundary = P[:, ~is_int] @ flat[~is_int]
        A = sp.identity(n_int, format="csr") - P_int
        b = boundary + eps2f
        x0 = flat[d.interior_flat].copy()
        counter = {"n": 0}

        def cb(_):
            counter["n"] += 1

        sol, info = spla.gmres(A, b, x0=x0, rtol=0.0, atol=1e-3 * tol, restart=60,
                               maxiter=400, callback=cb, callback_type="pr_norm")
        lin_total += counter["n"]
        if info != 0:
            logger.info("policy step: gmres info=%s after %d iterations", info, counter["n"])
        monotone &= bool((sol - flat[d.interior_flat]).min() >= -1e-10)
        flat[d.interior_flat] = sol
    return it, res, monotone, kmax, kmin, lin_total


def _policy_grid(d: Discretization, k: np.ndarray) -> np.ndarray:
    """Bank index per node; non-interior nodes copy the nearest interior node."""
    from scipy.ndimage import distance_transform_edt

    grid = np.zeros(d.shape, dtype=np.int32)
    grid.reshape(-1)[d.interior_flat] = k
    _, inds = distance_transform_edt(~d.interior, return_indices=True)
    return grid[tuple(inds)]


def solve(problem: DppProblem, init: GridField | None = None, raise_on_failure: bool = True) -> SolveReport:
    """Iterate the DPP to a sup-norm residual below tol.

    Raises NotConverged (carrying the partial report) when max_iter is hit,
    unless ``raise_on_failure`` is False.
    """
    t0 = time.perf_counter()
    d = problem.disc
    tol = default_tol(problem)
    if init is None:
        init = initial_subsolution(problem) if problem.init == "subsolution" else g_extension(problem)
        init_name = problem.init
    else:
        init_name = "given"
    u = np.nan_to_num(np.array(init.values, dtype=float))
    u[d.collar] = d.g_values[d.collar]
    u[~(d.interior | d.collar)] = 0.0
    history: list[float] = []
    runner = _value_iteration if problem.method == "value" else _policy_iteration
    it, res, monotone, kmax, kmin, lin = runner(problem, d, u, tol, problem.max_iter, history)
    bound = apriori_bound(problem)
    sup_u = float(np.abs(u[d.interior]).max())
    report = SolveReport(
        solution=d.field(u, kind="solution"),
        iterations=it,
        residual_history=history,
        final_residual=res,
        apriori_bound_ok=bool(sup_u <= bound + tol),
        monotone_ok=bool(monotone),
        converged=bool(res <= tol),
        tol=tol,
        method=problem.method,
        init=init_name,
        apriori_bound=bound,
        seconds=time.perf_counter() - t0,
        policy_max=_policy_grid(d, kmax),
        policy_min=_policy_grid(d, kmin),
        bank=d.bank,
        problem=problem,
        linear_iterations=lin,
    )
    logger.info("solve: %d iterations, residual %.3e, %.1fs", it, res, report.seconds)
    if not report.converged and raise_on_failure:
        raise NotConverged(f"residual {res:.3e} > tol {tol:.3e} after {it} iterations", report=report)
    return report


def comparison_check(problem: DppProblem, u_report: SolveReport, v_report: SolveReport,
                     slack: float | None = None) -> bool:
    """True iff u <= v + slack at every interior node (slack defaults to tol)."""
    pu, pv = u_report.problem, v_report.problem
    if pu is None or pv is None or not (pu.same_setup(problem) and pv.same_setup(problem)):
        raise MismatchedProblems("reports were not produced on the same discretization")
    a, b = u_report.solution, v_report.solution
    if a.shape != b.shape or not np.array_equal(a.classes, b.classes):
        raise MismatchedProblems("solutions live on different lattices")
    s = default_tol(problem) if slack is None else slack
    mask = a.classes == INTERIOR
    return bool(np.all(a.values[mask] <= b.values[mask] + s))


def dpp_residual(field_: GridField, problem: DppProblem) -> np.ndarray:
    """|T u - u| at interior nodes using the lattice stencil bank."""
    d = problem.disc
    u = np.nan_to_num(np.array(field_.values, dtype=float))
    eps2f = problem.eps**2 * d.f_values.reshape(-1)[d.interior_flat]
    new, _, _ = _sweep(d, u, eps2f)
    return new - u.reshape(-1)[d.interior_flat]


def bank_direction(report: SolveReport, x, which: str = "max") -> np.ndarray:
    """Stored optimal direction at the lattice node nearest to x."""
    grid = report.policy_max if which == "max" else report.policy_min
    sol = report.solution
    idx = np.rint((np.asarray(x, dtype=float) - sol.origin) / sol.spacing).astype(int)
    idx = np.clip(idx, 0, np.asarray(sol.shape) - 1)
    return report.bank[grid[tuple(idx)]]


__all__ = [
    "DppProblem", "Discretization", "SearchConfig", "SolveReport", "apriori_bound", "bank_direction",
    "comparison_check", "default_tol", "direction_bank", "direction_search", "dpp_residual", "dpp_rhs",
    "g_extension", "initial_subsolution", "solve", "subsolution_constant", "unit",
]
