"""Quantitative checks of the small-eps behaviour of the averages and the DPP.

* ``check_expansion``: I^z u(x) against its second-order Taylor prediction
  u + eps c grad u.z + eps^2/(2(N+p)) (tr D2u + (p-2) <D2u z, z>).
* ``check_normalized_limit``: the symmetrized second difference along
  z* = grad u/|grad u| against the normalized p-Laplacian / (2(N+p)).
* ``check_midpoint_expansion``: the DPP midpoint (sup + inf)/2 with the
  actual direction search.
* ``holder_quotient`` / ``holder_study``: asymptotic Hoelder quotients of
  solutions with rough boundary data.
* ``convergence_study``: sup errors of DPP solutions against exact solutions
  of the limit equation as eps decreases.

Test functions are callables with analytic derivatives so quadrature error is
kept apart from lattice interpolation error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .averaging import apply, build_rule
from .errors import DegenerateGradient
from .grid import INTERIOR, GridField
from .kernel import KernelParams
from .solver import SearchConfig, direction_search, solve

FLOOR = 1e-14


@dataclass(frozen=True)
class SmoothFunction:
    """A callable together with its gradient and Hessian at a point."""

    name: str
    value: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x):
        return self.value(x)


def smooth_quadratic(H=None, b=None) -> SmoothFunction:
    """u(y) = y.H y + b.y (default H = I, b = 0, i.e. |y|^2)."""

    def get(dim):
        HH = np.eye(dim) if H is None else np.asarray(H, dtype=float)
        bb = np.zeros(dim) if b is None else np.asarray(b, dtype=float)
        return HH, bb

    def value(y):
        y = np.atleast_2d(y)
        HH, bb = get(y.shape[1])
        return np.einsum("ij,jk,ik->i", y, HH, y) + y @ bb

    def grad(x):
        HH, bb = get(x.size)
        return (HH + HH.T) @ x + bb

    def hess(x):
        HH, _ = get(x.size)
        return HH + HH.T

    return SmoothFunction("quadratic", value, grad, hess)


def smooth_linear(a) -> SmoothFunction:
    a = np.asarray(a, dtype=float)
    return SmoothFunction("linear", lambda y: np.atleast_2d(y) @ a, lambda x: a.copy(),
                          lambda x: np.zeros((a.size, a.size)))


def smooth_cos_x1() -> SmoothFunction:
    def grad(x):
        g = np.zeros(x.size)
        g[0] = -math.sin(x[0])
        return g

    def hess(x):
        h = np.zeros((x.size, x.size))
        h[0, 0] = -math.cos(x[0])
        return h

    return SmoothFunction("cos-x1", lambda y: np.cos(np.atleast_2d(y)[:, 0]), grad, hess)


def smooth_exp_mix() -> SmoothFunction:
    """exp(y1/2) sin(y2) + y1 y2: smooth, not a polynomial, no symmetry."""

    def value(y):
        y = np.atleast_2d(y)
        return np.exp(0.5 * y[:, 0]) * np.sin(y[:, 1]) + y[:, 0] * y[:, 1]

    def grad(x):
        g = np.zeros(x.size)
        e = math.exp(0.5 * x[0])
        g[0] = 0.5 * e * math.sin(x[1]) + x[1]
        g[1] = e * math.cos(x[1]) + x[0]
        return g

    def hess(x):
        h = np.zeros((x.size, x.size))
        e = math.exp(0.5 * x[0])
        h[0, 0] = 0.25 * e * math.sin(x[1])
        h[0, 1] = h[1, 0] = 0.5 * e * math.cos(x[1]) + 1.0
        h[1, 1] = -e * math.sin(x[1])
        return h

    return SmoothFunction("exp-mix", value, grad, hess)


def normalized_p_laplacian(hess: np.ndarray, grad: np.ndarray, p: float) -> float:
    n = np.linalg.norm(grad)
    if n < 1e-10:
        raise DegenerateGradient(f"|grad u| = {n:.3e} is too small")
    z = grad / n
    return float(np.trace(hess) + (p - 2.0) * z @ hess @ z)


@dataclass(frozen=True)
class ExpansionReport:
    eps_ladder: tuple
    measured_remainders: tuple
    fitted_order: float | None
    predicted: tuple = ()
    measured: tuple = ()
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        lad = self.eps_ladder
        if any(b >= a for a, b in zip(lad, lad[1:])):
            raise ValueError("eps ladder must be strictly decreasing")

    def rows(self) -> list[dict]:
        out = []
        for i, e in enumerate(self.eps_ladder):
            row = {"eps": e, "remainder": self.measured_remainders[i]}
            if self.predicted:
                row["predicted"] = self.predicted[i]
                row["measured"] = self.measured[i]
            for k, v in self.extra.items():
                if isinstance(v, (list, tuple)) and len(v) == len(self.eps_ladder):
                    row[k] = v[i]
            out.append(row)
        return out

    def summary(self) -> dict:
        return {"fitted_order": self.fitted_order if self.fitted_order is not None else "exact",
                "max_remainder": max(self.measured_remainders)}


def fit_order(eps: Sequence[float], remainders: Sequence[float], floor: float = FLOOR) -> float | None:
    """Least-squares slope of log remainder against log eps.

    Entries at or below ``floor`` carry no rate information and are dropped;
    None means fewer than two usable entries (the expansion is exact).
    """
    e = np.asarray(eps, dtype=float)
    r = np.asarray(remainders, dtype=float)
    keep = r > floor
    if keep.sum() < 2:
        return None
    return float(np.polyfit(np.log(e[keep]), np.log(r[keep]), 1)[0])


def _ladder(eps_ladder) -> tuple:
    lad = tuple(float(e) for e in eps_ladder)
    if not lad:
        raise ValueError("empty eps ladder")
    return lad


def _rule(params: KernelParams, rule):
    return rule if rule is not None else build_rule(params, 32, 32 if params.dim == 2 else 16)


def check_expansion(u: SmoothFunction, x, z, params: KernelParams, eps_ladder, rule=None) -> ExpansionReport:
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    z = z / np.linalg.norm(z)
    rule = _rule(params, rule)
    n, p = params.dim, params.p
    c = params.first_moment_ratio
    u0 = float(u.value(x[None])[0])
    g = u.grad(x)
    H = u.hess(x)
    second = (np.trace(H) + (p - 2.0) * z @ H @ z) / (2.0 * (n + p))
    lad = _ladder(eps_ladder)
    rem, pred, meas = [], [], []
    for e in lad:
        val = apply(rule, u.value, x, z, params.with_eps(e))
        pr = u0 + e * c * float(g @ z) + e * e * second
        rem.append(abs(val - pr))
        pred.append(pr)
        meas.append(val)
    return ExpansionReport(lad, tuple(rem), fit_order(lad, rem), tuple(pred), tuple(meas))


def check_normalized_limit(u: SmoothFunction, x, params: KernelParams, eps_ladder, rule=None) -> ExpansionReport:
    x = np.asarray(x, dtype=float)
    g = u.grad(x)
    target = normalized_p_laplacian(u.hess(x), g, params.p) / (2.0 * (params.dim + params.p))
    zs = g / np.linalg.norm(g)
    rule = _rule(params, rule)
    u0 = float(u.value(x[None])[0])
    lad = _ladder(eps_ladder)
    rem, meas = [], []
    for e in lad:
        pe = params.with_eps(e)
        s = apply(rule, u.value, x, zs, pe) + apply(rule, u.value, x, -zs, pe) - 2.0 * u0
        m = s / (2.0 * e * e)
        meas.append(m)
        rem.append(abs(m - target))
    return ExpansionReport(lad, tuple(rem), fit_order(lad, rem), tuple([target] * len(lad)), tuple(meas))


def check_midpoint_expansion(u: SmoothFunction, x, params: KernelParams, eps_ladder, rule=None,
                             search: SearchConfig | None = None) -> ExpansionReport:
    """(sup + inf)/2 of I^z u(x) against u + eps^2 Delta_p^N u / (2(N+p)).

    ``extra['angle_max']`` / ``extra['angle_min']`` hold the angles between
    the optimizing directions and +grad u/|grad u|, -grad u/|grad u|.
    """
    x = np.asarray(x, dtype=float)
    g = u.grad(x)
    lap = normalized_p_laplacian(u.hess(x), g, params.p)
    zs = g / np.linalg.norm(g)
    rule = _rule(params, rule)
    search = search or SearchConfig()
    u0 = float(u.value(x[None])[0])
    lad = _ladder(eps_ladder)
    rem, pred, meas, amax, amin = [], [], [], [], []
    for e in lad:
        pe = params.with_eps(e)
        val = lambda z: apply(rule, u.value, x, z, pe)
        zmax, vmax = direction_search(val, params.dim, search, maximize=True)
        zmin, vmin = direction_search(val, params.dim, search, maximize=False)
        mid = 0.5 * (vmax + vmin)
        pr = u0 + e * e * lap / (2.0 * (params.dim + params.p))
        rem.append(abs(mid - pr))
        pred.append(pr)
        meas.append(mid)
        amax.append(math.acos(max(-1.0, min(1.0, float(zmax @ zs)))))
        amin.append(math.acos(max(-1.0, min(1.0, float(-zmin @ zs)))))
    return ExpansionReport(lad, tuple(rem), fit_order(lad, rem), tuple(pred), tuple(meas),
                           {"angle_max": tuple(amax), "angle_min": tuple(amin)})


# ---------------------------------------------------------------------------
# Hoelder quotients

GAMMA_GRID = tuple(np.round(np.arange(1, 21) * 0.05, 2))


@dataclass(frozen=True)
class HolderReport:
    gamma: float
    quotient_sup: float
    pair_count: int
    radius: float
    eps: float
    fitted: bool
    fit_rss: float | None = None

    def summary(self) -> dict:
        return dict(self.__dict__)


def _ball_nodes(solution: GridField, R: float, center) -> tuple[np.ndarray, np.ndarray]:
    idx = solution.interior_indices()
    pts = solution.origin + solution.spacing * idx
    c = np.zeros(solution.dim) if center is None else np.asarray(center, dtype=float)
    keep = np.linalg.norm(pts - c, axis=1) < R / 2
    return pts[keep], solution.values[tuple(idx[keep].T)]


def _pairs(n: int, max_points: int, pair_count: int, seed: int):
    """All pairs i < j when n <= max_points, else seeded random pairs."""
    if n <= max_points:
        i, j = np.triu_indices(n, k=1)
        return i, j
    rng = np.random.default_rng(seed)
    i = rng.integers(0, n, size=pair_count)
    j = rng.integers(0, n - 1, size=pair_count)
    j = np.where(j >= i, j + 1, j)
    return i, j


def pair_data(solution: GridField, R: float, center=None, pairs: int = 100_000, seed: int = 0,
              max_points: int = 10_000):
    """(distances, |u(x) - u(y)|) over lattice pairs inside B_{R/2}."""
    pts, vals = _ball_nodes(solution, R, center)
    i, j = _pairs(pts.shape[0], max_points, pairs, seed)
    d = np.linalg.norm(pts[i] - pts[j], axis=1)
    osc = np.abs(vals[i] - vals[j])
    return d, osc


def _binned_envelope(d: np.ndarray, osc: np.ndarray, bins: int = 24):
    edges = np.geomspace(d.min(), d.max() * (1 + 1e-12), bins + 1)
    which = np.clip(np.searchsorted(edges, d, side="right") - 1, 0, bins - 1)
    env = np.full(bins, -np.inf)
    np.maximum.at(env, which, osc)
    mid = np.sqrt(edges[:-1] * edges[1:])
    keep = np.isfinite(env) & (env > 0)
    return mid[keep], env[keep]


def fit_gamma(samples, grid=GAMMA_GRID) -> tuple[float, float]:
    """Pick gamma from ``grid`` minimizing the log-space misfit of the binned
    oscillation envelope against K (d^gamma + eps^gamma), K fitted per eps.

    ``samples`` is a list of (eps, distances, oscillations); one gamma is
    shared by all of them.  Returns (gamma, residual sum of squares).
    """
    envs = [(e, *_binned_envelope(d, o)) for e, d, o in samples]
    best = (None, math.inf)
    for gam in grid:
        rss = 0.0
        for e, mid, env in envs:
            if mid.size == 0:
                continue
            r = np.log(env) - np.log(mid**gam + e**gam)
            rss += float(np.sum((r - r.mean()) ** 2))
        if rss < best[1] - 1e-15:
            best = (float(gam), rss)
    if best[0] is None:
        return 1.0, 0.0
    return best


def holder_quotient(solution: GridField, R: float, gamma: float | None, params: KernelParams,
                    center=None, pairs: int = 100_000, seed: int = 0) -> HolderReport:
    """max |u(x) - u(y)| / (|x - y|^gamma + eps^gamma) over pairs in B_{R/2}."""
    d, osc = pair_data(solution, R, center, pairs, seed)
    fitted = gamma is None
    rss = None
    if fitted:
        gamma, rss = fit_gamma([(params.eps, d, osc)]) if d.size else (1.0, 0.0)
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    q = float(np.max(osc / (d**gamma + params.eps**gamma))) if d.size else 0.0
    return HolderReport(float(gamma), q, int(d.size), float(R), float(params.eps), fitted, rss)


@dataclass(frozen=True)
class HolderStudy:
    gamma: float
    reports: tuple
    ratio: float

    @property
    def bounded(self) -> bool:
        return self.ratio <= 2.0

    def rows(self) -> list[dict]:
        return [{"eps": r.eps, "gamma": r.gamma, "quotient_sup": r.quotient_sup, "pair_count": r.pair_count}
                for r in self.reports]


def holder_study(solutions: Sequence[tuple[float, GridField]], R: float, params: KernelParams,
                 gamma: float | None = None, center=None, pairs: int = 100_000, seed: int = 0) -> HolderStudy:
    """Quotients over an eps ladder with one gamma (fitted jointly if None)."""
    data = [(e, *pair_data(s, R, center, pairs, seed)) for e, s in solutions]
    if gamma is None:
        gamma, _ = fit_gamma(data)
    reps = []
    for (e, s), (_, d, osc) in zip(solutions, data):
        q = float(np.max(osc / (d**gamma + e**gamma))) if d.size else 0.0
        reps.append(HolderReport(float(gamma), q, int(d.size), float(R), float(e), True))
    qs = [r.quotient_sup for r in reps]
    ratio = max(qs) / min(qs) if min(qs) > 0 else (1.0 if max(qs) == 0 else math.inf)
    return HolderStudy(float(gamma), tuple(reps), float(ratio))


# ---------------------------------------------------------------------------
# convergence


def check_region(problem, coords: np.ndarray) -> np.ndarray:
    """Points where errors are measured: B_{R/2} for balls, the middle half of
    the radial range for annuli, the middle half box for boxes."""
    dom = problem.domain
    c = np.asarray(dom.center)
    if dom.shape == "box":
        lo, hi = np.asarray(dom.lower), np.asarray(dom.upper)
        q = 0.25 * (hi - lo)
        return np.all((coords > lo + q) & (coords < hi - q), axis=-1)
    r = np.linalg.norm(coords - c, axis=-1)
    if dom.shape == "ball":
        return r < dom.radius / 2
    q = 0.25 * (dom.radius - dom.inner_radius)
    return (r > dom.inner_radius + q) & (r < dom.radius - q)


@dataclass(frozen=True)
class ConvergenceRow:
    eps: float
    dx: float
    sup_error: float
    iterations: int
    final_residual: float
    seconds: float

    def as_dict(self) -> dict:
        # wall time stays off the serialized row so reruns are byte-identical
        d = dict(self.__dict__)
        del d["seconds"]
        return d


@dataclass(frozen=True)
class ConvergenceTable:
    rows: tuple
    floor: float

    @property
    def nonincreasing(self) -> bool:
        errs = [r.sup_error for r in self.rows]
        return all(b <= a or b <= self.floor for a, b in zip(errs, errs[1:]))


def convergence_study(problems: Sequence, exact_u: Callable, floor: float = 1e-6,
                      on_solved: Callable | None = None) -> ConvergenceTable:
    """Solve each problem (ordered by decreasing eps) and record sup errors
    against ``exact_u`` on the check region.  ``floor`` is the error level
    treated as discretization noise in the monotonicity verdict."""
    rows = []
    for prob in problems:
        rep = solve(prob)
        sol = rep.solution
        mask = (sol.classes == INTERIOR) & check_region(prob, sol.coords())
        pts = sol.coords()[mask]
        err = float(np.max(np.abs(sol.values[mask] - exact_u(pts)))) if pts.size else 0.0
        rows.append(ConvergenceRow(prob.eps, prob.spacing, err, rep.iterations, rep.final_residual, rep.seconds))
        if on_solved is not None:
            on_solved(prob, rep)
    return ConvergenceTable(tuple(rows), floor)
