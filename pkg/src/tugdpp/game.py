"""Monte Carlo tug-of-war with noise.

Each round a fair coin picks the player who chooses a direction z; the token
then moves to x + eps h with h drawn from the density proportional to
(z.h)_+^{p-2} on B_1.  Player I (heads) maximizes, Player II minimizes.  The
payoff of a path is the running sum of eps^2 f at every visited interior
point (start included) plus g at the first point outside Omega.

Paths are simulated in lockstep with numpy; every draw comes from the
counter-based generator in ``rng`` keyed by (seed, path, step, purpose), so
a path's trajectory does not depend on which other paths run with it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import rng as crng
from .averaging import frame, unit
from .errors import MismatchedProblems, SamplerStall
from .grid import interpolate
from .kernel import KernelParams

MAX_PROPOSALS = 10_000
STRATEGY_KINDS = ("optimal", "fixed", "radial", "adversarial-random")


# ---------------------------------------------------------------------------
# step sampling


def _completion(z: np.ndarray) -> np.ndarray:
    """Per-row orthonormal completion of unit vectors z: (n, N, N-1)."""
    n, dim = z.shape
    if dim == 2:
        return np.stack([-z[:, 1], z[:, 0]], axis=1)[:, :, None]
    # Householder reflection exchanging e_1 and -/+z (sign chosen to avoid
    # cancellation); its columns 2..N complete z either way
    e1 = np.zeros(dim)
    e1[0] = 1.0
    sign = np.where(z[:, 0] >= 0, -1.0, 1.0)
    v = e1[None, :] - sign[:, None] * z
    vv = np.einsum("ij,ij->i", v, v)
    H = np.eye(dim)[None] - 2.0 * v[:, :, None] * v[:, None, :] / vv[:, None, None]
    return H[:, :, 1:]


def _draw_axial(p: float, dim: int, seed: int, paths: np.ndarray, step: int) -> np.ndarray:
    """t in (0, 1) with density proportional to t^{p-2} (1 - t^2)^{(N-1)/2}."""
    t = np.empty(paths.size)
    pending = np.arange(paths.size)
    for attempt in range(MAX_PROPOSALS):
        u = crng.uniforms(seed, paths[pending], step, crng.STEP_AXIAL, attempt)
        cand = u[:, 0] ** (1.0 / (p - 1.0))
        accept = u[:, 1] < (1.0 - cand * cand) ** ((dim - 1) / 2.0)
        t[pending[accept]] = cand[accept]
        pending = pending[~accept]
        if pending.size == 0:
            return t
    raise SamplerStall(f"{pending.size} draws exceeded {MAX_PROPOSALS} proposals")


def _draw_cross(dim: int, rho: np.ndarray, seed: int, paths: np.ndarray, step: int) -> np.ndarray:
    """Uniform point in the (N-1)-ball of radius rho, shape (n, N-1)."""
    u = crng.uniforms(seed, paths, step, crng.STEP_CROSS)
    if dim == 2:
        return (rho * (2.0 * u[:, 0] - 1.0))[:, None]
    r = rho * np.sqrt(u[:, 0])
    a = 2.0 * math.pi * u[:, 1]
    return np.stack([r * np.cos(a), r * np.sin(a)], axis=1)


def sample_steps(x: np.ndarray, z: np.ndarray, params: KernelParams, seed: int,
                 paths: np.ndarray, step: int) -> np.ndarray:
    """Vectorized x + eps h with h ~ (z.h)_+^{p-2} on B_1; rows are paths."""
    if params.dim > 3:
        raise ValueError("step sampling is implemented for N = 2 and N = 3")
    x = np.atleast_2d(x)
    z = np.atleast_2d(z)
    t = _draw_axial(params.p, params.dim, seed, paths, step)
    rho = np.sqrt(np.clip(1.0 - t * t, 0.0, None))
    y = _draw_cross(params.dim, rho, seed, paths, step)
    h = t[:, None] * z + np.einsum("nij,nj->ni", _completion(z), y)
    return x + params.eps * h


class _Stream:
    """Sequential use of the counter-based generator for a single caller."""

    def __init__(self, seed: int, path: int = 0):
        self.seed = seed
        self.path = np.array([path], dtype=np.uint64)
        self.step = 0


def make_rng(seed: int = 0, path: int = 0) -> _Stream:
    return _Stream(seed, path)


def sample_step(x, z, params: KernelParams, rng: _Stream) -> np.ndarray:
    """One step from x in direction z; advances ``rng``."""
    z = unit(np.asarray(z, dtype=float))
    out = sample_steps(np.asarray(x, dtype=float)[None], z[None], params, rng.seed, rng.path, rng.step)
    rng.step += 1
    return out[0]


def sample_kernel(params: KernelParams, z, count: int, seed: int = 0) -> np.ndarray:
    """``count`` draws of h (eps = 1 scale) for direction z, one path each."""
    z = unit(np.asarray(z, dtype=float))
    paths = np.arange(count, dtype=np.uint64)
    unit_params = params.with_eps(1.0)
    zero = np.zeros((count, params.dim))
    return sample_steps(zero, np.broadcast_to(z, (count, params.dim)), unit_params, seed, paths, 0)


# ---------------------------------------------------------------------------
# strategies


@dataclass(frozen=True, eq=False)
class Strategy:
    """How a player picks z.

    kind ``optimal`` reads the solver's maximizing (Player I) or minimizing
    (Player II) bank direction at the nearest lattice node, or with
    ``recompute`` re-runs the continuous direction search of ``dpp_rhs`` at
    the current point.  ``fixed`` always returns ``direction``; ``radial``
    points away from (sign = +1) or toward (sign = -1) ``center``;
    ``adversarial-random`` draws a uniform direction every round.
    """

    kind: str
    report: object = None
    direction: tuple | None = None
    center: tuple | None = None
    sign: float = 1.0
    recompute: bool = False

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"unknown strategy {self.kind!r}; choose from {STRATEGY_KINDS}")
        if self.kind == "optimal" and self.report is None:
            raise ValueError("optimal strategy needs a solve report")
        if self.kind == "fixed":
            if self.direction is None:
                raise ValueError("fixed strategy needs a direction")
            unit(self.direction)

    def choose(self, x: np.ndarray, player: int, seed: int, paths: np.ndarray, step: int) -> np.ndarray:
        n, dim = x.shape
        if self.kind == "fixed":
            return np.broadcast_to(np.asarray(self.direction, dtype=float), (n, dim)).copy()
        if self.kind == "radial":
            c = np.zeros(dim) if self.center is None else np.asarray(self.center, dtype=float)
            v = x - c
            r = np.linalg.norm(v, axis=1, keepdims=True)
            e1 = np.eye(dim)[0]
            return self.sign * np.where(r > 0, v / np.where(r > 0, r, 1.0), e1)
        if self.kind == "adversarial-random":
            u = crng.uniforms(seed, paths, step, crng.STRATEGY, player)
            if dim == 2:
                a = 2.0 * math.pi * u[:, 0]
                return np.stack([np.cos(a), np.sin(a)], axis=1)
            c = 2.0 * u[:, 0] - 1.0
            a = 2.0 * math.pi * u[:, 1]
            s = np.sqrt(1.0 - c * c)
            return np.stack([s * np.cos(a), s * np.sin(a), c], axis=1)
        return self._optimal(x, player)

    def _optimal(self, x: np.ndarray, player: int) -> np.ndarray:
        rep = self.report
        if self.recompute:
            from .solver import dpp_rhs

            out = np.empty_like(x)
            for i, xi in enumerate(x):
                _, zmax, zmin = dpp_rhs(rep.solution, xi, rep.problem)
                out[i] = zmax if player == 0 else zmin
            return out
        sol = rep.solution
        grid = rep.policy_max if player == 0 else rep.policy_min
        idx = np.rint((x - sol.origin) / sol.spacing).astype(np.int64)
        idx = np.clip(idx, 0, np.asarray(sol.shape) - 1)
        return rep.bank[grid[tuple(idx.T)]]


# ---------------------------------------------------------------------------
# play


@dataclass(frozen=True, eq=False)
class GameConfig:
    problem: object
    start: tuple
    paths: int
    strategy_I: Strategy
    strategy_II: Strategy
    seed: int = 0
    max_steps: int = 1_000_000

    def __post_init__(self):
        if self.paths < 1:
            raise ValueError("paths must be at least 1")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")
        start = np.asarray(self.start, dtype=float)
        if start.size != self.problem.dim or not self.problem.domain.contains(start):
            raise ValueError("start must be an interior point of the domain")


@dataclass(frozen=True, eq=False)
class GameStats:
    mean_payoff: float
    std_error: float
    mean_exit_steps: float
    truncated_paths: int
    paths: int
    payoffs: np.ndarray = field(repr=False)
    steps: np.ndarray = field(repr=False)
    truncated: np.ndarray = field(repr=False)

    def summary(self) -> dict:
        return {
            "mean_payoff": self.mean_payoff,
            "std_error": self.std_error,
            "mean_exit_steps": self.mean_exit_steps,
            "truncated_paths": self.truncated_paths,
            "paths": self.paths,
        }


def play(config: GameConfig, batch: int = 200_000) -> GameStats:
    """Simulate all paths; deterministic given the seed."""
    prob = config.problem
    params = prob.params
    eps2 = prob.eps**2
    dom = prob.domain
    total = config.paths
    payoff = np.zeros(total)
    steps = np.zeros(total, dtype=np.int64)
    truncated = np.zeros(total, dtype=bool)
    start = np.asarray(config.start, dtype=float)
    for lo in range(0, total, batch):
        ids = np.arange(lo, min(total, lo + batch), dtype=np.uint64)
        x = np.broadcast_to(start, (ids.size, start.size)).copy()
        acc = np.zeros(ids.size)
        live = np.arange(ids.size)
        k = 0
        while live.size and k < config.max_steps:
            xl = x[live]
            pid = ids[live]
            acc[live] += eps2 * np.asarray(prob.f(xl), dtype=float)
            heads = crng.uniforms(config.seed, pid, k, crng.COIN)[:, 0] < 0.5
            z = np.empty_like(xl)
            if heads.any():
                z[heads] = config.strategy_I.choose(xl[heads], 0, config.seed, pid[heads], k)
            if (~heads).any():
                z[~heads] = config.strategy_II.choose(xl[~heads], 1, config.seed, pid[~heads], k)
            z /= np.linalg.norm(z, axis=1, keepdims=True)
            xn = sample_steps(xl, z, params, config.seed, pid, k)
            x[live] = xn
            k += 1
            out = ~dom.contains(xn)
            if out.any():
                done = live[out]
                acc[done] += np.asarray(prob.g(xn[out]), dtype=float)
                steps[lo + done] = k
            live = live[~out]
        if live.size:
            # truncated paths: pay g at the nearest collar point, and say so
            proj = dom.project_to_collar(x[live])
            acc[live] += np.asarray(prob.g(proj), dtype=float)
            steps[lo + live] = k
            truncated[lo + live] = True
        payoff[lo:lo + ids.size] = acc
    mean = float(np.mean(payoff))
    se = float(np.std(payoff, ddof=1) / math.sqrt(total)) if total > 1 else 0.0
    return GameStats(mean, se, float(np.mean(steps)), int(truncated.sum()), total, payoff, steps, truncated)


@dataclass(frozen=True)
class Discrepancy:
    mean_payoff: float
    solver_value: float
    std_error: float
    abs_error: float
    se_ratio: float
    agree: bool

    def summary(self) -> dict:
        return dict(self.__dict__)


def value_vs_solver(config: GameConfig, solve_report, stats: GameStats | None = None,
                    threshold: float = 4.0) -> Discrepancy:
    """|mean payoff - u(start)| and its size in standard errors."""
    rp = getattr(solve_report, "problem", None)
    if rp is None or not rp.same_setup(config.problem):
        raise MismatchedProblems("game and solve report use different problems")
    if stats is None:
        stats = play(config)
    u0 = float(interpolate(solve_report.solution, np.asarray(config.start, dtype=float)))
    err = abs(stats.mean_payoff - u0)
    if stats.std_error > 0:
        ratio = err / stats.std_error
    else:
        ratio = 0.0 if err <= 1e-12 * max(1.0, abs(u0)) else math.inf
    return Discrepancy(stats.mean_payoff, u0, stats.std_error, err, ratio, bool(ratio <= threshold))
