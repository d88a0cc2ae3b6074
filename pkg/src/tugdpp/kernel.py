"""Closed-form constants of the directional kernel (z.h)_+^{p-2} on the unit ball.

All ball integrals here are *averages* over B_1.  ``gamma_constant`` is the
normalization of the kernel, ``moment_table`` collects the second moments that
drive the asymptotic expansion, and ``mc_moment_oracle`` re-derives each of them
by sampling so tests never check a closed form against itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import InvalidExponent, UnsupportedDimension

P_MAX = 64.0
DIM_MAX = 8

MOMENT_KINDS = ("gamma", "first_moment", "axial", "cross", "radial", "shell")


def _check_dim(dim: int) -> None:
    if int(dim) != dim or not 2 <= dim <= DIM_MAX:
        raise UnsupportedDimension(f"dimension must be an integer in [2, {DIM_MAX}], got {dim}")


def _check_p(p: float) -> None:
    if not np.isfinite(p) or p <= 1.0:
        raise InvalidExponent(f"p must satisfy p > 1, got {p}")
    if p > P_MAX:
        raise InvalidExponent(f"p = {p} exceeds the supported maximum {P_MAX}")


def _gamma_raw(dim: int, p: float) -> float:
    # exp of a log-Gamma difference keeps N + p ~ 300 finite
    log_val = (
        math.lgamma(dim / 2.0 + 1.0)
        + math.lgamma((p - 1.0) / 2.0)
        - math.lgamma((dim + p) / 2.0)
    )
    return math.exp(log_val) / (2.0 * math.sqrt(math.pi))


def ball_volume(dim: int) -> float:
    return math.pi ** (dim / 2.0) / math.gamma(dim / 2.0 + 1.0)


@dataclass(frozen=True)
class KernelParams:
    """Dimension N, exponent p and step eps of the averaging kernel."""

    dim: int
    p: float
    eps: float = 1.0

    def __post_init__(self):
        _check_dim(self.dim)
        _check_p(self.p)
        if not np.isfinite(self.eps) or self.eps <= 0:
            raise InvalidExponent(f"eps must be positive, got {self.eps}")

    @cached_property
    def gamma(self) -> float:
        return _gamma_raw(self.dim, self.p)

    @cached_property
    def first_moment_ratio(self) -> float:
        """gamma_{N,p+1} / gamma_{N,p}: the drift of one step in units of eps."""
        return _gamma_raw(self.dim, self.p + 1.0) / self.gamma

    @property
    def beta(self) -> float:
        """Uniform weight 1/(2 gamma) of the extremal-operator decomposition."""
        return 1.0 / (2.0 * self.gamma)

    def with_eps(self, eps: float) -> "KernelParams":
        return KernelParams(self.dim, self.p, eps)


@dataclass(frozen=True)
class MomentTable:
    first_moment_ratio: float
    axial_p_moment: float
    cross_moment: float
    radial_moment: float
    shell_fraction: float

    def as_dict(self) -> dict[str, float]:
        return {
            "first_moment_ratio": self.first_moment_ratio,
            "axial_p_moment": self.axial_p_moment,
            "cross_moment": self.cross_moment,
            "radial_moment": self.radial_moment,
            "shell_fraction": self.shell_fraction,
        }


def gamma_constant(params: KernelParams) -> float:
    """Ball average of (z.h)_+^{p-2}, independent of the unit vector z."""
    return params.gamma


def monomial_integral(dim: int, exponents: Sequence[float]) -> float:
    """Ball average of |h_1|^a_1 ... |h_N|^a_N via the Gamma-product formula."""
    _check_dim(dim)
    alphas = [float(a) for a in exponents]
    if len(alphas) != dim:
        raise ValueError(f"expected {dim} exponents, got {len(alphas)}")
    if any(not a > -1.0 for a in alphas):
        raise InvalidExponent(f"all exponents must exceed -1, got {alphas}")
    log_val = math.lgamma(dim / 2.0 + 1.0) - (dim / 2.0) * math.log(math.pi)
    log_val += sum(math.lgamma((a + 1.0) / 2.0) for a in alphas)
    log_val -= math.lgamma((dim + sum(alphas) + 2.0) / 2.0)
    return math.exp(log_val)


def moment_table(params: KernelParams) -> MomentTable:
    n, p = params.dim, params.p
    two_gamma = 2.0 * params.gamma
    axial = monomial_integral(n, [p] + [0.0] * (n - 1)) / two_gamma
    cross = monomial_integral(n, [p - 2.0, 2.0] + [0.0] * (n - 2)) / two_gamma
    return MomentTable(
        first_moment_ratio=params.first_moment_ratio,
        axial_p_moment=axial,
        cross_moment=cross,
        radial_moment=(n + p - 2.0) / (n + p),
        shell_fraction=0.5 - 2.0 ** (-(n + p - 1.0)),
    )


def closed_form(dim: int, p: float, kind: str) -> float:
    """Closed-form value matching ``mc_moment_oracle(dim, p, kind, ...)``."""
    params = KernelParams(dim, p)
    table = moment_table(params)
    values = {
        "gamma": params.gamma,
        "first_moment": table.first_moment_ratio,
        "axial": table.axial_p_moment,
        "cross": table.cross_moment,
        "radial": table.radial_moment,
        "shell": table.shell_fraction,
    }
    if kind not in values:
        raise ValueError(f"unknown moment kind {kind!r}; choose from {MOMENT_KINDS}")
    return values[kind]


def _uniform_ball(rng: np.random.Generator, dim: int, count: int) -> np.ndarray:
    out = np.empty((0, dim))
    while out.shape[0] < count:
        need = count - out.shape[0]
        cand = rng.uniform(-1.0, 1.0, size=(int(need * 2.2) + 64, dim))
        cand = cand[np.einsum("ij,ij->i", cand, cand) < 1.0]
        out = np.vstack([out, cand[:need]])
    return out


def mc_moment_oracle(
    dim: int, p: float, moment_kind: str, samples: int, seed: int = 0
) -> tuple[float, float]:
    """Monte Carlo estimate (and standard error) of a kernel moment.

    Points are drawn uniformly in B_1 by rejection from the cube.  The axial
    coordinate h_1 is then integrated out exactly given the remaining
    coordinates y (h_1 | y is uniform on (-rho, rho), rho = sqrt(1 - |y|^2)).
    Without that conditioning |h_1|^{p-2} has infinite variance for p <= 3/2.
    Ratios are reported with delta-method standard errors.
    """
    _check_dim(dim)
    _check_p(p)
    if samples < 10_000:
        raise ValueError("mc_moment_oracle needs at least 10^4 samples")
    if moment_kind not in MOMENT_KINDS:
        raise ValueError(f"unknown moment kind {moment_kind!r}; choose from {MOMENT_KINDS}")
    rng = np.random.default_rng(seed)
    y = _uniform_ball(rng, dim, samples)[:, 1:]
    y2 = np.einsum("ij,ij->i", y, y)
    rho = np.sqrt(np.clip(1.0 - y2, 0.0, None))

    # E[|h_1|^{p-2} | y] = rho^{p-2} / (p-1)
    base = rho ** (p - 2.0) / (p - 1.0)
    if moment_kind == "gamma":
        return _mean_se(0.5 * base)
    if moment_kind == "first_moment":
        num = rho ** (p - 1.0) / p  # E[|h_1|^{p-1} | y]
    elif moment_kind == "axial":
        num = rho**p / (p + 1.0)
    elif moment_kind == "cross":
        num = y[:, 0] ** 2 * base
    elif moment_kind == "radial":
        num = y2 * base + rho**p / (p + 1.0)
    else:
        # S = {1/2 <= |h| < 1, h_2 >= 0}: the half shell facing x = e_2
        a = np.sqrt(np.clip(0.25 - y2, 0.0, None))
        with np.errstate(divide="ignore", invalid="ignore"):
            shell = (rho ** (p - 1.0) - a ** (p - 1.0)) / ((p - 1.0) * rho)
        shell = np.where(rho > 0, shell, 0.0)
        num = shell * (y[:, 0] >= 0.0)
    return _ratio_se(num, base)


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def _ratio_se(num: np.ndarray, den: np.ndarray) -> tuple[float, float]:
    ratio = num.mean() / den.mean()
    resid = num - ratio * den
    se = resid.std(ddof=1) / (math.sqrt(num.size) * abs(den.mean()))
    return float(ratio), float(se)
