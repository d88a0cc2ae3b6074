"""Named data functions and the exact solutions used by the checks.

Every function maps an (n, N) array of points to n values.  Configs refer to
them by id, which keeps config files free of code.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import ConfigError


def _rows(x) -> np.ndarray:
    return np.atleast_2d(np.asarray(x, dtype=float))


def constant(c: float) -> Callable:
    c = float(c)
    return lambda x: np.full(_rows(x).shape[0], c)


def linear(a, b: float = 0.0) -> Callable:
    a = np.asarray(a, dtype=float)
    return lambda x: _rows(x) @ a + b


def quadratic(center=None) -> Callable:
    def u(x):
        x = _rows(x)
        c = np.zeros(x.shape[1]) if center is None else np.asarray(center, dtype=float)
        return np.sum((x - c) ** 2, axis=1)

    return u


def quadratic_source(dim: int, p: float) -> float:
    """f with u = |x|^2 an exact DPP solution: -(N + p - 2)/(N + p)."""
    return -(dim + p - 2.0) / (dim + p)


def radial_power(exponent: float, center=None) -> Callable:
    def u(x):
        x = _rows(x)
        c = np.zeros(x.shape[1]) if center is None else np.asarray(center, dtype=float)
        return np.linalg.norm(x - c, axis=1) ** exponent

    return u


def radial_p_harmonic_exponent(dim: int, p: float) -> float:
    """a with Delta_p^N |x|^a = 0 away from the origin.

    For u = r^a: u'' = a(a-1) r^{a-2}, u'/r = a r^{a-2}, and the normalized
    p-Laplacian of a radial function is (p-1) u'' + (N-1) u'/r, so the
    condition is (p-1)(a-1) + (N-1) = 0, i.e. a = (p-N)/(p-1).
    """
    if p == dim:
        raise ConfigError("p = N gives the logarithm, not a power")
    return (p - dim) / (p - 1.0)


def sign_x1(x):
    return np.sign(_rows(x)[:, 0])


def cos_x1(x):
    return np.cos(_rows(x)[:, 0])


def product_x1x2(x):
    x = _rows(x)
    return x[:, 0] * x[:, 1]


NAMED = {
    "zero": lambda dim, p: constant(0.0),
    "one": lambda dim, p: constant(1.0),
    "x1": lambda dim, p: linear(np.eye(dim)[0]),
    "quadratic": lambda dim, p: quadratic(),
    "sign-x1": lambda dim, p: sign_x1,
    "cos-x1": lambda dim, p: cos_x1,
    "x1x2": lambda dim, p: product_x1x2,
    "radial-p-harmonic": lambda dim, p: radial_power(radial_p_harmonic_exponent(dim, p)),
}


def named(name: str, dim: int, p: float) -> Callable:
    try:
        return NAMED[name](dim, p)
    except KeyError:
        raise ConfigError(f"unknown function id {name!r}; known: {sorted(NAMED)}") from None
