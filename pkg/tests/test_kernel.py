from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from tugdpp.errors import InvalidExponent, UnsupportedDimension
from tugdpp.kernel import (KernelParams, ball_volume, closed_form, gamma_constant, mc_moment_oracle,
                           moment_table, monomial_integral)

# Frozen from scipy.integrate.quad in polar/spherical coordinates (independent
# of the Gamma-function formulas) and, where available, elementary closed forms.
FROZEN_GAMMA = {
    (2, 1.5): 1.1128357888988967,
    (2, 3.0): 2.0 / (3.0 * math.pi),
    (3, 1.5): 1.2,
    (3, 3.0): 0.1875,
}
FROZEN_FIRST_MOMENT = {
    (2, 1.5): 0.27416794862664556,
    (2, 3.0): 3.0 * math.pi / 16.0,
}

p_values = st.floats(min_value=1.01, max_value=20.0, allow_nan=False)
dims = st.sampled_from([2, 3])


@pytest.mark.parametrize("key", sorted(FROZEN_GAMMA))
def test_gamma_matches_frozen_quadrature(key):
    dim, p = key
    assert gamma_constant(KernelParams(dim, p)) == pytest.approx(FROZEN_GAMMA[key], rel=1e-11)


@pytest.mark.parametrize("key", sorted(FROZEN_FIRST_MOMENT))
def test_first_moment_matches_frozen_quadrature(key):
    dim, p = key
    assert KernelParams(dim, p).first_moment_ratio == pytest.approx(FROZEN_FIRST_MOMENT[key], rel=1e-11)


@pytest.mark.parametrize("dim", [2, 3, 4, 8])
def test_uniform_kernel_has_gamma_one_half(dim):
    assert gamma_constant(KernelParams(dim, 2.0)) == pytest.approx(0.5, abs=1e-13)


def test_gamma_2d_against_live_quadrature():
    for p in (1.1, 1.9, 5.0):
        ang = integrate.quad(lambda t: math.cos(t) ** (p - 2), -math.pi / 2, math.pi / 2, limit=200)[0]
        assert KernelParams(2, p).gamma == pytest.approx(ang / (p * math.pi), rel=1e-8)


@settings(max_examples=60, deadline=None)
@given(dim=dims, p=p_values)
def test_moment_identities(dim, p):
    t = moment_table(KernelParams(dim, p))
    assert t.axial_p_moment + (dim - 1) * t.cross_moment == pytest.approx(t.radial_moment, abs=1e-12)
    assert t.axial_p_moment == pytest.approx((p - 1) / (dim + p), abs=1e-12)
    assert t.cross_moment == pytest.approx(1.0 / (dim + p), abs=1e-12)
    assert t.shell_fraction == pytest.approx(0.5 - 2.0 ** (-(dim + p - 1)), abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(dim=dims, p=p_values)
def test_first_moment_ratio_bounds(dim, p):
    # 0 < E[z.h] and E[z.h]^2 <= E[(z.h)^2] (Jensen)
    kp = KernelParams(dim, p)
    c = kp.first_moment_ratio
    assert 0.0 < c < 1.0
    assert c * c <= moment_table(kp).axial_p_moment + 1e-15


@settings(max_examples=40, deadline=None)
@given(dim=dims, p=st.floats(min_value=1.05, max_value=1.99))
def test_beta_in_unit_interval_below_two(dim, p):
    assert 0.0 < KernelParams(dim, p).beta < 1.0


def test_beta_exceeds_one_above_two():
    assert KernelParams(2, 3.0).beta > 1.0


def test_monomial_integral_uniform_second_moment():
    for dim in (2, 3, 5):
        assert monomial_integral(dim, [2.0] + [0.0] * (dim - 1)) == pytest.approx(1.0 / (dim + 2), rel=1e-13)


def test_ball_volume():
    assert ball_volume(2) == pytest.approx(math.pi)
    assert ball_volume(3) == pytest.approx(4.0 * math.pi / 3.0)


def test_with_eps_keeps_constants():
    a = KernelParams(2, 1.5, 0.1)
    b = a.with_eps(0.05)
    assert b.eps == 0.05 and b.gamma == a.gamma


@pytest.mark.parametrize("p", [1.0, 0.5, 65.0, float("nan")])
def test_invalid_exponent(p):
    with pytest.raises(InvalidExponent):
        KernelParams(2, p)


@pytest.mark.parametrize("dim", [1, 9])
def test_unsupported_dimension(dim):
    with pytest.raises(UnsupportedDimension):
        KernelParams(dim, 1.5)


def test_nonpositive_eps():
    with pytest.raises(InvalidExponent):
        KernelParams(2, 1.5, 0.0)


@pytest.mark.parametrize("kind", ["gamma", "first_moment", "axial", "cross", "radial", "shell"])
def test_mc_oracle_agrees(kind):
    est, se = mc_moment_oracle(3, 1.3, kind, 200_000, seed=4)
    assert abs(est - closed_form(3, 1.3, kind)) <= 4 * se


def test_mc_oracle_deterministic():
    assert mc_moment_oracle(2, 1.5, "cross", 20_000, seed=1) == mc_moment_oracle(2, 1.5, "cross", 20_000, seed=1)


def test_mc_oracle_rejects_tiny_sample_and_unknown_kind():
    with pytest.raises(ValueError):
        mc_moment_oracle(2, 1.5, "gamma", 100)
    with pytest.raises(ValueError):
        mc_moment_oracle(2, 1.5, "bogus", 20_000)
    with pytest.raises(ValueError):
        closed_form(2, 1.5, "bogus")


def test_shell_fraction_against_direct_sampling():
    # plain (not conditioned) sampling at p = 3, where the weight is bounded
    rng = np.random.default_rng(0)
    h = rng.uniform(-1, 1, size=(400_000, 2))
    h = h[np.einsum("ij,ij->i", h, h) < 1]
    w = np.clip(h[:, 0], 0, None)
    r = np.linalg.norm(h, axis=1)
    # kernel mass of the half shell {1/2 <= |h| < 1, h_2 >= 0}
    frac = np.sum(w * (r >= 0.5) * (h[:, 1] >= 0)) / np.sum(w)
    assert frac == pytest.approx(moment_table(KernelParams(2, 3.0)).shell_fraction, abs=5e-3)
