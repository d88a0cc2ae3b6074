from __future__ import annotations

import math

import numpy as np
import pytest

from tugdpp import problems
from tugdpp.errors import ConfigError, MismatchedProblems, NotConverged, OutOfDomain
from tugdpp.grid import COLLAR, INTERIOR, DomainSpec
from tugdpp.solver import (DppProblem, SearchConfig, apriori_bound, bank_direction, comparison_check,
                           default_tol, direction_bank, direction_search, dpp_residual, dpp_rhs, g_extension,
                           initial_subsolution, solve, subsolution_constant)


def sq(x):
    return np.einsum("ij,ij->i", x, x)


def interior_error(rep, exact):
    sol = rep.solution
    mask = sol.classes == INTERIOR
    return float(np.max(np.abs(sol.values[mask] - exact(sol.coords()[mask]))))


@pytest.mark.parametrize("dim,count", [(2, 64), (2, 7), (3, 256)])
def test_direction_bank_symmetric_unit(dim, count):
    bank = direction_bank(dim, count)
    assert np.allclose(np.linalg.norm(bank, axis=1), 1.0)
    # every direction has its antipode in the bank
    d = np.linalg.norm(bank[:, None, :] + bank[None, :, :], axis=2)
    assert np.all(d.min(axis=1) < 1e-12)


def test_direction_search_2d_finds_exact_angle():
    target = np.array([math.cos(1.234), math.sin(1.234)])
    z, v = direction_search(lambda z: float(z @ target), 2, SearchConfig(), maximize=True)
    assert v == pytest.approx(1.0, abs=1e-14)
    assert np.allclose(z, target, atol=1e-7)
    z, v = direction_search(lambda z: float(z @ target), 2, SearchConfig(), maximize=False)
    assert np.allclose(z, -target, atol=1e-7)


def test_direction_search_3d():
    target = np.array([1.0, -2.0, 0.5]) / math.sqrt(5.25)
    z, v = direction_search(lambda z: float(z @ target), 3, SearchConfig(), maximize=True)
    assert v == pytest.approx(1.0, abs=1e-10)


def test_quadratic_is_a_fixed_point_of_the_continuous_rhs():
    p = 1.5
    prob = DppProblem(DomainSpec.ball(1.0, 0.2), p, f=problems.quadratic_source(2, p), g=sq)
    x = np.array([0.3, -0.4])
    val, zmax, zmin = dpp_rhs(sq, x, prob)
    assert val == pytest.approx(0.25, abs=1e-12)
    assert np.allclose(zmax, [0.6, -0.8], atol=1e-7)
    assert np.allclose(zmin, [-0.6, 0.8], atol=1e-7)
    with pytest.raises(OutOfDomain):
        dpp_rhs(sq, np.array([2.0, 0.0]), prob)


def test_policy_solve_reproduces_quadratic(quad_report_02):
    rep = quad_report_02
    assert rep.converged and rep.final_residual <= rep.tol
    assert interior_error(rep, sq) < 1e-9
    assert rep.apriori_bound_ok
    assert np.max(np.abs(dpp_residual(rep.solution, rep.problem))) <= 10 * rep.tol
    # optimal directions point along +x and -x away from the center
    z = bank_direction(rep, [0.5, 0.0], "max")
    assert z @ np.array([1.0, 0.0]) > 0.99


def test_value_iteration_monotone_linear():
    a = np.array([0.3, 0.7])
    prob = DppProblem(DomainSpec.ball(1.0, 0.2), 1.5, f=0.0, g=lambda x: x @ a, dx=0.05, method="value")
    rep = solve(prob)
    assert rep.converged and rep.monotone_ok and rep.apriori_bound_ok
    assert interior_error(rep, lambda x: x @ a) < 1e-6
    hist = np.asarray(rep.residual_history)
    assert hist[-1] <= rep.tol


def test_policy_solve_3d_linear():
    a = np.array([0.2, -0.5, 1.0])
    prob = DppProblem(DomainSpec.ball(1.0, 0.25, 3), 1.5, f=0.0, g=lambda x: x @ a, dx=0.25 / 4,
                      cross_count=12, axial_count=12, search=SearchConfig(64), method="policy")
    rep = solve(prob)
    assert rep.converged
    assert interior_error(rep, lambda x: x @ a) < 1e-8


def test_subsolution_properties():
    prob = DppProblem(DomainSpec.ball(1.0, 0.2), 1.5, f=0.0, g=1.0, dx=0.05)
    u0 = initial_subsolution(prob)
    assert subsolution_constant(prob) == pytest.approx(3.0 / 0.04)
    R = u0.meta["R"]
    assert R > 1.0
    centre = tuple(np.rint(-u0.origin / u0.spacing).astype(int))
    assert u0.values[centre] == pytest.approx(-75.0 * R * R)
    # u0 <= g on the collar and u0 <= T u0 in Omega
    assert np.all(u0.values[u0.classes == COLLAR] == 1.0)
    assert np.all(dpp_residual(u0, prob) >= -1e-12)


def test_g_extension_and_init_choice():
    prob = DppProblem(DomainSpec.ball(1.0, 0.2), 1.5, f=0.0, g=problems.cos_x1, dx=0.05,
                      method="policy", init="g-extension")
    ext = g_extension(prob)
    mask = ext.classes != 0
    assert np.allclose(ext.values[mask], np.cos(ext.coords()[mask][:, 0]))
    assert solve(prob).init == "g-extension"


def test_apriori_bound():
    zero_f = DppProblem(DomainSpec.ball(1.0, 0.2), 1.5, f=0.0, g=problems.sign_x1, dx=0.05)
    assert apriori_bound(zero_f) == 1.0
    # k = ceil(4 sup|x|^2 / eps^2) with the sup over interior and collar nodes
    with_f = zero_f.with_changes(f=1.0)
    d = with_f.disc
    r2 = float(np.max(np.sum(d.coords[d.interior | d.collar] ** 2, axis=-1)))
    k = math.ceil(4 * r2 / 0.04)
    assert apriori_bound(with_f) == pytest.approx(1.0 + 2.0 ** (2 * k + 1) * 0.04)
    # 2^{2k+1} overflows a double for small eps: the bound becomes +inf
    tiny = DppProblem(DomainSpec.ball(1.0, 0.05), 1.5, f=1.0, g=0.0, dx=0.0125)
    assert apriori_bound(tiny) == math.inf


def test_default_tol():
    prob = DppProblem(DomainSpec.ball(1.0, 0.2), 1.5, g=5.0, dx=0.05)
    assert default_tol(prob) == pytest.approx(5e-9)
    assert default_tol(prob.with_changes(tol=1e-4)) == 1e-4


def test_not_converged_carries_report():
    prob = DppProblem(DomainSpec.ball(1.0, 0.2), 1.5, g=problems.sign_x1, dx=0.05, max_iter=3)
    with pytest.raises(NotConverged) as info:
        solve(prob)
    assert info.value.report.iterations == 3
    rep = solve(prob, raise_on_failure=False)
    assert not rep.converged
    assert rep.final_residual > rep.tol


def test_comparison_check_rejects_mismatch(quad_report_02):
    other = DppProblem(DomainSpec.ball(1.0, 0.2), 1.5, dx=0.05, method="policy")
    r = solve(other)
    with pytest.raises(MismatchedProblems):
        comparison_check(other, r, quad_report_02)


def test_problem_validation():
    dom = DomainSpec.ball(1.0, 0.2)
    with pytest.raises(ConfigError):
        DppProblem(dom, 1.5, method="newton")
    with pytest.raises(ConfigError):
        DppProblem(dom, 1.5, init="zero")
    with pytest.raises(ConfigError):
        DppProblem(dom, 1.5, dx=0.1)
    with pytest.raises(ConfigError):
        DppProblem(dom, 1.5, tol=0.0)
    with pytest.raises(ConfigError):
        SearchConfig(2).bank_size(2)


def test_translation_invariance():
    a = np.array([1.0, 0.5])
    base = DppProblem(DomainSpec.ball(1.0, 0.2), 1.5, f=1.0, g=lambda x: np.sin(x @ a), dx=0.05,
                      method="policy")
    shift = np.array([0.25, -0.75])  # multiples of dx, exactly representable
    moved = DppProblem(DomainSpec.ball(1.0, 0.2, center=shift), 1.5, f=1.0,
                       g=lambda x: np.sin((x - shift) @ a), dx=0.05, method="policy")
    u, v = solve(base).solution, solve(moved).solution
    assert np.allclose(u.values, v.values, atol=1e-8, equal_nan=True)
