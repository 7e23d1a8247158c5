import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from levelcurv import DivergentIntegral, NoGraphSolution
from levelcurv import radial as rd

mp.mp.dps = 30


def _drop_by_trapezoid(c, a, b, m, nodes=200_001):
    """Height drop with the endpoint singularity removed by r = a + w^2,
    integrated by a plain trapezoid rule on the smooth integrand."""
    w = np.linspace(0.0, math.sqrt(b - a), nodes)
    r = a + w * w
    den = np.sqrt(r ** (2 * m) - c * c)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = 2 * w * c / den
    if c == a**m:  # integrand tends to 2c / sqrt(2 m a^(2m-1))
        g[0] = 2 * c / math.sqrt(2 * m * a ** (2 * m - 1))
    return np.trapezoid(g, w) if hasattr(np, "trapezoid") else np.trapz(g, w)


def _bisect(f, lo, hi, iters=80):
    flo = f(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------

@pytest.mark.parametrize("kw", [dict(dim_n=1, r_outer=3, r_inner=2),
                                dict(dim_n=3, r_outer=2, r_inner=2),
                                dict(dim_n=3, r_outer=3, r_inner=-1),
                                dict(dim_n=3, r_outer=3, r_inner=2, height=0.0),
                                dict(dim_n=2.5, r_outer=3, r_inner=2)])
def test_config_rejects(kw):
    with pytest.raises(ValueError):
        rd.RadialConfig(**kw)


def test_height_drop_is_monotone_in_flux():
    cfg = rd.RadialConfig(3, 10.0, 2.0)
    cs = np.linspace(0.1, cfg.c_max, 25)
    drops = [rd.height_drop(c, cfg) for c in cs]
    assert np.all(np.diff(drops) > 0)
    with pytest.raises(ValueError):
        rd.height_drop(cfg.c_max * 1.01, cfg)


def test_unattainable_height():
    cfg = rd.RadialConfig(3, 2.5, 2.0, height=5.0)
    with pytest.raises(NoGraphSolution) as info:
        rd.solve_flux(cfg)
    assert info.value.max_drop == pytest.approx(rd.max_height_drop(cfg), rel=1e-12)


# --------------------------------------------------------------------------
# flux constant and profile against independent quadrature
# --------------------------------------------------------------------------

def test_flux_constant_against_trapezoid_bisection():
    cfg = rd.RadialConfig(3, 10.0, 2.0, height=1.0)
    sol = rd.solve_flux(cfg)
    c_ref = _bisect(lambda c: _drop_by_trapezoid(c, 2.0, 10.0, 2) - 1.0, 1e-3, 4.0, iters=60)
    assert abs(sol.c - c_ref) < 1e-8
    assert abs(sol.residual) < 1e-12


def test_max_drop_against_trapezoid():
    cfg = rd.RadialConfig(3, 10.0, 2.0)
    assert rd.max_height_drop(cfg) == pytest.approx(_drop_by_trapezoid(4.0, 2.0, 10.0, 2),
                                                    rel=1e-8)


def test_plane_profile_closed_form():
    cfg = rd.RadialConfig(2, 3.0, 1.2, height=0.5)
    sol = rd.solve_flux(cfg)
    r = np.linspace(1.2, 3.0, 9)
    c = sol.c
    exact = 0.5 - c * (np.arccosh(r / c) - np.arccosh(1.2 / c))
    np.testing.assert_allclose(sol.u(r), exact, atol=1e-12)
    np.testing.assert_allclose(sol.u(3.0), 0.0, atol=1e-12)


def test_catenoid_height_against_mpmath():
    for n, r in [(3, 5.0), (4, 3.0), (5, 7.0)]:
        ref = mp.quad(lambda s: 1 / mp.sqrt(s ** (2 * (n - 1)) - 1), [2, r])
        assert rd.catenoid_u(r, n)[0] == pytest.approx(float(ref), rel=1e-12)


def test_catenoid_height_against_simpson():
    # chunked composite Simpson on s = 2 + w^2 with ten million panels
    n, r, N = 3, 5.0, 10_000_000
    W = math.sqrt(r - 2)
    total, chunk = 0.0, 1_000_000
    h = W / N
    for start in range(0, N, chunk):
        k = np.arange(start, start + chunk + 1)
        w = k * h
        s = 2 + w * w
        g = np.empty_like(w)
        g[w > 0] = 2 * w[w > 0] / np.sqrt(s[w > 0] ** 4 - 1)
        g[w == 0] = 0.0
        wt = np.where(k % 2 == 1, 4.0, 2.0)
        wt[0] = 1.0 if start == 0 else 2.0
        # the node shared with the next chunk is counted there
        wt[-1] = 1.0 if start + chunk == N else 0.0
        total += np.dot(wt, g)
    total *= h / 3
    assert rd.catenoid_u(r, n)[0] == pytest.approx(total, rel=1e-10)


def test_catenoid_plane_closed_form():
    r = np.array([2.0, 3.0, 10.0])
    np.testing.assert_allclose(rd.catenoid_u(r, 2), np.arccosh(r) - np.arccosh(2.0), rtol=0,
                               atol=1e-15)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_catenoid_total_height_against_mpmath(n):
    ref = mp.quad(lambda s: 1 / mp.sqrt(s ** (2 * (n - 1)) - 1), [2, mp.inf])
    assert rd.catenoid_R(n) == pytest.approx(float(ref), rel=1e-10)


def test_catenoid_tail_diverges_in_plane():
    with pytest.raises(DivergentIntegral):
        rd.catenoid_tail(3.0, 2)
    with pytest.raises(DivergentIntegral):
        rd.asymptotic_residual(3.0, 2)


def test_catenoid_invariants_examples():
    grad, K, phi = rd.catenoid_invariants(2.0, 3)
    assert grad == pytest.approx(1 / math.sqrt(15))
    assert K == pytest.approx(0.25) and phi == pytest.approx(0.5)
    grad, K, phi = rd.catenoid_invariants(2.0, 2)
    assert phi == 1.0 and K == 0.5


def test_catenoid_solution_matches_closed_forms():
    sol = rd.catenoid_solution(3, 10.0)
    r = np.linspace(2.0, 10.0, 7)
    grad, K, phi = rd.catenoid_invariants(r, 3)
    np.testing.assert_allclose(sol.grad_norm(r), grad, rtol=1e-14)
    np.testing.assert_allclose(sol.K(r), K, rtol=1e-14)
    np.testing.assert_allclose(sol.phi(r), phi, rtol=1e-14)
    # rebuilding the ring as a boundary-value problem recovers c = 1
    assert rd.solve_flux(sol.config).c == pytest.approx(1.0, abs=1e-10)


# --------------------------------------------------------------------------
# asymptotics
# --------------------------------------------------------------------------

@pytest.mark.parametrize("n", [3, 4, 5])
def test_tail_remainder_decays_at_the_predicted_rate(n):
    m = n - 1
    r = np.array([10.0, 20.0, 40.0, 80.0])
    res = rd.asymptotic_residual(r, n, convention="magnitude")
    predicted = r ** (1 - 3 * m) / (2 * (3 * m - 1))
    # once the remainder sinks below the rounding of R - u itself it is noise
    resolved = predicted > 1e3 * np.finfo(float).eps * r ** (2 - n)
    assert resolved[:2].all()
    np.testing.assert_allclose(res[resolved] / predicted[resolved], 1.0, atol=0.05)


@pytest.mark.parametrize("n,consistent", [(3, True), (4, False), (5, True), (6, False)])
def test_verbatim_sign(n, consistent):
    assert rd.verbatim_sign_consistent(n) is consistent
    res = rd.asymptotic_residual(np.array([10.0, 80.0]), n, convention="verbatim")
    if consistent:
        assert np.all(np.abs(res) < 1e-2)
    else:
        # the wrong-sign term makes the residual twice the leading term
        lead = np.array([10.0, 80.0]) ** (2 - n) / (n - 2)
        np.testing.assert_allclose(res / lead, 2.0, rtol=1e-2)


def test_unknown_convention():
    with pytest.raises(ValueError):
        rd.asymptotic_residual(10.0, 3, convention="other")


# --------------------------------------------------------------------------
# level-set parametrization
# --------------------------------------------------------------------------

def test_inverse_profile_roundtrip_and_ode():
    cfg = rd.RadialConfig(3, 4.0, 2.0, height=0.8)
    sol = rd.solve_flux(cfg)
    t = np.linspace(0.0, 0.8, 41)
    r = sol.r_of_t(t)
    assert r[0] == 4.0 and r[-1] == 2.0
    np.testing.assert_allclose(sol.u(r), t, atol=1e-12)
    # finite-difference derivatives of r(t) against the closed forms
    d = 1e-4
    tm = t[5:-5]
    rp, r0, rm = sol.r_of_t(tm + d), sol.r_of_t(tm), sol.r_of_t(tm - d)
    np.testing.assert_allclose((rp - rm) / (2 * d), sol.r_t(r0), rtol=1e-7)
    np.testing.assert_allclose((rp - 2 * r0 + rm) / d**2, sol.r_tt(r0), rtol=1e-4)
    # r_tt = (n - 1)(1 + r_t^2)/r
    np.testing.assert_allclose(sol.r_tt(r0), 2 * (1 + sol.r_t(r0) ** 2) / r0, rtol=1e-12)


def test_phi_second_derivative_matches_finite_difference():
    sol = rd.solve_flux(rd.RadialConfig(4, 3.0, 2.0, height=0.4))
    t = np.linspace(0.05, 0.35, 7)
    d = 1e-4
    phi = lambda tt: sol.phi(sol.r_of_t(tt))
    fd = (phi(t + d) - 2 * phi(t) + phi(t - d)) / d**2
    np.testing.assert_allclose(fd, sol.phi_tt(sol.r_of_t(t)), rtol=1e-4)


def test_profile_outside_ring():
    sol = rd.solve_flux(rd.RadialConfig(3, 4.0, 2.0))
    with pytest.raises(ValueError):
        sol.u(5.0)
    with pytest.raises(ValueError):
        sol.r_of_t(2.0)


@given(st.integers(2, 5), st.floats(0.5, 3.0), st.floats(1.1, 4.0), st.floats(0.05, 1.0))
@settings(max_examples=25, deadline=None)
def test_random_rings_solve_consistently(n, r_in, ratio, frac):
    cfg0 = rd.RadialConfig(n, r_in * ratio, r_in)
    top = rd.max_height_drop(cfg0)
    assume(top * frac > 1e-3)
    cfg = rd.RadialConfig(n, r_in * ratio, r_in, height=top * frac)
    sol = rd.solve_flux(cfg)
    assert 0 < sol.c <= cfg.c_max
    assert abs(sol.residual) < 1e-10 * max(1.0, cfg.height)
    r = np.linspace(r_in * 1.0001, r_in * ratio, 5)
    np.testing.assert_allclose(sol.first_integral(r), sol.c, rtol=1e-10)
    u = sol.u(r)
    assert np.all(np.diff(u) < 0)
