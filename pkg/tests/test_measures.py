"""Closed-form distribution tests, with quadrature and high-precision oracles."""

import numpy as np
import pytest
from scipy import integrate

from oddcf.constants import G, INV_NORM, g, g_squared
from oddcf.grid import Interval
from oddcf.measures import (
    MeasureDomainError,
    f0_conditional,
    invariance_suite,
    limit_F,
    limit_H,
    rho_cdf,
    rho_density,
    t_invariance_check,
    xi_cdf,
    xi_density,
)

# high-precision value of the invariant density at 0, frozen from
# mpmath: (1/(3 log G)) * (1/g + 1/(G+1)) = 2/(3 log G)
DENSITY_AT_ZERO = 1.3853912808233517


class TestRhoCdf:
    def test_endpoints(self):
        assert rho_cdf(0.0) == 0.0
        assert abs(rho_cdf(1.0) - 1.0) < 1e-12

    def test_value_at_g(self):
        # the log argument collapses to G^2 via gG = 1 and 1 + g = G
        assert abs(rho_cdf(g) - 2.0 / 3.0) < 1e-14

    def test_matches_quadrature_of_density(self):
        for x in (0.1, 0.25, 0.5, 1 / 3, 0.9, 1.0):
            val, err = integrate.quad(rho_density, 0.0, x, epsabs=1e-13)
            assert err < 1e-12
            assert abs(rho_cdf(x) - val) < 1e-11

    def test_domain(self):
        with pytest.raises(MeasureDomainError):
            rho_cdf(1.5)
        with pytest.raises(MeasureDomainError):
            rho_density(-0.1)

    def test_monotone_on_grid(self):
        vals = np.array([rho_cdf(t) for t in np.linspace(0, 1, 1001)])
        assert np.all(np.diff(vals) >= -1e-14)


class TestRhoDensity:
    def test_value_at_zero(self):
        assert abs(rho_density(0.0) - DENSITY_AT_ZERO) < 1e-14

    def test_normalization(self):
        val, err = integrate.quad(rho_density, 0.0, 1.0, epsabs=1e-13)
        assert abs(val - 1.0) < 1e-12

    def test_strictly_positive(self):
        assert min(rho_density(t) for t in np.linspace(0, 1, 101)) > 0

    def test_symmetric_closed_form(self):
        # 2G / ((G+1) - (1-x)^2), cross-evaluated at 11 points
        for x in np.linspace(0, 1, 11):
            alt = INV_NORM * 2.0 * G / ((G + 1.0) - (1.0 - x) ** 2)
            assert abs(rho_density(float(x)) - alt) < 1e-14


class TestLimitH:
    def test_endpoints(self):
        assert limit_H(0.0) == 0.0
        assert abs(limit_H(1.0) - 1.0) < 1e-12

    def test_identical_to_rho_cdf(self):
        for t in np.linspace(0, 1, 1001):
            assert abs(limit_H(float(t)) - rho_cdf(float(t))) < 1e-12

    def test_value_at_g(self):
        assert abs(limit_H(g) - 2.0 / 3.0) < 1e-14


class TestXi:
    def test_endpoints(self):
        assert xi_cdf(0.0) == 0.0
        assert abs(xi_cdf(G) - 1.0) < 1e-12

    def test_continuity_at_breakpoint(self):
        left = xi_cdf(np.nextafter(g_squared, 0.0))
        right = xi_cdf(g_squared)
        assert abs(left - right) < 1e-14

    def test_monotone_on_grid(self):
        vals = np.array([xi_cdf(t) for t in np.linspace(0, G, 1001)])
        assert np.all(np.diff(vals) >= -1e-14)

    def test_density_is_derivative(self):
        for w in (0.05, 0.2, g_squared - 1e-4, g_squared + 1e-4, 0.8, 1.4):
            h = 1e-7
            fd = (xi_cdf(w + h) - xi_cdf(w - h)) / (2 * h)
            assert abs(fd - xi_density(w)) < 1e-6

    def test_density_integrates_to_one(self):
        lo, _ = integrate.quad(xi_density, 0.0, g_squared, epsabs=1e-13)
        hi, _ = integrate.quad(xi_density, g_squared, G, epsabs=1e-13)
        assert abs(lo + hi - 1.0) < 1e-12


class TestLimitF:
    def test_zero_at_origin(self):
        assert limit_F(0.0, 1) == 0.0
        assert limit_F(0.0, -1) == 0.0

    def test_total_mass(self):
        total = limit_F(1.0, 1) + limit_F(1.0, -1)
        assert abs(total - 1.0) < 1e-10

    def test_minus_sign_sees_only_lower_state_space(self):
        # for e = -1 the integrand mass stops at xi's W1 share
        w1_mass = xi_cdf(g_squared)
        for x in (0.3, 0.7, 1.0):
            assert limit_F(x, -1) < w1_mass

    def test_monotone_in_x(self):
        for e in (1, -1):
            vals = [limit_F(x, e) for x in np.linspace(0, 1, 21)]
            assert np.all(np.diff(vals) >= -1e-12)

    def test_against_high_precision_oracle(self):
        from mpmath import mp, mpf, sqrt, log, quad

        mp.dps = 30
        Gm = (sqrt(5) + 1) / 2
        gm = Gm - 1
        g2m = gm * gm
        norm = 1 / (3 * log(Gm))

        def dens(y):
            return norm * (2 / (1 - y * y)) if y < g2m else norm / (1 + y)

        for x, e in [(0.5, 1), (0.5, -1), (1.0, 1), (0.25, -1)]:
            lower = quad(lambda y: (1 - y * y) * x / (2 * (1 + e * y * x)) * dens(y), [0, g2m])
            upper = quad(lambda y: (1 + y) * x / (1 + y * x) * dens(y), [g2m, Gm]) if e == 1 else mpf(0)
            assert abs(limit_F(x, e) - float(lower + upper)) < 1e-10


class TestF0Conditional:
    def test_at_zero_state(self):
        for e in (1, -1):
            assert abs(f0_conditional(0.8, e, 0.0) - 0.4) < 1e-15

    def test_upper_state_minus_sign_vanishes(self):
        for s in (g_squared, 0.5, 1.0, G):
            assert f0_conditional(0.7, -1, s) == 0.0

    def test_upper_state_plus_sign_saturates(self):
        for s in (g_squared, 0.9, 1.3):
            assert abs(f0_conditional(1.0, 1, s) - 1.0) < 1e-15

    def test_lower_state_formula(self):
        x, s = 0.6, 0.2
        assert abs(f0_conditional(x, 1, s) - (1 - s * s) * x / (2 * (1 + s * x))) < 1e-15
        assert abs(f0_conditional(x, -1, s) - (1 - s * s) * x / (2 * (1 - s * x))) < 1e-15


class TestTInvariance:
    def test_full_interval(self):
        res = t_invariance_check(Interval(0.0, 1.0))
        assert res.residual < 1e-12

    def test_half_interval(self):
        assert t_invariance_check(Interval(0.0, 0.5)).residual <= 1e-10

    def test_middle_interval(self):
        assert t_invariance_check(Interval(1 / 3, 2 / 3)).residual <= 1e-10

    def test_suite_of_twenty(self):
        results = invariance_suite()
        assert len(results) == 20
        assert max(r.residual for r in results) <= 1e-9

    def test_tail_budget_enforced(self):
        with pytest.raises(ArithmeticError):
            t_invariance_check(Interval(0.0, 0.5), i_max=51, tail_tol=1e-13)

    def test_branch_series_matches_direct_sum_oracle(self):
        # brute-force branch sum at high cutoff vs the closed-tail value
        iv = Interval(0.2, 0.7)
        res = t_invariance_check(iv)
        brute = 0.0
        for i in range(1, 2_000_001, 2):
            brute += rho_cdf(1.0 / (i + iv.lo)) - rho_cdf(1.0 / (i + iv.hi))
            if i >= 3:
                brute += rho_cdf(1.0 / (i - iv.hi)) - rho_cdf(1.0 / (i - iv.lo))
        # remaining brute tail is below density(0) * width / i ~ 7e-7; bracket it
        assert abs(res.pullback_mass - brute) < 1e-6
        assert res.pullback_mass >= brute - 1e-12
