"""Kernel, operator, variation-bound, and convergence-rate tests for the ratio chain."""

import numpy as np
import pytest

from oddcf.constants import G, THETA, THETA1, THETA2, g_squared
from oddcf.grid import GridFunction, Interval, state_grid
from oddcf.markov import (
    PairIndex,
    TransitionMatrix,
    TruncationError,
    apply_operator_at,
    check_prop1,
    check_prop1_indicator,
    family_tail_mass,
    indicator_jump_points,
    kernel_P,
    n_step_Q,
    operator_U,
    random_bv_functions,
    row_sum_residual,
    state_map_u,
    stationarity_residual,
    stationarity_suite,
    theorem_thG_check,
    transition_cdf,
    transition_cdf_nodes,
    variation,
)
from oddcf.measures import xi_cdf, xi_density


def brute_kernel_sum(w, predicate, i_top=400_001):
    """Enumeration oracle: sum P(w, (e, i)) over pairs passing the predicate,
    for odd i <= i_top, plus a [0, tail] bracket for the rest."""
    total = 0.0
    for e in (1, -1):
        for i in range(1, i_top, 2):
            if predicate(e, i):
                total += kernel_P(w, PairIndex(e, i))
    tail = float(
        family_tail_mass(np.array([w]), 1, i_top + 2)[0]
        + family_tail_mass(np.array([w]), -1, i_top + 2)[0]
    )
    return total, tail


class TestKernel:
    def test_spot_values_at_zero(self):
        assert kernel_P(0.0, PairIndex(1, 1)) == 0.25
        assert kernel_P(0.0, PairIndex(-1, 1)) == 0.25
        for i in (3, 5, 9):
            expected = 1.0 / ((i - 1.0) * (i + 1.0))
            assert abs(kernel_P(0.0, PairIndex(1, i)) - expected) < 1e-15

    def test_upper_side_kills_minus_sign(self):
        for w in (g_squared, 0.5, 1.0, G):
            for i in (1, 3, 11):
                assert kernel_P(w, PairIndex(-1, i)) == 0.0

    def test_telescoping_row_sum_at_zero(self):
        # i = 1 carries 1/2; odd i >= 3 telescopes 2/((i-1)(i+1)) to 1/2
        total = kernel_P(0.0, PairIndex(1, 1)) + kernel_P(0.0, PairIndex(-1, 1))
        partial = sum(
            kernel_P(0.0, PairIndex(e, i)) for e in (1, -1) for i in range(3, 4001, 2)
        )
        assert abs(total - 0.5) < 1e-15
        assert abs(partial - 0.5) < 1e-3  # truncated telescope approaches 1/2

    def test_row_sums_with_tail(self):
        w = np.linspace(0.0, G, 101)
        assert row_sum_residual(w).max() <= 1e-10

    def test_family_tail_against_brute_force(self):
        for w in (0.0, 0.2, g_squared + 0.1, 1.5):
            for e in (1, -1):
                for start in (3, 9, 101):
                    brute = sum(
                        kernel_P(w, PairIndex(e, i)) for i in range(start, 300_000, 2)
                    )
                    closed = float(family_tail_mass(np.array([w]), e, start)[0])
                    assert abs(closed - brute) < 1e-5


class TestStateMap:
    def test_examples(self):
        assert state_map_u(0.0, PairIndex(1, 1)) == 1.0
        assert abs(state_map_u(0.3, PairIndex(-1, 3)) - 1.0 / 2.7) < 1e-15
        assert abs(state_map_u(1.0, PairIndex(-1, 3)) - 1.0 / (3.0 - g_squared)) < 1e-15

    def test_range(self):
        for w in np.linspace(0, G, 23):
            for e in (1, -1):
                for i in (1, 3, 7, 31):
                    u = state_map_u(float(w), PairIndex(e, i))
                    assert 0.0 < u <= G + 1e-15


class TestTransitionCdf:
    def test_total_mass(self):
        for w in (0.0, 0.3, 1.0, G):
            assert abs(transition_cdf(w, G) - 1.0) < 1e-12

    def test_zero_target(self):
        assert transition_cdf(0.5, 0.0) == 0.0

    def test_mass_just_above_one_third(self):
        # at w = 0 all pairs with i >= 3 land at 1/i <= 1/3: half the mass
        assert abs(transition_cdf(0.0, 1.0 / 3.0 + 1e-12) - 0.5) < 1e-12

    def test_matches_enumeration(self):
        for w, y in [(0.0, 0.34), (0.2, 0.9), (1.0, 0.51), (g_squared, 1.3), (0.3, 0.05)]:
            brute, tail = brute_kernel_sum(
                w, lambda e, i, w=w, y=y: state_map_u(w, PairIndex(e, i)) <= y
            )
            got = transition_cdf(w, y)
            assert brute - 1e-9 <= got <= brute + tail + 1e-9

    def test_monotone_in_y(self):
        for w in (0.0, 0.7, 1.2):
            vals = [transition_cdf(w, y) for y in np.linspace(0, G, 101)]
            assert np.all(np.diff(vals) >= 0.0)


class TestOperator:
    def test_preserves_constants(self):
        nodes = state_grid(257)
        one = GridFunction(nodes, np.ones_like(nodes))
        out = operator_U(one, i_max=2001, tail_tol=1e-2)
        assert np.abs(out.values - 1.0).max() < 1e-12

    def test_tail_budget_enforced(self):
        nodes = state_grid(33)
        one = GridFunction(nodes, np.ones_like(nodes))
        with pytest.raises(TruncationError):
            operator_U(one, i_max=51, tail_tol=1e-6)

    def test_indicator_two_path_consistency(self):
        # U f_y computed by the generic operator must match the exact
        # closed-form one-step law at every node; the jump at y is made
        # exactly representable by a doubled node
        y = 0.62
        jumps = indicator_jump_points(y)
        nodes = state_grid(513, extra=np.concatenate([jumps, [y, np.nextafter(y, G)]]))
        fy = GridFunction(nodes, np.where(nodes <= y, 1.0, 0.0))
        out = operator_U(fy, i_max=20_001, tail_tol=1e-3)
        exact = transition_cdf_nodes(nodes, y)
        assert np.abs(out.values - exact).max() < 1e-10

    def test_stationarity_of_mean_for_smooth_functions(self):
        from scipy import integrate

        nodes = state_grid(1025)
        tests = [
            lambda w: np.ones_like(w),
            lambda w: w,
            lambda w: w * w,
            lambda w: np.sin(w),
            lambda w: np.exp(-w),
        ]
        for fn in tests:
            f = GridFunction(nodes, fn(nodes), "pchip")

            def uf_weighted(w):
                return apply_operator_at(f, w, i_max=4001) * xi_density(w)

            def f_weighted(w):
                return float(f(w)) * xi_density(w)

            lhs = sum(
                integrate.quad(uf_weighted, a, b, epsabs=1e-10, limit=100)[0]
                for a, b in ((0.0, g_squared), (g_squared, G))
            )
            rhs = sum(
                integrate.quad(f_weighted, a, b, epsabs=1e-10, limit=100)[0]
                for a, b in ((0.0, g_squared), (g_squared, G))
            )
            assert abs(lhs - rhs) < 1e-6


class TestTransitionMatrix:
    def test_rows_are_stochastic(self):
        tm = TransitionMatrix(state_grid(257), i_max=501)
        assert np.abs(tm.matrix.sum(axis=1) - 1.0).max() < 1e-12

    def test_matches_direct_operator_on_smooth_function(self):
        nodes = state_grid(1025)
        tm = TransitionMatrix(nodes, i_max=2001)
        f = GridFunction(nodes, np.cos(nodes))
        direct = operator_U(f, i_max=2001, tail_tol=1e-2)
        via_matrix = tm.apply(f.values)
        assert np.abs(direct.values - via_matrix).max() < 1e-6

    def test_delta_requires_a_node(self):
        tm = TransitionMatrix(state_grid(65), i_max=101)
        with pytest.raises(ValueError):
            tm.delta(0.1234567)


class TestNStep:
    def test_one_step_exact(self):
        for s0, y in [(0.0, 0.4), (0.5, 0.8), (1.0, 1.0)]:
            assert n_step_Q(s0, y, 1) == transition_cdf(s0, y)

    def test_total_mass_each_n(self):
        for n in (1, 2, 3):
            assert abs(n_step_Q(0.0, G, n, grid_size=513) - 1.0) < 1e-9

    def test_converges_to_stationary_law(self):
        tm = TransitionMatrix(state_grid(1025, extra=[0.0]), i_max=1001)
        for y in (0.3, 0.9, 1.4):
            v10 = n_step_Q(0.0, y, 10, tm=tm)
            assert abs(v10 - xi_cdf(y)) <= THETA**10
            v3 = n_step_Q(0.0, y, 3, tm=tm)
            assert abs(v3 - xi_cdf(y)) <= THETA**3

    def test_monotone_in_y(self):
        tm = TransitionMatrix(state_grid(513, extra=[0.2]), i_max=501)
        vals = [n_step_Q(0.2, y, 4, tm=tm) for y in np.linspace(0, G, 31)]
        assert np.all(np.diff(vals) >= -1e-9)


class TestVariation:
    def test_indicator(self):
        nodes = np.array([0.0, 0.5, np.nextafter(0.5, 1.0), G])
        f = GridFunction(nodes, np.array([1.0, 1.0, 0.0, 0.0]))
        assert variation(f) == 1.0

    def test_constant(self):
        nodes = state_grid(65)
        assert variation(GridFunction(nodes, np.full(nodes.size, 0.7))) == 0.0

    def test_identity_map(self):
        nodes = state_grid(65)
        assert abs(variation(GridFunction(nodes, nodes.copy())) - G) < 1e-14

    def test_subinterval(self):
        nodes = state_grid(257)
        f = GridFunction(nodes, nodes.copy())
        assert abs(variation(f, Interval(0.25, 0.75)) - 0.5) < 1e-12


class TestProp1:
    def test_constant_function(self):
        nodes = state_grid(129)
        rep = check_prop1(GridFunction(nodes, np.ones(nodes.size)))
        assert rep.var_Uf < 1e-10
        assert rep.satisfied

    def test_indicator_at_breakpoint(self):
        rep = check_prop1_indicator(g_squared, grid_size=1025)
        assert rep.var_Uf <= THETA1 + THETA2 + 1e-6
        assert rep.satisfied

    def test_indicator_grid_detects_upper_range_violations(self):
        # the harness is a falsification device and it does falsify: for
        # y in roughly (0.96, G) the image U f_y carries two jumps (the
        # exit of the pair (-1, 1) and the split at g^2) whose sizes sum
        # to 2 (1+g^2)/(2G) ~ 0.854102, exceeding theta1 + theta2.
        two_jumps = (1.0 + g_squared) / G
        for y in np.linspace(0.0, G, 21):
            rep = check_prop1_indicator(float(y), grid_size=1025)
            if 1.0 <= y < G:
                assert not rep.satisfied
                assert abs(rep.var_Uf - two_jumps) < 2e-4
            elif y <= 0.95 or y == G:
                assert rep.satisfied, f"unexpected violation at y={y}: {rep}"

    def test_random_suite(self):
        for f in random_bv_functions(50, seed=20_251):
            rep = check_prop1(f, out_grid_size=513)
            assert rep.satisfied, f"violation: {rep}"


class TestStationarity:
    def test_suite(self):
        results = stationarity_suite()
        assert len(results) == 10
        assert max(res for _, res in results) <= 1e-8

    def test_single_interval(self):
        assert stationarity_residual(Interval(0.0, 1.0)) <= 1e-9


@pytest.fixture(scope="module")
def thg_report():
    return theorem_thG_check(s0=0.0, n_max=12, grid_size=2049, matrix_i_max=1001)


class TestTheoremBound:

    def test_all_rows_pass(self, thg_report):
        assert all(thg_report.column("passed"))

    def test_f0_assembly_matches_closed_form(self, thg_report):
        assert thg_report.summary["f0_assembly_residual"] < 1e-12

    def test_errors_eventually_beat_bound_without_slack(self, thg_report):
        err = thg_report.column("max_G_err")
        bound = thg_report.column("theta_bound")
        for n in range(1, 9):
            assert err[n] <= bound[n]

    def test_error_decreases_until_discretization_floor(self, thg_report):
        # sup-distance to the stationary law is non-increasing while the
        # signal dominates the grid bias; at the plateau only noise is left
        err = thg_report.column("max_G_err")
        floor = 2.0 * err[-1]
        for n in range(1, len(err) - 1):
            if err[n] > floor:
                assert err[n + 1] <= err[n] + 1e-9

    def test_other_start_states(self):
        for s0 in (1.0 / 3.0, 1.0):
            rep = theorem_thG_check(s0=s0, n_max=8, grid_size=1025, matrix_i_max=501)
            assert all(rep.column("passed"))
