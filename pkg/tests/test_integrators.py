import math

import numpy as np
import pytest
from scipy.integrate import quad

from abcfab.core import ab_norm
from abcfab.errors import DomainError
from abcfab.integrators import (
    Grid,
    bootstrap,
    full_history_increment,
    integrate,
    integrate_full_history,
    integrate_reference,
    integrate_two_step,
    moment_integrals,
    weight_table,
    weights,
)
from abcfab.systems import available_systems, builtin_system, exact_tbeta

BUILTINS = [n for n in available_systems() if n in
            ("chaos3d_a", "chaos3d_b", "hyper4d", "tbeta", "linear_ty")]


def _quad_weights(n, alpha, h):
    """Coefficients of f_n, f_n-1 from adaptive quadrature with the algebraic weight."""
    ab = ab_norm(alpha)
    c = (1.0 - alpha) / ab
    scale = alpha / (ab * math.gamma(alpha))

    def memory(T, node):
        # int_0^T (T - tau)^(alpha-1) (tau - node) / h dtau
        val, _ = quad(lambda tau: (tau - node) / h, 0.0, T, weight="alg", wvar=(0.0, alpha - 1.0),
                      epsabs=1e-14, epsrel=1e-12, limit=200)
        return val

    tn, tn1, tnm1 = n * h, (n + 1) * h, (n - 1) * h
    w1 = c + scale * (memory(tn1, tnm1) - memory(tn, tnm1))
    w2 = -c - scale * (memory(tn1, tn) - memory(tn, tn))
    return w1, w2


class TestGrid:
    def test_from_final_time(self):
        g = Grid.from_final_time(0.01, 100.0)
        assert g.n_steps == 10_000 and g.times[-1] == pytest.approx(100.0)

    @pytest.mark.parametrize("h, T", [(0.03, 0.1), (0.0, 1.0), (0.1, 0.0)])
    def test_rejects(self, h, T):
        with pytest.raises(DomainError):
            Grid.from_final_time(h, T)


class TestWeights:
    @pytest.mark.parametrize("alpha", [0.3, 0.5, 0.9])
    @pytest.mark.parametrize("n", [1, 2, 7, 40])
    def test_against_adaptive_quadrature(self, alpha, n):
        w = weights(n, alpha, 0.1)
        q1, q2 = _quad_weights(n, alpha, 0.1)
        assert w.omega1 == pytest.approx(q1, rel=1e-10)
        assert w.omega2 == pytest.approx(q2, rel=1e-10)

    @pytest.mark.parametrize("n", [1, 5, 1000])
    def test_classical_example(self, n):
        w = weights(n, 1.0, 0.1)
        assert (w.omega1, w.omega2) == pytest.approx((0.15, -0.05), rel=1e-12)

    def test_variants_differ(self):
        a = weights(1, 0.5, 0.1, "corrected")
        b = weights(1, 0.5, 0.1, "as_printed")
        assert abs(a.omega1 - b.omega1) > 1e-3 and abs(a.omega2 - b.omega2) > 1e-3

    def test_as_printed_misses_classical_limit(self):
        # the stray term leaves w2 = -1 at alpha = 1, n = 1 instead of -h/2
        w = weights(1, 1.0, 0.1, "as_printed")
        assert w.omega1 == pytest.approx(0.15)
        assert w.omega2 == pytest.approx(-1.0)

    def test_table_matches_single_calls(self):
        w1, w2 = weight_table(20, 0.6, 0.05)
        for n in (1, 10, 20):
            w = weights(n, 0.6, 0.05)
            assert (w1[n - 1], w2[n - 1]) == pytest.approx((w.omega1, w.omega2), rel=1e-14)

    def test_large_n_stays_finite(self):
        w1, w2 = weight_table(200_000, 0.7, 0.01)
        assert np.all(np.isfinite(w1)) and np.all(np.isfinite(w2))

    @pytest.mark.parametrize("n", [0, -1, 1.5])
    def test_precondition(self, n):
        with pytest.raises(DomainError):
            weights(n, 0.5, 0.1)

    def test_unknown_variant(self):
        with pytest.raises(DomainError):
            weight_table(3, 0.5, 0.1, "fancy")

    @pytest.mark.parametrize("alpha", [0.2, 0.8])
    @pytest.mark.parametrize("n", [0, 1, 30])
    def test_moment_integrals(self, alpha, n):
        j0, j1 = moment_integrals(n, alpha)
        r0, _ = quad(lambda s: s ** (alpha - 1.0), n, n + 1, limit=200)
        r1, _ = quad(lambda s: s ** (alpha - 1.0) * (s - n), n, n + 1, limit=200)
        assert j0[0] == pytest.approx(r0, rel=1e-10)
        assert j1[0] == pytest.approx(r1, rel=1e-10)


class TestBootstrap:
    def test_zero_rhs(self, zero_system):
        u0 = np.array([2.5])
        for method in ("rk4_classical", "fractional_euler"):
            assert bootstrap(u0, zero_system, 0.1, 0.5, method)[0] == 2.5

    def test_rk4_exact_for_linear_forcing(self):
        u1 = bootstrap([0.0], builtin_system("tbeta"), 0.1, 1.0, "rk4_classical")
        assert u1[0] == pytest.approx(0.005, rel=1e-14)

    def test_fractional_euler_close_to_reference(self):
        spec = builtin_system("tbeta")
        h = 0.01
        u1 = bootstrap([0.0], spec, h, 0.5, "fractional_euler")
        ref = integrate_reference(spec, None, Grid(h, 1), 0.5, refine=64).states[1]
        assert abs(u1[0] - ref[0]) <= h

    def test_unknown_method(self):
        with pytest.raises(DomainError):
            bootstrap([0.0], builtin_system("tbeta"), 0.1, 0.5, "euler")


def _direct_ab2(spec, h, n_steps):
    u = np.empty((n_steps + 1, spec.dimension))
    u[0] = spec.default_ic
    u[1] = bootstrap(u[0], spec, h, 1.0)
    for n in range(1, n_steps):
        u[n + 1] = u[n] + h * (1.5 * spec(n * h, u[n]) - 0.5 * spec((n - 1) * h, u[n - 1]))
    return u


class TestTwoStep:
    @pytest.mark.parametrize("name", BUILTINS)
    def test_classical_limit_is_ab2(self, name):
        spec = builtin_system(name)
        traj = integrate_two_step(spec, None, Grid(1e-4, 1000), 1.0)
        np.testing.assert_allclose(traj.states, _direct_ab2(spec, 1e-4, 1000), rtol=0, atol=1e-12)

    def test_zero_rhs_constant(self, zero_system):
        traj = integrate_two_step(zero_system, [3.0], Grid(0.1, 20), 0.6)
        assert np.all(traj.states == 3.0)

    def test_linear_forcing_classical(self):
        traj = integrate_two_step(builtin_system("tbeta"), None, Grid.from_final_time(0.01, 2.0), 1.0)
        assert abs(traj.final[0] - 2.0) <= 5e-3

    def test_manifest(self):
        traj = integrate_two_step(builtin_system("tbeta"), None, Grid(0.1, 5), 0.5, "as_printed",
                                  "fractional_euler")
        assert traj.meta["variant"] == "as_printed"
        assert traj.meta["bootstrap"] == "fractional_euler"
        assert traj.meta["scheme"] == "two_step"
        assert not traj.truncated and len(traj) == 6

    def test_immutable_result(self):
        traj = integrate_two_step(builtin_system("tbeta"), None, Grid(0.1, 5), 0.5)
        with pytest.raises(ValueError):
            traj.states[0, 0] = 1.0

    def test_needs_two_steps(self):
        with pytest.raises(DomainError):
            integrate_two_step(builtin_system("tbeta"), None, Grid(0.1, 1), 0.5)

    def test_wrong_ic_size(self):
        with pytest.raises(DomainError):
            integrate_two_step(builtin_system("chaos3d_a"), [1.0, 2.0], Grid(0.1, 3), 0.5)

    def test_divergence_truncates(self):
        traj = integrate_two_step(builtin_system("chaos3d_a"), None, Grid.from_final_time(0.01, 100.0), 0.75)
        assert traj.truncated
        assert np.all(np.isfinite(traj.states))
        assert len(traj) == traj.meta["truncated_at"]
        assert "non-finite" in traj.meta["truncation_reason"]
        assert np.isfinite(traj.meta["max_stability"])

    @pytest.mark.parametrize("beta", [1.0, 2.0])
    def test_stability_diagnostic_bounded(self, beta):
        h, T = 0.01, 2.0
        traj = integrate_two_step(builtin_system("tbeta", {"beta": beta}), None, Grid.from_final_time(h, T), 0.7)
        assert np.max(traj.stability) <= h * beta * T ** (beta - 1.0) * (1 + 1e-12)

    def test_error_plateaus_below_classical_order(self):
        # for alpha < 1 the two-step error with smooth forcing does not vanish as h -> 0
        errs = []
        for h in (0.02, 0.01, 0.005):
            traj = integrate_two_step(builtin_system("tbeta", {"beta": 2.0}), None, Grid.from_final_time(h, 2.0), 0.7)
            errs.append(np.max(np.abs(traj.states[1:, 0] - exact_tbeta(traj.times[1:], 0.7, 2.0))))
        assert errs[2] > 0.5 * errs[0]


class TestFullHistory:
    def test_zero_rhs_constant(self, zero_system):
        traj = integrate_full_history(zero_system, [1.5], Grid(0.1, 10), 0.4)
        assert np.all(traj.states == 1.5)

    def test_closed_form(self):
        traj = integrate_full_history(builtin_system("tbeta"), None, Grid.from_final_time(0.01, 1.0), 0.5)
        exact = exact_tbeta(1.0, 0.5, 1.0)
        assert abs(traj.final[0] - exact) <= 1e-2 * exact

    def test_agrees_with_reference(self):
        spec = builtin_system("linear_ty")
        grid = Grid.from_final_time(0.01, 5.0)
        a = integrate_full_history(spec, None, grid, 0.8).states
        b = integrate_reference(spec, None, grid, 0.8, refine=8).states
        assert np.max(np.abs(a - b) / np.abs(b)) <= 1e-3

    def test_converges_on_closed_form(self):
        errs = []
        for h in (0.04, 0.02, 0.01):
            traj = integrate_full_history(builtin_system("tbeta", {"beta": 2.0}), None,
                                          Grid.from_final_time(h, 2.0), 0.6)
            errs.append(np.max(np.abs(traj.states[1:, 0] - exact_tbeta(traj.times[1:], 0.6, 2.0))))
        assert errs[0] > errs[1] > errs[2]

    def test_increment_is_nonlocal(self, rng):
        f = rng.normal(size=(12, 2))
        base = full_history_increment(f, 0.6, 0.1)
        for j in range(0, 10):
            g = f.copy()
            g[j] += 1.0
            assert not np.allclose(full_history_increment(g, 0.6, 0.1), base, rtol=0, atol=1e-14)

    def test_increment_is_local_at_alpha_one(self, rng):
        f = rng.normal(size=(12, 1))
        base = full_history_increment(f, 1.0, 0.1)
        g = f.copy()
        g[:10] += rng.normal(size=(10, 1))
        np.testing.assert_allclose(full_history_increment(g, 1.0, 0.1), base, rtol=0, atol=1e-14)
        assert base[0] == pytest.approx(0.1 * (1.5 * f[11, 0] - 0.5 * f[10, 0]))


class TestReference:
    def test_zero_rhs_constant(self, zero_system):
        traj = integrate_reference(zero_system, [1.0], Grid(0.1, 10), 0.3, refine=2)
        assert np.all(traj.states == 1.0)

    @pytest.mark.parametrize("alpha", [0.3, 0.6, 0.9])
    def test_constant_forcing(self, alpha):
        traj = integrate_reference(builtin_system("tbeta", {"beta": 0.0}), None, Grid.from_final_time(1e-3, 1.0), alpha)
        ab = ab_norm(alpha)
        exact = (1 - alpha) / ab + alpha / (ab * math.gamma(alpha + 1))
        assert abs(traj.final[0] - exact) <= 5e-3 * exact

    def test_classical_euler_step(self):
        traj = integrate_reference(builtin_system("tbeta"), None, Grid(0.1, 1), 1.0, refine=1)
        assert traj.states[1, 0] == 0.0

    def test_downsampled_to_grid(self):
        traj = integrate_reference(builtin_system("linear_ty"), None, Grid(0.1, 7), 0.5, refine=4)
        np.testing.assert_allclose(traj.times, 0.1 * np.arange(8))
        assert traj.meta["refine"] == 4 and traj.meta["fixed_point_unconverged"] == 0

    def test_bad_refine(self):
        with pytest.raises(DomainError):
            integrate_reference(builtin_system("tbeta"), None, Grid(0.1, 2), 0.5, refine=0)


def test_dispatch_unknown_scheme():
    with pytest.raises(DomainError):
        integrate(builtin_system("tbeta"), None, Grid(0.1, 2), 0.5, scheme="magic")


@pytest.mark.parametrize("scheme", ["two_step", "full_history", "reference"])
def test_schemes_agree_and_tighten(scheme):
    spec = builtin_system("tbeta", {"beta": 1.0})
    errs = []
    for h in (0.02, 0.01):
        traj = integrate(spec, None, Grid.from_final_time(h, 1.0), 0.8, scheme, refine=4)
        errs.append(np.max(np.abs(traj.states[1:, 0] - exact_tbeta(traj.times[1:], 0.8, 1.0))))
    assert errs[1] < errs[0]
