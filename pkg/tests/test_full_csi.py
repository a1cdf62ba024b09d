import math

import numpy as np
import pytest

from secthru import (
    FadingLaw,
    LinkBudget,
    NumericsError,
    Tolerances,
    build_policy_full,
    calibrate_lambda_full,
    ergodic_throughput_full,
    kkt_lhs_full,
    make_qos,
    mean_power_full,
    pointwise_power,
    policy_surface_full,
    power_grid,
    throughput_full,
)
from oracles import brute_power_full, closed_form_power_beta1, secrecy_mgf_term

TOL = Tolerances()


class TestPointwisePower:
    def test_zero_gain_state(self, link):
        # z_m - gamma*z_e = 0 <= lam/beta: silent
        assert pointwise_power(1.0, 1.0, link, beta=1.0, lam=0.1) == 0.0

    def test_beta1_closed_form_spec_point(self, link):
        mu = pointwise_power(2.0, 0.5, link, beta=1.0, lam=0.5)
        assert mu == pytest.approx((math.sqrt(3.0) - 1.0) / 2.0, abs=1e-10)

    def test_brute_force_spec_point(self, link):
        beta = make_qos(0.01).beta  # 2.8854
        mu = pointwise_power(2.0, 0.5, link, beta=beta, lam=1.0)
        assert mu == pytest.approx(brute_power_full(2.0, 0.5, 1.0, beta, 1.0), abs=1e-3)

    def test_beta1_closed_form_random_states(self, link):
        rng = np.random.default_rng(5)
        z_m = rng.exponential(1.0, 200)
        z_e = rng.exponential(1.0, 200)
        lam = 0.4
        mu = power_grid(z_m, z_e, 1.0, 1.0, lam, TOL)
        assert np.max(np.abs(mu - closed_form_power_beta1(z_m, z_e, 1.0, lam))) < 1e-8

    def test_kkt_residual(self, link):
        rng = np.random.default_rng(17)
        worst = 0.0
        for _ in range(100):
            z_m, z_e = rng.exponential(1.0, 2)
            beta = rng.uniform(0.2, 6.0)
            lam = rng.uniform(0.02, 1.5)
            mu = pointwise_power(z_m, z_e, link, beta, lam)
            if mu > 0:
                resid = abs(float(kkt_lhs_full(mu, z_m, z_e, 1.0, beta)) - lam)
                worst = max(worst, resid / lam)
        assert worst < 1e-8

    def test_threshold_is_exact(self, link):
        lam, beta, gamma = 0.6, 1.2, 1.0
        rng = np.random.default_rng(2)
        z_e = rng.exponential(1.0, 500)
        z_m = rng.exponential(1.0, 500)
        mu = power_grid(z_m, z_e, gamma, beta, lam, TOL)
        active = (z_m - gamma * z_e) > lam / beta
        assert np.array_equal(mu > 0.0, active)  # exact zeros off the transmit set
        near = gamma * z_e + lam / beta
        assert np.all(power_grid(near * (1.0 - 1e-9), z_e, gamma, beta, lam, TOL)
                      [near * (1.0 - 1e-9) - gamma * z_e <= lam / beta] == 0.0)
        assert np.all(power_grid(near + 1e-3, z_e, gamma, beta, lam, TOL) > 0.0)

    def test_objective_convexity_spot_check(self):
        # second differences of the per-state objective on the transmit region
        mus = np.linspace(0.0, 5.0, 201)
        for z_m, z_e, gamma, beta in [(2.0, 0.5, 1.0, 1.0), (3.0, 0.4, 2.0, 4.0), (1.5, 0.1, 0.5, 0.3)]:
            if z_m <= gamma * z_e:
                continue
            f = secrecy_mgf_term(mus, z_m, z_e, gamma, beta)
            assert np.all(np.diff(f, 2) >= -1e-12)

    def test_validates_arguments(self, link):
        from secthru import ValidationError

        with pytest.raises(ValidationError):
            pointwise_power(1.0, 0.5, link, beta=0.0, lam=0.5)
        with pytest.raises(ValidationError):
            pointwise_power(1.0, 0.5, link, beta=1.0, lam=0.0)


class TestMeanPower:
    def test_large_multiplier_silences(self, law, link):
        assert mean_power_full(1e6, 1.0, link, law, law) == pytest.approx(0.0, abs=1e-9)

    def test_monotone_in_lambda(self, law, link, fast_tol):
        values = [mean_power_full(lam, 1.0, link, law, law, fast_tol)
                  for lam in (0.05, 0.1, 0.3, 0.8)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_monte_carlo_cross_check(self, law, link):
        # beta = 1 closed form sampled over 1e7 states
        lam = 0.5
        quad = mean_power_full(lam, 1.0, link, law, law)
        rng = np.random.default_rng(99)
        n = 10_000_000
        z_m = rng.exponential(1.0, n)
        z_e = rng.exponential(1.0, n)
        mu = closed_form_power_beta1(z_m, z_e, 1.0, lam)
        se = mu.std() / math.sqrt(n)
        assert abs(quad - mu.mean()) < 3.0 * se


class TestCalibration:
    def test_hits_budget(self, law, link, fast_tol):
        lam = calibrate_lambda_full(link, 1.0, law, law, fast_tol)
        mean = mean_power_full(lam, 1.0, link, law, law, fast_tol)
        assert abs(mean - link.avg_snr) <= fast_tol.power_rel_tol * link.avg_snr

    def test_monte_carlo_policy_spends_budget(self, law, link, fast_tol):
        lam = calibrate_lambda_full(link, 1.0, law, law, fast_tol)
        rng = np.random.default_rng(3)
        n = 10_000_000
        z_m = rng.exponential(1.0, n)
        z_e = rng.exponential(1.0, n)
        mu = closed_form_power_beta1(z_m, z_e, 1.0, lam)
        se = mu.std() / math.sqrt(n)
        assert abs(mu.mean() - 1.0) < 3.0 * se + 1e-4

    def test_zero_budget_degenerates(self, law):
        lam = calibrate_lambda_full(LinkBudget(0.0, 1.0), 1.0, law, law)
        assert math.isinf(lam)


class TestThroughput:
    def test_zero_snr(self, law):
        res = throughput_full(make_qos(0.01), LinkBudget(0.0, 1.0), law, law)
        assert res.throughput_bits_s_hz == 0.0
        assert res.throughput_bits_s == 0.0

    def test_dominated_by_eavesdropper(self, law, fast_tol):
        res = throughput_full(make_qos(0.01), LinkBudget(1.0, 1e6), law, law, fast_tol)
        assert res.throughput_bits_s_hz <= 1e-3

    def test_theta_to_zero_continuity(self, law, link, fast_tol):
        res = throughput_full(make_qos(1e-6), link, law, law, fast_tol)
        erg = ergodic_throughput_full(link, law, law, fast_tol)
        assert abs(res.throughput_bits_s_hz - erg) <= 1e-3

    def test_theta_zero_routes_to_benchmark(self, law, link, fast_tol):
        res = throughput_full(make_qos(0.0), link, law, law, fast_tol)
        erg = ergodic_throughput_full(link, law, law, fast_tol)
        assert res.throughput_bits_s_hz == pytest.approx(erg, abs=1e-12)
        assert res.theta == 0.0

    def test_diagnostics_populated(self, law, link, fast_tol):
        res = throughput_full(make_qos(0.01), link, law, law, fast_tol)
        assert res.lam > 0.0
        assert res.power_residual <= fast_tol.power_rel_tol * link.avg_snr
        assert res.quad_error < 1e-4
        assert res.theta == 0.01
        assert res.throughput_bits_s == pytest.approx(1e5 * res.throughput_bits_s_hz)


class TestPolicySurface:
    def test_zero_set_matches_threshold(self, law, link, fast_tol):
        qos = make_qos(0.01)
        z = np.linspace(0.0, 4.0, 21)
        surface = policy_surface_full(qos, link, law, law, z, z, fast_tol)
        lam = calibrate_lambda_full(link, qos.beta, law, law, fast_tol)
        ze_grid, zm_grid = np.meshgrid(z, z, indexing="ij")
        silent = zm_grid - ze_grid <= lam / qos.beta
        assert np.all(surface[silent] == 0.0)
        assert np.all(surface[~silent] > 0.0)

    def test_empty_grid(self, law, link):
        surface = policy_surface_full(make_qos(0.01), link, law, law, np.array([]), np.array([]))
        assert surface.shape == (0, 0)


class TestPolicyObject:
    def test_threshold_and_zero_rule(self, law, link, fast_tol):
        policy = build_policy_full(make_qos(0.01), link, law, law, fast_tol)
        assert policy.csi_mode == "full"
        assert policy.threshold == pytest.approx(policy.lam / policy.beta)
        z_e = np.array([0.2, 1.0, 2.5])
        below = policy.state_power(z_e + policy.threshold * 0.99, z_e)
        above = policy.state_power(z_e + policy.threshold * 1.01, z_e)
        assert np.all(below == 0.0)
        assert np.all(above > 0.0)

    def test_zero_budget_policy(self, law):
        policy = build_policy_full(make_qos(0.01), LinkBudget(0.0, 1.0), law, law)
        assert np.all(policy.state_power(np.array([1.0, 5.0]), np.array([0.1, 0.2])) == 0.0)
