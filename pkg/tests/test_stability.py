"""
Tests for the SK condition, epsilon schedules and hypocoercivity certification.

Author: Hypocoax Team
"""

import math

import numpy as np
import pytest

from hypocoax.errors import CannotCertify, InvalidDirection, InvalidMargin
from hypocoax.stability.certification import (
    autotune_epsilon,
    certify_hypocoercivity,
    corrector_norm,
    default_rho_grid,
    hermitian_corrector,
)
from hypocoax.stability.schedule import default_exponents, exponent_margins, make_schedule
from hypocoax.stability.sk_analysis import (
    gram_matrices,
    kalman_rank_test,
    sk_condition,
    sphere_grid,
)
from hypocoax.systems.system_model import LinearizedSystem

GRAM_TOL = 1e-10
PAIRS = 50


def _random_symmetric(rng, n):
    A = rng.standard_normal((n, n))
    return 0.5 * (A + A.T) / n


def _random_pair(rng, degenerate):
    """(N, [M_1..M_d]); degenerate pairs share an eigenvector of every M_j inside ker N."""
    n = int(rng.integers(2, 6))
    d = int(rng.integers(1, 4))
    M_list = [_random_symmetric(rng, n) for _ in range(d)]
    N = rng.standard_normal((n, n)) / n
    if degenerate:
        v = rng.standard_normal(n)
        v /= np.linalg.norm(v)
        P = np.eye(n) - np.outer(v, v)
        M_list = [P @ M @ P + rng.uniform(-1, 1) * np.outer(v, v) for M in M_list]
        N = N @ P
    return LinearizedSystem.from_generators(N, M_list)


# ============================================================
# SK CONDITION
# ============================================================

class TestSphereGrid:
    def test_sizes(self):
        assert sphere_grid(1).shape == (2, 1)
        assert sphere_grid(2, 64).shape == (64, 2)
        assert sphere_grid(3, 64).shape == (32 * 64, 3)

    def test_unit_directions(self):
        assert np.allclose(np.linalg.norm(sphere_grid(3, 16), axis=1), 1.0)

    def test_too_coarse(self):
        with pytest.raises(ValueError):
            sphere_grid(2, 4)


class TestSkCondition:
    @pytest.mark.parametrize("d", [1, 2])
    def test_euler_positive_control(self, d, euler_lin_1d, euler_lin_2d):
        lin = euler_lin_1d if d == 1 else euler_lin_2d
        schedule = make_schedule(lin.n, lin.d, lin.kappa0, epsilon=0.1)
        report = sk_condition(lin, schedule)
        assert report.holds
        assert report.kalman_min_sigma > 1e-6
        assert report.kalman_rank == lin.n

    def test_negative_control(self, sk_failure):
        report = sk_condition(sk_failure, weights=[1.0, 1.0])
        assert not report.holds
        assert report.kalman_rank == 1
        assert kalman_rank_test(sk_failure, [1.0])[0] == 1

    def test_needs_weights(self, sk_failure):
        with pytest.raises(ValueError):
            sk_condition(sk_failure)

    def test_direction_must_be_unit(self, euler_lin_2d):
        with pytest.raises(InvalidDirection):
            kalman_rank_test(euler_lin_2d, [1.0, 1.0])

    def test_kalman_gram_agreement(self, rng):
        disagreements = 0
        for index in range(PAIRS):
            lin = _random_pair(rng, degenerate=index % 2 == 1)
            weights = np.ones(lin.n)
            omegas = sphere_grid(lin.d, 8)
            gram_eigs = np.linalg.eigvalsh(gram_matrices(lin, omegas, weights))[:, 0]
            for omega, eig in zip(omegas, gram_eigs):
                full_rank = kalman_rank_test(lin, omega)[0] == lin.n
                disagreements += full_rank != (eig > GRAM_TOL)
        assert disagreements == 0

    def test_scale_robustness(self, rng):
        for _ in range(10):
            lin = _random_pair(rng, degenerate=False)
            doubled = LinearizedSystem.from_generators(2.0 * lin.N, lin.M_axes)
            for omega in sphere_grid(lin.d, 8):
                assert kalman_rank_test(lin, omega)[0] == kalman_rank_test(doubled, omega)[0]


# ============================================================
# SCHEDULE
# ============================================================

class TestSchedule:
    def test_two_components(self):
        schedule = make_schedule(2, 1, 1.0, epsilon=0.5)
        assert schedule.exponents == (0, 3)
        assert schedule.values[1] == pytest.approx(0.125)
        assert schedule.values[0] == pytest.approx(1.0 / (4.0 * math.pi))

    def test_three_components(self):
        schedule = make_schedule(3, 2, 1.0, epsilon=0.1)
        assert schedule.exponents == (0, 5, 8)
        assert schedule.values[1] == pytest.approx(1e-5)
        assert schedule.values[2] == pytest.approx(1e-8)
        assert schedule.chain_condition_holds()

    def test_margins_of_default_exponents(self):
        midpoint, terminal = exponent_margins(default_exponents(4))
        assert midpoint >= 1.0
        assert terminal >= 1.0

    def test_margin_too_large(self):
        with pytest.raises(InvalidMargin):
            make_schedule(3, 1, 1.0, delta=2.0)

    def test_bad_epsilon(self):
        with pytest.raises(ValueError):
            make_schedule(3, 1, 1.0, epsilon=1.0)

    def test_with_epsilon_keeps_exponents(self):
        schedule = make_schedule(3, 1, 1.0, epsilon=0.1).with_epsilon(0.2)
        assert schedule.epsilon == 0.2
        assert schedule.values[2] == pytest.approx(0.2 ** 8)


# ============================================================
# CERTIFICATION
# ============================================================

class TestCertification:
    def test_rho_grid_contains_block_edges(self):
        grid = default_rho_grid()
        for edge in (0.75, 4.0 / 3.0, 1.5, 8.0 / 3.0):
            assert np.any(np.isclose(grid, edge))
        assert np.all(np.diff(grid) > 0)

    def test_corrector_is_hermitian(self, euler_lin_2d):
        schedule = make_schedule(euler_lin_2d.n, 2, euler_lin_2d.kappa0, epsilon=0.1)
        C = hermitian_corrector(euler_lin_2d, schedule.values, euler_lin_2d.M_batch(sphere_grid(2, 16)))
        assert np.allclose(C, np.conj(np.swapaxes(C, -1, -2)))

    def test_euler_1d_fixed_epsilon(self, euler_lin_1d):
        schedule = make_schedule(euler_lin_1d.n, 1, euler_lin_1d.kappa0, epsilon=0.1)
        certificate = certify_hypocoercivity(euler_lin_1d, schedule)
        assert certificate.c_min > 0.0
        assert certificate.min_weight_eig > 0.0

    def test_no_dissipation(self):
        lin = LinearizedSystem.from_generators(np.zeros((2, 2)), [[[0.0, 1.0], [1.0, 0.0]]], n1=1)
        schedule = make_schedule(2, 1, 1.0, epsilon=0.1)
        assert abs(certify_hypocoercivity(lin, schedule).c_min) <= 1e-12

    def test_full_dissipation_first_attempt(self, full_dissipation):
        result = autotune_epsilon(full_dissipation)
        assert len(result.trace) == 1
        assert result.schedule.epsilon == 0.5
        assert result.c_min > 0.0

    def test_sk_failure_cannot_certify(self, sk_failure):
        with pytest.raises(CannotCertify) as info:
            autotune_epsilon(sk_failure, max_iter=12)
        assert info.value.diagnostics["trace"]
        assert not any(step["certified"] for step in info.value.diagnostics["trace"])

    @pytest.mark.parametrize("d", [1, 2])
    def test_euler_autotune(self, d, euler_lin_1d, euler_lin_2d):
        lin = euler_lin_1d if d == 1 else euler_lin_2d
        result = autotune_epsilon(lin)
        certificate = result.certificate
        assert certificate.c_min > 0.0
        assert certificate.min_weight_eig >= 0.5 * np.linalg.eigvalsh(lin.A0)[0]
        assert corrector_norm(lin, result.schedule) <= 0.5 * (2.0 * math.pi) ** (-d)

    def test_trace_records_failed_attempts(self, euler_lin_2d):
        result = autotune_epsilon(euler_lin_2d)
        certified = [step["epsilon"] for step in result.trace if step["certified"]]
        assert result.schedule.epsilon == max(certified)
