"""
Tests for the whole-space radial decay oracle.

The decay-law checks integrate to t = 500 and are marked slow.

Author: Hypocoax Team
"""

import math

import numpy as np
import pytest

from hypocoax.analysis.decay_fit import fit_decay_exponent, fit_exponential_rate
from hypocoax.simulator.radial_oracle import (
    RadialOracle,
    angular_rule,
    gaussian_profile,
    get_profile,
    high_band_profile,
    radial_oracle_decay,
)

WINDOW = (50.0, 500.0)


# ============================================================
# BUILDING BLOCKS
# ============================================================

class TestAngularRule:
    @pytest.mark.parametrize("d, area", [(1, 2.0), (2, 2.0 * math.pi), (3, 4.0 * math.pi)])
    def test_weights_sum_to_area(self, d, area):
        omegas, weights = angular_rule(d, 16)
        assert np.sum(weights) == pytest.approx(area)
        assert np.allclose(np.linalg.norm(omegas, axis=1), 1.0)

    def test_dimension_limit(self):
        with pytest.raises(ValueError):
            angular_rule(4)


class TestProfiles:
    def test_gaussian(self):
        assert gaussian_profile(0.0) == 1.0

    def test_high_band_vanishes_at_low_frequency(self):
        assert np.all(high_band_profile(np.linspace(0.0, 2.0, 50)) == 0.0)
        assert high_band_profile(6.0) > 0.0

    def test_unknown_profile(self):
        with pytest.raises(ValueError):
            get_profile("lorentzian")


class TestOracle:
    def test_vector_shape(self, euler_lin_2d):
        with pytest.raises(ValueError):
            RadialOracle(euler_lin_2d, vector=[1.0, 0.0])

    def test_energies_at_time_zero(self, euler_lin_2d):
        oracle = RadialOracle(euler_lin_2d, angular_points=16)
        energies = oracle.energies(0.5, np.array([0.0]))
        assert energies[0, 0] == pytest.approx(2.0 * math.pi * gaussian_profile(0.5) ** 2)

    def test_times_must_increase(self, euler_lin_2d):
        with pytest.raises(ValueError):
            radial_oracle_decay(euler_lin_2d, times=[0.0, 2.0, 1.0])

    def test_short_run_columns(self, euler_lin_1d):
        frame = radial_oracle_decay(euler_lin_1d, sigma_list=[0.0], sigma1=0.5,
                                    times=np.linspace(0.0, 5.0, 6), angular_points=8)
        assert list(frame.columns) == ["t", "Z_low_s0", "Z2_low_s0", "W_low_s0", "Z_high_s1.5", "Z_besov_s-0.5_inf"]
        assert np.all(np.diff(frame["Z_low_s0"]) < 0)


# ============================================================
# DECAY LAWS
# ============================================================

@pytest.mark.slow
class TestDecayLaws:
    @pytest.fixture(scope="class")
    def gaussian_frame(self):
        from hypocoax.simulator.euler import make_euler_system
        from hypocoax.systems.system_model import linearize

        lin = linearize(make_euler_system(2))
        return radial_oracle_decay(lin, "gaussian", sigma_list=[0.0, -0.5], sigma1=1.0,
                                   times=np.linspace(0.0, 500.0, 201))

    def test_heat_rate_of_conserved_part(self, gaussian_frame):
        fit = fit_decay_exponent(gaussian_frame, "Z_low_s0", WINDOW)
        assert fit.exponent == pytest.approx(0.5, abs=0.05)
        assert fit.reliable

    def test_damped_mode_gains_half(self, gaussian_frame):
        z_fit = fit_decay_exponent(gaussian_frame, "Z_low_s-0.5", WINDOW)
        w_fit = fit_decay_exponent(gaussian_frame, "W_low_s-0.5", WINDOW)
        assert w_fit.exponent - z_fit.exponent >= 0.4

    def test_high_band_decays_exponentially(self, euler_lin_2d):
        frame = radial_oracle_decay(euler_lin_2d, "high-band", sigma_list=[0.0],
                                    times=np.linspace(0.0, 50.0, 101))
        fit = fit_exponential_rate(frame, "Z_high_s2", (5.0, 50.0))
        assert fit.r_squared >= 0.99
        assert fit.exponent > 0.0
