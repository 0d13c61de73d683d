"""
Tests for run configuration, initial data, exact linear evolution and the
pseudospectral RK4 integrator.

Author: Hypocoax Team
"""

import dataclasses
import math

import numpy as np
import pytest
import scipy.linalg
from pydantic import ValidationError

from hypocoax.errors import BlowupSuspected, DimensionMismatch, UnresolvedBand
from hypocoax.lp.field_io import write_lpf1
from hypocoax.simulator.euler import make_euler_system
from hypocoax.simulator.initial_data import (
    gaussian_bump,
    make_initial_datum,
    measured_size,
    random_band,
    single_mode,
)
from hypocoax.simulator.linear_evolution import linear_exact_evolve, mode_generators
from hypocoax.simulator.pseudospectral import (
    PseudospectralIntegrator,
    nonlinear_integrate,
    rescale_trajectory,
    rescaled_datum,
)
from hypocoax.simulator.run_config import InitialDatum, QuerySpec, RunConfig
from hypocoax.systems.system_model import linearize

BOX = 2.0 * math.pi * 2 ** 4
EQUIVALENCE_TOL = 1e-6
RESCALING_TOL = 1e-6
MASS_TOL = 1e-12


def _band(n, d, resolution=32, amplitude=1e-2, seed=11):
    datum = InitialDatum(kind="random-band", amplitude=amplitude, band=(-3, 0))
    return random_band(datum, n, (resolution,) * d, (BOX,) * d, seed)


def _relative_error(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


# ============================================================
# RUN CONFIG
# ============================================================

class TestRunConfig:
    def test_defaults(self):
        config = RunConfig()
        assert config.mode == "linear-exact"
        assert config.box_length == pytest.approx(2.0 * math.pi * 2 ** 7)
        assert config.cfl == 0.4
        assert config.lam == 1.0

    def test_lambda_alias(self):
        assert RunConfig.model_validate({"lambda": 2.0}).lam == 2.0

    def test_resolution_power_of_two(self):
        with pytest.raises(ValidationError):
            RunConfig(resolution=48)

    def test_output_times(self):
        config = RunConfig(output_times=[1.0, 2.0])
        assert config.times() == [0.0, 1.0, 2.0]
        with pytest.raises(ValidationError):
            RunConfig(output_times=[2.0, 1.0])

    def test_uniform_times_and_window(self):
        config = RunConfig(t_end=10.0, output_every=5)
        assert config.times() == pytest.approx([0, 2, 4, 6, 8, 10])
        assert config.window() == (1.0, 10.0)

    def test_bad_window(self):
        with pytest.raises(ValidationError):
            RunConfig(fit_window=(5.0, 1.0))

    def test_query_spec(self):
        query = QuerySpec(s=0.5, r="inf", band="low", target="W")
        assert query.r == math.inf
        assert query.column == "W_low_s0.5_rinf"
        with pytest.raises(ValidationError):
            QuerySpec(s=0.0, r=2)
        with pytest.raises(ValidationError):
            QuerySpec(s=0.0, band="middle")

    def test_hash_tracks_content(self):
        assert RunConfig(seed=1).config_hash() == RunConfig(seed=1).config_hash()
        assert RunConfig(seed=1).config_hash() != RunConfig(seed=2).config_hash()

    def test_from_json(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text('{"system": "euler-damped-1d", "resolution": 32, "lambda": 2.0, "t_end": 4.0}')
        config = RunConfig.from_json(path)
        assert config.lam == 2.0
        assert config.resolution == 32
        assert config.times()[-1] == pytest.approx(4.0)

    def test_file_datum_needs_path(self):
        with pytest.raises(ValidationError):
            InitialDatum(kind="file")


# ============================================================
# INITIAL DATA
# ============================================================

class TestInitialData:
    def test_random_band_normalization(self):
        field = _band(3, 2, amplitude=0.05)
        assert field.l2_norm() == pytest.approx(0.05, rel=1e-12)
        assert field.hermitian_defect() <= 1e-15
        assert np.all(field.mean_mode() == 0.0)

    def test_random_band_is_seeded(self):
        assert np.array_equal(_band(2, 1, seed=3).coeffs, _band(2, 1, seed=3).coeffs)
        assert not np.array_equal(_band(2, 1, seed=3).coeffs, _band(2, 1, seed=4).coeffs)

    def test_unresolved_band(self):
        datum = InitialDatum(kind="random-band", band=(20, 21))
        with pytest.raises(UnresolvedBand):
            random_band(datum, 2, (16,), (BOX,), 0)

    def test_single_mode_is_cosine(self):
        datum = InitialDatum(kind="single-mode", amplitude=0.3, mode=[3], components=[1])
        field = single_mode(datum, 2, (32,), (BOX,))
        x = field.grid.coordinates()[0]
        values = field.to_physical()
        assert np.allclose(values[1], 0.3 * np.cos(2.0 * np.pi * 3 * x / BOX))
        assert np.allclose(values[0], 0.0)

    def test_single_mode_dimension(self):
        datum = InitialDatum(kind="single-mode", mode=[1, 2])
        with pytest.raises(DimensionMismatch):
            single_mode(datum, 2, (16,), (BOX,))

    def test_gaussian_is_real_and_positive_size(self):
        datum = InitialDatum(kind="gaussian", amplitude=1e-2, width=8.0, components=[0])
        field = gaussian_bump(datum, 3, (32, 32), (BOX, BOX))
        assert field.hermitian_defect() <= 1e-15
        assert measured_size(field) > 0.0
        assert np.max(field.to_physical()[0]) == pytest.approx(1e-2, rel=0.05)

    def test_component_out_of_range(self, euler_1d):
        config = RunConfig(system="euler-damped-1d", resolution=16, box_length=BOX,
                           initial=InitialDatum(components=[5]))
        with pytest.raises(DimensionMismatch):
            make_initial_datum(config, euler_1d)

    def test_dimension_mismatch(self, euler_2d):
        with pytest.raises(DimensionMismatch):
            make_initial_datum(RunConfig(d=1, resolution=16), euler_2d)

    def test_file_datum(self, tmp_path, euler_1d):
        path = write_lpf1(_band(2, 1, resolution=16), tmp_path / "z0.lpf1")
        config = RunConfig(system="euler-damped-1d", resolution=16,
                           initial=InitialDatum(kind="file", path=str(path)))
        assert np.array_equal(make_initial_datum(config, euler_1d).coeffs, _band(2, 1, resolution=16).coeffs)


# ============================================================
# EXACT LINEAR EVOLUTION
# ============================================================

class TestLinearExact:
    def test_initial_time_returns_datum(self, euler_lin_1d):
        Z0 = _band(2, 1)
        assert np.allclose(linear_exact_evolve(euler_lin_1d, Z0, [0.0])[0].coeffs, Z0.coeffs)

    def test_single_mode_closed_form(self, euler_lin_1d):
        datum = InitialDatum(kind="single-mode", amplitude=1.0, mode=[3])
        Z0 = single_mode(datum, 2, (32,), (BOX,))
        t = 2.5
        Zt = linear_exact_evolve(euler_lin_1d, Z0, [0.0, t])[-1]
        generator = mode_generators(euler_lin_1d, Z0.grid)[3]
        expected = scipy.linalg.expm(-t * generator) @ Z0.coeffs[:, 3]
        assert np.allclose(Zt.coeffs[:, 3], expected, atol=1e-14)

    def test_energy_decreases(self, euler_lin_2d):
        fields = linear_exact_evolve(euler_lin_2d, _band(3, 2), np.linspace(0.0, 20.0, 11))
        norms = [f.l2_norm() for f in fields]
        assert all(b <= a * (1 + 1e-12) for a, b in zip(norms, norms[1:]))

    def test_times_must_be_ordered(self, euler_lin_1d):
        with pytest.raises(ValueError):
            linear_exact_evolve(euler_lin_1d, _band(2, 1), [1.0, 0.5])

    def test_component_mismatch(self, euler_lin_1d):
        with pytest.raises(ValueError):
            linear_exact_evolve(euler_lin_1d, _band(3, 1), [0.0])


# ============================================================
# PSEUDOSPECTRAL RK4
# ============================================================

class TestPseudospectral:
    def test_linear_system_matches_exact(self, coupled_linear_system):
        Z0 = _band(2, 1)
        lin = linearize(coupled_linear_system)
        integrator = PseudospectralIntegrator(coupled_linear_system, Z0.grid, dt=1e-3)
        numeric = integrator.integrate(Z0, [0.0, 1.0]).fields[-1]
        exact = linear_exact_evolve(lin, Z0, [0.0, 1.0])[-1]
        assert _relative_error(numeric.coeffs, exact.coeffs) <= EQUIVALENCE_TOL

    def test_rk4_order(self, coupled_linear_system):
        Z0 = _band(2, 1)
        exact = linear_exact_evolve(linearize(coupled_linear_system), Z0, [0.0, 1.0])[-1].coeffs
        errors = []
        for dt in (0.2, 0.1, 0.05):
            integrator = PseudospectralIntegrator(coupled_linear_system, Z0.grid, dt=dt)
            errors.append(_relative_error(integrator.integrate(Z0, [1.0]).fields[-1].coeffs, exact))
        orders = [math.log2(a / b) for a, b in zip(errors, errors[1:])]
        assert min(orders) >= 3.7

    def test_output_alignment(self, euler_1d):
        Z0 = _band(2, 1)
        trajectory = PseudospectralIntegrator(euler_1d, Z0.grid, dt=0.3).integrate(Z0, [0.0, 1.0, 2.0])
        assert trajectory.times == [0.0, 1.0, 2.0]
        assert trajectory.steps == 8
        assert np.array_equal(trajectory.fields[0].coeffs, Z0.coeffs)

    def test_dt_above_limit(self, euler_1d):
        Z0 = _band(2, 1)
        with pytest.raises(ValueError, match="stability limit"):
            PseudospectralIntegrator(euler_1d, Z0.grid, dt=10.0).integrate(Z0, [1.0])

    def test_generic_rhs_matches_euler_rhs(self, euler_2d):
        Z0 = _band(3, 2, amplitude=5e-2)
        generic = dataclasses.replace(euler_2d, rhs_hook=None)
        fast = PseudospectralIntegrator(euler_2d, Z0.grid).rhs(Z0.coeffs)
        slow = PseudospectralIntegrator(generic, Z0.grid).rhs(Z0.coeffs)
        assert np.max(np.abs(fast - slow)) <= 1e-10 * np.max(np.abs(fast))

    def test_mass_conserved(self, euler_2d):
        Z0 = _band(3, 2)
        trajectory = PseudospectralIntegrator(euler_2d, Z0.grid).integrate(Z0, [0.0, 2.0, 4.0])
        masses = [f.mean_mode()[0] for f in trajectory.fields]
        assert max(abs(m - masses[0]) for m in masses) <= MASS_TOL
        assert all(f.hermitian_defect() <= 1e-14 for f in trajectory.fields)

    def test_neighbourhood_exit(self, euler_1d):
        Z0 = _band(2, 1, amplitude=1e-1)
        integrator = PseudospectralIntegrator(euler_1d, Z0.grid, radius=1e-8)
        with pytest.raises(BlowupSuspected, match="halvings"):
            integrator.integrate(Z0, [0.1])

    def test_lambda_rescaling(self):
        Z0 = _band(3, 2)
        run = PseudospectralIntegrator(make_euler_system(2, lam=2.0), Z0.grid).integrate(Z0, [0.5, 1.0, 1.5])
        unit_datum = rescaled_datum(Z0, 2.0)
        reference = PseudospectralIntegrator(make_euler_system(2, lam=1.0), unit_datum.grid).integrate(
            unit_datum, [1.0, 2.0, 3.0])
        mapped = rescale_trajectory(run, 2.0)
        assert mapped.times == reference.times
        for a, b in zip(mapped.fields, reference.fields):
            assert a.box_length == b.box_length
            assert _relative_error(a.coeffs, b.coeffs) <= RESCALING_TOL

    def test_nonlinear_integrate_from_config(self, euler_1d):
        config = RunConfig(system="euler-damped-1d", mode="nonlinear", resolution=32, box_length=BOX,
                           t_end=2.0, output_every=4,
                           initial=InitialDatum(kind="random-band", amplitude=1e-2, band=(-3, 0)))
        trajectory = nonlinear_integrate(euler_1d, config)
        assert len(trajectory) == 5
        assert all(np.all(np.isfinite(f.coeffs)) for f in trajectory.fields)
