"""
Tests for system declarations, linearization and structural checks.

Author: Hypocoax Team
"""

import json
import math

import numpy as np
import pytest

from hypocoax.errors import (
    DimensionMismatch,
    NonSymmetric,
    NotEquilibrium,
    SingularWeight,
    SystemFileError,
    UnknownSystem,
)
from hypocoax.simulator.euler import (
    density_from_n,
    enthalpy_variable,
    g_function,
    make_euler_system,
    pressure,
)
from hypocoax.systems.registry import available_systems, get_system, resolve_system
from hypocoax.systems.system_model import (
    LinearizedSystem,
    SystemSpec,
    check_block_structure,
    check_symmetrizability,
    dissipativity_constant,
    linearize,
    load_system_json,
    make_linear_system,
    sample_neighborhood,
)

TOL = 1e-12


# ============================================================
# LINEARIZATION
# ============================================================

class TestLinearize:
    def test_euler_1d_frozen_matrices(self, euler_lin_1d):
        assert np.allclose(euler_lin_1d.A0, np.eye(2))
        assert np.allclose(euler_lin_1d.M_axes[0], [[0.0, 1.0], [1.0, 0.0]])
        assert np.allclose(euler_lin_1d.N, np.diag([0.0, 1.0]))
        assert euler_lin_1d.kappa0 == pytest.approx(1.0)

    def test_damping_strength_scales_relaxation(self):
        lin = linearize(make_euler_system(2, lam=3.0))
        assert np.allclose(lin.L22, 3.0 * np.eye(2))
        assert np.allclose(lin.N[:1], 0.0)

    def test_directional_symbol(self, euler_lin_2d):
        omega = np.array([0.6, 0.8])
        expected = 0.6 * euler_lin_2d.M_axes[0] + 0.8 * euler_lin_2d.M_axes[1]
        assert np.allclose(euler_lin_2d.M(omega), expected)
        with pytest.raises(DimensionMismatch):
            euler_lin_2d.M([1.0])

    def test_already_linear_system_is_a_fixed_point(self, euler_lin_2d):
        again = linearize(make_linear_system(euler_lin_2d.Abar, euler_lin_2d.L, euler_lin_2d.n1))
        assert np.allclose(again.Abar, euler_lin_2d.Abar, atol=1e-10)
        assert np.allclose(again.L, euler_lin_2d.L, atol=1e-10)
        assert np.allclose(again.N, euler_lin_2d.N, atol=1e-10)

    def test_not_equilibrium(self):
        system = SystemSpec(
            name="drift", d=1, n=2, n1=1,
            coeff=lambda j, V: np.eye(2),
            source=lambda V: np.array([0.0, 1.0]),
            symmetrizer=lambda V: np.eye(2),
            equilibrium=np.zeros(2),
        )
        with pytest.raises(NotEquilibrium):
            linearize(system)

    def test_non_symmetric_flux(self):
        with pytest.raises(NonSymmetric):
            LinearizedSystem.from_matrices([np.eye(2), [[0.0, 1.0], [0.0, 0.0]]], np.zeros((2, 2)), 1)

    def test_weight_not_positive(self):
        with pytest.raises(SingularWeight):
            LinearizedSystem.from_matrices([np.diag([1.0, -1.0]), np.eye(2)], np.zeros((2, 2)), 1)

    def test_invalid_conserved_count(self):
        with pytest.raises(DimensionMismatch):
            SystemSpec(name="bad", d=1, n=2, n1=2, coeff=None, source=None,
                       symmetrizer=None, equilibrium=np.zeros(2))


class TestDissipativityConstant:
    def test_zero_matrix_is_vacuous(self):
        assert math.isinf(dissipativity_constant(np.zeros((3, 3))))

    def test_projection(self):
        assert dissipativity_constant(np.diag([0.0, 1.0])) == pytest.approx(1.0)

    def test_scaling(self):
        assert dissipativity_constant(2.0 * np.eye(3)) == pytest.approx(0.5)

    def test_nilpotent_has_no_coercivity(self):
        assert dissipativity_constant(np.array([[0.0, 1.0], [0.0, 0.0]])) == 0.0


# ============================================================
# STRUCTURAL CHECKS
# ============================================================

class TestStructure:
    def test_samples_stay_in_ball(self, euler_2d):
        samples = sample_neighborhood(euler_2d, count=100, radius=0.1)
        assert samples.shape == (100, 3)
        assert np.max(np.linalg.norm(samples, axis=1)) <= 0.1 + TOL

    def test_sampling_is_deterministic(self, euler_2d):
        assert np.array_equal(sample_neighborhood(euler_2d, seed=3), sample_neighborhood(euler_2d, seed=3))

    @pytest.mark.parametrize("d", [1, 2])
    def test_euler_symmetrizable(self, d):
        report = check_symmetrizability(make_euler_system(d))
        assert report.passed
        assert report.metrics["min_weight_eig"] > 0.0

    @pytest.mark.parametrize("d", [1, 2])
    def test_euler_block_structure(self, d):
        report = check_block_structure(make_euler_system(d))
        assert report.passed
        assert report.checks["a0_block_diagonal"]
        assert report.checks["residual_vanishes_on_conserved"]
        assert report.checks["conserved_rows_of_l_vanish"]

    def test_unsymmetrizable_system_fails(self):
        system = SystemSpec(
            name="skew", d=1, n=2, n1=1,
            coeff=lambda j, V: np.eye(2) if j == 0 else np.array([[0.0, 1.0], [-1.0, 0.0]]),
            source=lambda V: np.array([0.0, -V[1]]),
            symmetrizer=lambda V: np.eye(2),
            equilibrium=np.zeros(2),
        )
        report = check_symmetrizability(system)
        assert not report.passed
        assert not report.checks["symmetric"]

    def test_state_dependent_conserved_flux_is_flagged(self):
        # A^1_11(V) = V_1: zero at V-bar, so only the derivative flag trips
        system = SystemSpec(
            name="burgers-coupled", d=1, n=2, n1=1,
            coeff=lambda j, V: np.eye(2) if j == 0 else np.array([[V[0], 1.0], [1.0, 0.0]]),
            source=lambda V: np.array([0.0, -V[1]]),
            symmetrizer=lambda V: np.eye(2),
            equilibrium=np.zeros(2),
        )
        report = check_block_structure(system)
        assert report.passed
        assert report.checks["a11_vanishes"]
        assert not report.checks["d_v1_a11_vanishes"]

    def test_conserved_rows_of_l_must_vanish(self):
        # the declared Jacobian feeds the conserved row back into L
        system = SystemSpec(
            name="leaky", d=1, n=2, n1=1,
            coeff=lambda j, V: np.eye(2) if j == 0 else np.array([[0.0, 1.0], [1.0, 0.0]]),
            source=lambda V: np.array([0.0, -V[1]]),
            symmetrizer=lambda V: np.eye(2),
            equilibrium=np.zeros(2),
            jacobians={"source": lambda V: -np.array([[0.0, 1.0], [0.0, 1.0]])},
        )
        report = check_block_structure(system)
        assert not report.passed
        assert not report.checks["conserved_rows_of_l_vanish"]
        assert report.checks["conserved_source_zero"]
        assert report.metrics["max_conserved_row_of_l"] == pytest.approx(1.0)


# ============================================================
# EULER ALGEBRA
# ============================================================

class TestEulerAlgebra:
    @pytest.mark.parametrize("gamma", [1.0, 1.4, 2.0, 3.0])
    def test_g_matches_pressure_derivative(self, gamma):
        rho = density_from_n(np.linspace(-0.1, 0.1, 201), gamma)
        n = enthalpy_variable(rho, gamma)
        assert np.max(np.abs(g_function(n, gamma) - (rho ** (gamma - 1.0) - 1.0))) <= TOL

    @pytest.mark.parametrize("gamma", [1.0, 1.4, 2.0, 3.0])
    def test_density_roundtrip(self, gamma):
        n = np.linspace(-0.1, 0.1, 21)
        assert np.allclose(enthalpy_variable(density_from_n(n, gamma), gamma), n, atol=TOL)

    def test_pressure_law(self):
        assert pressure(2.0, 2.0) == pytest.approx(2.0)

    def test_speed_hook_registered(self, euler_2d):
        assert euler_2d.speed_hook(0.0) == pytest.approx(1.0)
        assert euler_2d.speed_hook(0.1) > 1.0


# ============================================================
# REGISTRY AND FILES
# ============================================================

class TestRegistry:
    def test_builtins(self):
        assert {"euler-damped-1d", "euler-damped-2d"} <= set(available_systems())

    def test_parameters_forwarded(self):
        system = get_system("euler-damped-1d", gamma=1.4, lam=2.0)
        assert system.parameters == {"gamma": 1.4, "lambda": 2.0}

    def test_unknown_system(self):
        with pytest.raises(UnknownSystem):
            get_system("navier-stokes")
        with pytest.raises(UnknownSystem):
            resolve_system("does/not/exist.json")


class TestSystemFiles:
    def _write(self, tmp_path, payload):
        path = tmp_path / "system.json"
        path.write_text(json.dumps(payload))
        return path

    def test_load_linear_system(self, tmp_path):
        path = self._write(tmp_path, {
            "d": 1, "n": 2, "n1": 1,
            "A": [[[1, 0], [0, 1]], [[0, 1], [1, 0]]],
            "Lmat": [[0, 0], [0, 1]],
            "equilibrium": [0, 0],
        })
        system = resolve_system(str(path))
        assert system.name == "system"
        assert system.linear
        lin = linearize(system)
        assert np.allclose(lin.N, np.diag([0.0, 1.0]))

    def test_missing_keys(self, tmp_path):
        path = self._write(tmp_path, {"d": 1, "n": 2})
        with pytest.raises(SystemFileError, match="missing keys"):
            load_system_json(path)

    def test_shape_mismatch(self, tmp_path):
        path = self._write(tmp_path, {
            "d": 2, "n": 2, "n1": 1,
            "A": [[[1, 0], [0, 1]], [[0, 1], [1, 0]]],
            "Lmat": [[0, 0], [0, 1]],
            "equilibrium": [0, 0],
        })
        with pytest.raises(DimensionMismatch):
            load_system_json(path)

    def test_linear_source_is_affine(self):
        system = make_linear_system([np.eye(2), np.eye(2)], np.diag([0.0, 2.0]), 1, equilibrium=[1.0, 0.0])
        assert np.allclose(system.source(np.array([1.0, 0.5])), [0.0, -1.0])
