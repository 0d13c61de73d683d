"""
Run orchestration: system analysis, simulations with functional tracking,
and decay verification on the radial oracle.

Author: Hypocoax Team
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..config import get_settings
from ..errors import CannotCertify, DegenerateWindow, DimensionMismatch, OutOfRange, WeightNotPositive
from ..lp.spectral_field import SpectralField
from ..lyapunov.functionals import MONOTONE_TOL, corrected_series, tune_functional_weights
from ..simulator.euler import euler_mass
from ..simulator.initial_data import make_initial_datum, measured_size
from ..simulator.linear_evolution import linear_exact_evolve
from ..simulator.pseudospectral import Trajectory, nonlinear_integrate
from ..simulator.radial_oracle import radial_oracle_decay
from ..simulator.run_config import InitialDatum, RunConfig
from ..stability.certification import (
    CERTIFY_TOL,
    Certificate,
    autotune_epsilon,
    certify_hypocoercivity,
    default_rho_grid,
)
from ..stability.schedule import EpsilonSchedule, make_schedule
from ..stability.sk_analysis import DEFAULT_GRID, sk_condition, sphere_grid
from ..systems.registry import resolve_system
from ..systems.system_model import (
    LinearizedSystem,
    SystemSpec,
    check_block_structure,
    check_symmetrizability,
    linearize,
)
from .decay_fit import fit_decay_exponent, fit_exponential_rate
from .report import FitEntry, RunReport, Verdict, write_report
from .theory import theory_exponents
from .trajectory import TrajectoryRecord, record_trajectory

logger = logging.getLogger(__name__)

FALLBACK_EPSILON = 0.1
CORRECTOR_BOUND = 0.5
MASS_TOL = 1e-12
GROWTH_FACTOR = 10.0
STEP_MONOTONE_TOL = 1e-8
MATCH_TOL = 0.10
MIN_GAIN = 0.4
EXPONENTIAL_R2 = 0.99


# ============================================================
# CERTIFICATION
# ============================================================

@dataclass
class Certification:
    schedule: EpsilonSchedule
    certificate: Optional[Certificate] = None
    trace: List[Dict[str, Any]] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def certified(self) -> bool:
        return self.certificate is not None and self.certificate.c_min > CERTIFY_TOL

    def to_dict(self) -> Dict[str, Any]:
        return {
            "certified": self.certified,
            "schedule": self.schedule.to_dict(),
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
            "trace": self.trace,
            "error": self.error,
        }


def usable_kappa0(kappa0: float) -> float:
    return kappa0 if math.isfinite(kappa0) and kappa0 > 0 else 1.0


def certify_system(lin: LinearizedSystem, epsilon: Optional[float] = None,
                   rho_grid: Optional[np.ndarray] = None,
                   omega_grid: Optional[np.ndarray] = None) -> Certification:
    """Certify at a fixed epsilon, or autotune; failures are recorded, not raised."""
    kappa0 = usable_kappa0(lin.kappa0)
    if epsilon is not None:
        schedule = make_schedule(lin.n, lin.d, kappa0, epsilon=epsilon)
        try:
            certificate = certify_hypocoercivity(lin, schedule, rho_grid, omega_grid)
        except WeightNotPositive as e:
            logger.warning(f"Certification at epsilon={epsilon} failed: {e}")
            return Certification(schedule, error=str(e))
        if certificate.c_min <= CERTIFY_TOL:
            logger.warning(f"No dissipation margin at epsilon={epsilon}: c_min = {certificate.c_min:.3e}")
            return Certification(schedule, certificate, error=f"c_min = {certificate.c_min:.3e} <= 0")
        return Certification(schedule, certificate)
    try:
        result = autotune_epsilon(lin, rho_grid=rho_grid, omega_grid=omega_grid)
        return Certification(result.schedule, result.certificate, result.trace)
    except CannotCertify as e:
        logger.warning(f"Autotune failed: {e}")
        schedule = make_schedule(lin.n, lin.d, kappa0, epsilon=FALLBACK_EPSILON)
        return Certification(schedule, trace=e.diagnostics.get("trace", []), error=f"CannotCertify: {e}")


def _system_for(config: RunConfig) -> SystemSpec:
    system = resolve_system(config.system, gamma=config.gamma, lam=config.lam)
    if config.d is not None and config.d != system.d:
        raise DimensionMismatch(f"Config asks for d={config.d} but {system.name} has d={system.d}")
    return system


# ============================================================
# ANALYZE
# ============================================================

def analyze_system(system: SystemSpec, require_sk: bool = False,
                   epsilon: Optional[float] = None) -> RunReport:
    """Structure checks, SK condition and certification of one system."""
    lin = linearize(system)
    certification = certify_system(lin, epsilon)
    sk = sk_condition(lin, certification.schedule)
    structure = {
        "symmetrizability": check_symmetrizability(system).to_dict(),
        "block_structure": check_block_structure(system, lin=lin).to_dict(),
    }
    report = RunReport(
        config={"system": system.name, "parameters": system.parameters, "epsilon": epsilon},
        sk=sk.to_dict(),
        c_min=None if certification.certificate is None else certification.certificate.c_min,
        extra={
            "linearization": lin.to_dict(),
            "structure": structure,
            "certification": certification.to_dict(),
        },
    )
    if require_sk:
        report.verdicts.append(Verdict("sk", sk.holds, f"N_Vbar = {sk.min_gram_eig:.3e}"))
    return report


# ============================================================
# SIMULATE
# ============================================================

def _evolve(config: RunConfig, system: SystemSpec, lin: LinearizedSystem, Z0: SpectralField) -> Trajectory:
    if config.mode == "linear-exact":
        times = config.times()
        return Trajectory(times=times, fields=linear_exact_evolve(lin, Z0, times))
    return nonlinear_integrate(system, config, Z0)


def _reference_fields(config: RunConfig, system: SystemSpec, lin: LinearizedSystem,
                      Z0: SpectralField, times) -> Tuple[str, List[SpectralField]]:
    """
    Exact linear run the functional weights are tuned on.

    The judged run never tunes its own weights: linear runs use a
    random-band datum with the next seed and the same L2 size, nonlinear
    runs use the linear flow of their own datum.
    """
    if config.mode == "linear-exact" or system.linear:
        datum = config.initial
        seed = (config.seed if datum.seed is None else datum.seed) + 1
        companion = InitialDatum(kind="random-band", amplitude=Z0.l2_norm() or datum.amplitude,
                                 band=datum.band, seed=seed)
        Z0 = make_initial_datum(config.model_copy(update={"initial": companion}), system)
        label = f"random-band companion, seed {seed}"
    else:
        label = "linear flow of the run datum"
    return label, linear_exact_evolve(lin, Z0, times)


def tune_on_reference(config: RunConfig, system: SystemSpec, lin: LinearizedSystem,
                      schedule: EpsilonSchedule, Z0: SpectralField, times) -> Dict[str, Any]:
    """Frozen (eps, eps') from a reference run, or the tuning failure."""
    label, fields = _reference_fields(config, system, lin, Z0, times)
    reference = record_trajectory(times, fields, lin, schedule, system=system, linear=True,
                                  variant=config.variant)
    try:
        tuning = tune_functional_weights(reference.snapshots, schedule.kappa0, variant=config.variant)
    except CannotCertify as e:
        logger.warning(f"Functional weights not tuned on {label}: {e}")
        return {"error": str(e), "tuned_on": label, **e.diagnostics}
    return {"eps": tuning.eps, "eps_prime": tuning.eps_prime, "halvings": tuning.halvings, "tuned_on": label}


def _linear_verdicts(record: TrajectoryRecord, variant: str) -> List[Verdict]:
    values = corrected_series(record.snapshots, variant)
    increase = float(np.max(np.diff(values), initial=0.0))
    allowed = MONOTONE_TOL * values[0]
    ratio = max((s.max_corrector_ratio() for s in record.snapshots), default=0.0)
    return [
        Verdict("lyapunov_monotone", increase <= allowed, f"max increase {increase:.3e}, allowed {allowed:.3e}"),
        Verdict("corrector_bound", ratio <= CORRECTOR_BOUND, f"max |I_q| / ||Z_q||^2 = {ratio:.4f}"),
    ]


def _nonlinear_verdicts(record: TrajectoryRecord, trajectory: Trajectory,
                        system: SystemSpec) -> List[Verdict]:
    frame = record.frame
    verdicts = [Verdict("finite", bool(np.all(np.isfinite(frame.to_numpy()))))]

    if system.parameters.get("gamma") == 2.0:
        masses = np.array([f.mean_mode()[0] for f in trajectory.fields])
        drift = float(np.max(np.abs(masses - masses[0])))
        verdicts.append(Verdict("mass_conserved", drift <= MASS_TOL, f"max drift {drift:.3e}"))

    energy = record.energy["Zprime"].to_numpy()
    bound = GROWTH_FACTOR * energy[0]
    verdicts.append(Verdict("small_data_stability", float(np.max(energy)) <= bound,
                            f"sup Z'(t) = {np.max(energy):.4e}, 10 Z'(0) = {bound:.4e}"))
    verdicts.append(step_monotone_verdict("ltildeprime_monotone", frame["Ltildeprime"].to_numpy()))
    return verdicts


def relative_step_increase(values) -> float:
    """Largest (v[i+1] - v[i]) / |v[i]| along a series, 0 when it never grows."""
    values = np.asarray(values, dtype=float)
    steps = np.diff(values) / np.maximum(np.abs(values[:-1]), np.finfo(float).tiny)
    return float(np.max(steps, initial=0.0))


def step_monotone_verdict(name: str, values, tol: float = STEP_MONOTONE_TOL) -> Verdict:
    worst = relative_step_increase(values)
    return Verdict(name, worst <= tol, f"max relative step increase {worst:.3e}, allowed {tol:.0e}")


def _diagnostics(record: TrajectoryRecord, trajectory: Trajectory, system: SystemSpec) -> Dict[str, Any]:
    worst = relative_step_increase(record.frame["Ltildeprime"].to_numpy())
    out = {"Ltildeprime_max_relative_increase": worst,
           "Ltildeprime_monotone": worst <= STEP_MONOTONE_TOL}
    gamma = system.parameters.get("gamma")
    if gamma is not None:
        masses = np.array([euler_mass(f, gamma) for f in trajectory.fields])
        out["mass_drift"] = float(np.max(np.abs(masses - masses[0])))
    return out


def execute_run(config: RunConfig, out_dir=None, require_sk: bool = False,
                verify_decay: bool = False, parquet: bool = False) -> RunReport:
    if config.mode == "linear-oracle":
        return execute_decay(config, out_dir, require_sk=require_sk, parquet=parquet)

    system = _system_for(config)
    lin = linearize(system)
    certification = certify_system(lin, config.epsilon)
    schedule = certification.schedule
    sk = sk_condition(lin, schedule)

    Z0 = make_initial_datum(config, system)
    trajectory = _evolve(config, system, lin, Z0)
    linear = config.mode == "linear-exact" or system.linear
    metadata = {
        "config_hash": config.config_hash(),
        "schedule": schedule.to_dict(),
        "kappa0": lin.kappa0 if math.isfinite(lin.kappa0) else None,
        "c_min": None if certification.certificate is None else certification.certificate.c_min,
    }
    record = record_trajectory(trajectory.times, trajectory.fields, lin, schedule, config.queries,
                               system=system, linear=linear, variant=config.variant, metadata=metadata)

    weights = tune_on_reference(config, system, lin, schedule, Z0, trajectory.times)
    if "eps" in weights:
        record.reweight(weights["eps"], weights["eps_prime"])

    report = RunReport(
        config=config.model_dump(mode="json", by_alias=True),
        record=record,
        sk=sk.to_dict(),
        c_min=metadata["c_min"],
        extra={
            "certification": certification.to_dict(),
            "functional_weights": weights,
            "initial_size": measured_size(trajectory.fields[0], refined=config.variant == "refined"),
            "integration": {"dt": trajectory.dt, "steps": trajectory.steps, "halvings": trajectory.halvings},
        },
    )
    if linear:
        report.verdicts.extend(_linear_verdicts(record, config.variant))
    else:
        report.verdicts.extend(_nonlinear_verdicts(record, trajectory, system))
        report.extra["diagnostics"] = _diagnostics(record, trajectory, system)
    if require_sk:
        report.verdicts.append(Verdict("sk", sk.holds, f"N_Vbar = {sk.min_gram_eig:.3e}"))

    if verify_decay:
        decay = execute_decay(config.model_copy(update={"mode": "linear-oracle"}))
        report.fits.extend(decay.fits)
        report.verdicts.extend(decay.verdicts)

    if out_dir is not None:
        k = config.snapshot_every
        snapshot_times = trajectory.times[::k] if k else []
        snapshots = trajectory.fields[::k] if k else []
        write_report(report, out_dir, parquet=parquet, snapshots=snapshots, snapshot_times=snapshot_times)
    return report


# ============================================================
# DECAY
# ============================================================

def _match(entry: FitEntry, name: str) -> Verdict:
    error = entry.rel_error
    passed = error is not None and error <= MATCH_TOL
    return Verdict(name, passed, f"exponent {entry.fit.exponent:.4f} vs theory {entry.theory}")


def _gaussian_fits(record: TrajectoryRecord, d: int, sigma1: float, sigma_list, window):
    fits, verdicts, notes = [], [], []
    alpha1 = None
    for sigma in sigma_list:
        try:
            table = theory_exponents(d, sigma1, sigma, "general")
        except OutOfRange as e:
            notes.append(f"sigma={sigma:g}: {e}")
            table = None

        z_fit = fit_decay_exponent(record, f"Z_low_s{sigma:g}", window)
        z_entry = FitEntry(z_fit)
        if table is not None:
            alpha1 = table.alpha1
            z_entry.theory, z_entry.branch = table.exponent("Z_low"), "heat"
            verdicts.append(_match(z_entry, f"decay_Z_low_s{sigma:g}"))
        fits.append(z_entry)

        for name in ("Z2", "W"):
            fit = fit_decay_exponent(record, f"{name}_low_s{sigma:g}", window)
            entry = FitEntry(fit)
            if table is not None:
                branches = table.get("Z2_low")
                entry.theory = max(b.exponent for b in branches)
                entry.branch = "|".join(b.branch for b in branches)
            fits.append(entry)
            if sigma <= d / 2.0 - 1.0:
                gain = fit.exponent - z_fit.exponent
                verdicts.append(Verdict(f"gain_{name}_low_s{sigma:g}", gain >= MIN_GAIN,
                                        f"gain {gain:.4f} over Z"))

    high = f"Z_high_s{d / 2.0 + 1.0:g}"
    if alpha1 is not None:
        try:
            fit = fit_decay_exponent(record, high, window)
            entry = FitEntry(fit, theory=2.0 * alpha1, branch="alpha1")
            fits.append(entry)
            verdicts.append(Verdict(f"decay_{high}", fit.exponent >= (1.0 - MATCH_TOL) * entry.theory,
                                    f"exponent {fit.exponent:.4f} at least {entry.theory:.4f}"))
        except DegenerateWindow as e:
            verdicts.append(Verdict(f"decay_{high}", True, f"below quadrature floor in window: {e}"))
    return fits, verdicts, notes


def execute_decay(config: RunConfig, out_dir=None, require_sk: bool = False,
                  parquet: bool = False, n_jobs: Optional[int] = None) -> RunReport:
    system = _system_for(config)
    lin = linearize(system)
    d = lin.d
    sigma1 = d / 2.0 if config.sigma1 is None else config.sigma1
    times = np.linspace(0.0, config.t_end, config.oracle_times + 1)
    n_jobs = get_settings().threads if n_jobs is None else n_jobs

    frame = radial_oracle_decay(lin, config.profile, config.sigma_list, sigma1, times,
                                angular_points=config.angular_points, n_jobs=n_jobs)
    record = TrajectoryRecord.from_frame(frame, {"config_hash": config.config_hash(), "sigma1": sigma1,
                                                 "profile": config.profile})
    window = config.window()

    report = RunReport(config=config.model_dump(mode="json", by_alias=True), record=record)
    if config.profile == "gaussian":
        fits, verdicts, notes = _gaussian_fits(record, d, sigma1, config.sigma_list, window)
        report.fits.extend(fits)
        report.verdicts.extend(verdicts)
        if notes:
            report.extra["notes"] = notes
    else:
        high = f"Z_high_s{d / 2.0 + 1.0:g}"
        fit = fit_exponential_rate(record, high, window)
        report.fits.append(FitEntry(fit, branch="exponential"))
        report.verdicts.append(Verdict(f"exponential_{high}", fit.r_squared >= EXPONENTIAL_R2 and fit.exponent > 0,
                                       f"rate {fit.exponent:.4f}, R^2 {fit.r_squared:.5f}"))

    if require_sk:
        sk = sk_condition(lin, make_schedule(lin.n, d, usable_kappa0(lin.kappa0), epsilon=FALLBACK_EPSILON))
        report.sk = sk.to_dict()
        report.verdicts.append(Verdict("sk", sk.holds, f"N_Vbar = {sk.min_gram_eig:.3e}"))

    if out_dir is not None:
        write_report(report, Path(out_dir), parquet=parquet)
    return report


def certify_summary(system: SystemSpec, epsilon: Optional[float] = None,
                    rho_grid: Optional[np.ndarray] = None,
                    omega_count: int = DEFAULT_GRID) -> Dict[str, Any]:
    """Compact certification verdict of one system on the given frequency grids."""
    lin = linearize(system)
    rhos = default_rho_grid() if rho_grid is None else np.asarray(rho_grid, dtype=float)
    omegas = sphere_grid(lin.d, omega_count)
    certification = certify_system(lin, epsilon, rho_grid=rhos, omega_grid=omegas)
    sk = sk_condition(lin, certification.schedule, sphere_grid_size=omega_count)
    cert = certification.certificate
    return {
        "system": system.name,
        "holds": sk.holds,
        "N_Vbar": sk.min_gram_eig,
        "certified": certification.certified,
        "c_min": None if cert is None else cert.c_min,
        "epsilon": certification.schedule.epsilon,
        "schedule": list(certification.schedule.values),
        "worst_omega": None if cert is None else cert.worst_omega,
        "worst_rho": None if cert is None else cert.worst_rho,
        "grid": {"rho_min": float(rhos.min()), "rho_max": float(rhos.max()),
                 "rho_points": int(rhos.size), "omega_points": int(len(omegas))},
        "error": certification.error,
    }
