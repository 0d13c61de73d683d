"""
Tests for decay fits, predicted exponents, reports, runs and campaigns.

Author: Hypocoax Team
"""

import json
import math

import numpy as np
import pandas as pd
import pytest

from hypocoax.analysis.campaign import campaign_configs, campaign_exit_code, is_campaign, run_campaign
from hypocoax.analysis.decay_fit import (
    fit_decay_exponent,
    fit_exponential_rate,
    japanese_bracket,
)
from hypocoax.analysis.pipeline import (
    analyze_system,
    certify_summary,
    execute_run,
    relative_step_increase,
    step_monotone_verdict,
)
from hypocoax.analysis.report import RunReport, Verdict, json_safe, write_report
from hypocoax.analysis.theory import theory_exponents
from hypocoax.analysis.trajectory import TrajectoryRecord
from hypocoax.errors import DegenerateWindow, OutOfRange
from hypocoax.simulator.run_config import InitialDatum, QuerySpec, RunConfig

BOX = 2.0 * math.pi * 2 ** 4


def _power_frame(a, scale=3.0):
    t = np.linspace(0.0, 100.0, 201)
    return pd.DataFrame({"t": t, "y": scale * japanese_bracket(t) ** (-a)})


def _small_config(**overrides):
    payload = {
        "system": "euler-damped-1d",
        "resolution": 32,
        "box_length": BOX,
        "t_end": 20.0,
        "output_every": 10,
        "initial": InitialDatum(kind="random-band", amplitude=1e-2, band=(-3, 0)),
        "queries": [QuerySpec(s=0.0, band="low"), QuerySpec(s=1.5, band="high", target="W")],
    }
    payload.update(overrides)
    return RunConfig(**payload)


# ============================================================
# DECAY FITS
# ============================================================

class TestDecayFits:
    @pytest.mark.parametrize("a", [0.0, 0.25, 0.5, 1.0, 2.0])
    def test_power_law_recovered(self, a):
        fit = fit_decay_exponent(_power_frame(a), "y", (10.0, 100.0))
        assert fit.exponent == pytest.approx(a, abs=1e-6)
        assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-6)
        assert fit.reliable

    def test_exponential_rate(self):
        t = np.linspace(0.0, 40.0, 81)
        frame = pd.DataFrame({"t": t, "y": np.exp(-0.3 * t)})
        fit = fit_exponential_rate(frame, "y", (5.0, 40.0))
        assert fit.exponent == pytest.approx(0.3, abs=1e-9)
        assert fit.kind == "exponential"

    def test_record_input(self):
        record = TrajectoryRecord.from_frame(_power_frame(1.0))
        assert fit_decay_exponent(record, "y").exponent == pytest.approx(1.0, abs=1e-6)

    def test_too_few_samples(self):
        with pytest.raises(DegenerateWindow):
            fit_decay_exponent(_power_frame(1.0), "y", (10.0, 11.0))

    def test_non_positive_values(self):
        frame = _power_frame(1.0)
        frame.loc[150, "y"] = 0.0
        with pytest.raises(DegenerateWindow):
            fit_decay_exponent(frame, "y", (10.0, 100.0))

    def test_missing_column(self):
        with pytest.raises(KeyError):
            fit_decay_exponent(_power_frame(1.0), "z")


# ============================================================
# PREDICTED EXPONENTS
# ============================================================

class TestTheory:
    def test_general_table(self):
        table = theory_exponents(2, 1.0, 0.0)
        assert table.exponent("Z_low") == pytest.approx(0.5)
        assert table.alpha1 == pytest.approx(0.5)
        assert table.exponent("Z2_low") == pytest.approx(0.5)
        assert table.exponent("Z_high") == pytest.approx(1.0)

    def test_refined_table(self):
        table = theory_exponents(2, 1.0, 0.0, "refined")
        assert table.alpha1 == pytest.approx(1.0)
        assert {b.branch for b in table.get("Z2_low")} == {"heat", "alpha1"}
        assert table.exponent("Z2_low") == pytest.approx(1.0)

    def test_lower_end_is_excluded(self):
        with pytest.raises(OutOfRange):
            theory_exponents(2, 1.0, -1.0)

    def test_upper_end(self):
        with pytest.raises(OutOfRange):
            theory_exponents(2, 1.0, 0.5)

    def test_sigma1_range(self):
        with pytest.raises(OutOfRange):
            theory_exponents(2, 1.5, 0.0)

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            theory_exponents(2, 1.0, 0.0, "sharp")


# ============================================================
# REPORTS
# ============================================================

class TestReport:
    def test_no_verdicts_pass(self, tmp_path):
        report = RunReport(config={"system": "euler-damped-2d"})
        assert report.exit_code == 0
        paths = write_report(report, tmp_path)
        assert list(paths) == ["report"]
        assert json.loads(paths["report"].read_text())["passed"] is True

    def test_failed_verdict(self):
        report = RunReport(config={}, verdicts=[Verdict("a", True), Verdict("b", False)])
        assert report.exit_code == 1
        assert report.to_dict()["verdicts"] == {"a": "pass", "b": "fail"}

    def test_json_safe(self):
        payload = json_safe({"x": np.float64(math.inf), "y": np.arange(2), "z": (np.bool_(True),)})
        assert payload == {"x": None, "y": [0, 1], "z": [True]}


# ============================================================
# PIPELINE
# ============================================================

class TestPipeline:
    def test_analyze_euler(self, euler_2d):
        report = analyze_system(euler_2d, require_sk=True)
        assert report.passed
        assert report.sk["holds"]
        assert report.c_min > 0.0
        assert report.extra["structure"]["block_structure"]["passed"]

    def test_certify_summary_of_sk_failure(self):
        from hypocoax.systems.system_model import make_linear_system

        system = make_linear_system([np.eye(2), np.eye(2)], np.diag([0.0, 1.0]), n1=1, name="uniform")
        summary = certify_summary(system)
        assert not summary["holds"]
        assert not summary["certified"]
        assert summary["error"].startswith("CannotCertify")

    def test_linear_exact_run(self, tmp_path):
        report = execute_run(_small_config(), tmp_path)
        frame = report.record.frame
        assert list(frame.columns[:3]) == ["t", "Z_low_s0", "W_high_s1.5"]
        assert len(frame) == 11
        assert {v.name for v in report.verdicts} == {"lyapunov_monotone", "corrector_bound"}
        assert all(v.passed for v in report.verdicts if v.name == "corrector_bound")
        assert report.extra["functional_weights"]["tuned_on"] == "random-band companion, seed 1"
        for name in ("trajectory.csv", "energy.csv", "report.json"):
            assert (tmp_path / name).exists()
        written = pd.read_csv(tmp_path / "trajectory.csv")
        assert np.allclose(written["Ltilde"], frame["Ltilde"], rtol=1e-15)

    def test_nonlinear_run(self, tmp_path):
        config = _small_config(mode="nonlinear", t_end=4.0, output_every=4, snapshot_every=2)
        report = execute_run(config, tmp_path)
        verdicts = {v.name: v.passed for v in report.verdicts}
        assert verdicts["finite"]
        assert verdicts["mass_conserved"]
        assert "ltildeprime_monotone" in verdicts
        assert report.extra["functional_weights"]["tuned_on"] == "linear flow of the run datum"
        assert "Ltildeprime_monotone" in report.extra["diagnostics"]
        assert report.extra["diagnostics"]["mass_drift"] <= 1e-8
        assert (tmp_path / "snapshots" / "Z_0000.lpf1").exists()
        assert (tmp_path / "snapshots" / "Z_0002.lpf1").exists()
        assert list(report.record.energy.columns[-2:]) == ["Z", "Zprime"]

    def test_require_sk_adds_verdict(self):
        report = execute_run(_small_config(t_end=2.0, output_every=2), require_sk=True)
        assert any(v.name == "sk" and v.passed for v in report.verdicts)

    def test_step_monotone_verdict(self):
        assert relative_step_increase([1.0, 1.5, 1.2]) == pytest.approx(0.5)
        assert relative_step_increase([2.0]) == 0.0
        assert step_monotone_verdict("L", [1.0, 0.9, 0.8]).passed
        assert not step_monotone_verdict("L", [1.0, 0.9, 0.9 * (1.0 + 1e-6)]).passed
        assert step_monotone_verdict("L", [1.0, 1.0 + 1e-9]).passed


# ============================================================
# CAMPAIGNS
# ============================================================

class TestCampaign:
    def _payload(self):
        shared = _small_config(t_end=2.0, output_every=2).model_dump(mode="json", by_alias=True)
        return {**shared, "runs": [{"seed": 1}, {"seed": 2}, {"d": 2}]}

    def test_detection(self):
        assert is_campaign(self._payload())
        assert not is_campaign({"system": "euler-damped-1d"})

    def test_overrides(self):
        configs = campaign_configs(self._payload())
        assert [c.seed for c in configs[:2]] == [1, 2]
        assert configs[2].d == 2

    def test_failures_are_isolated(self, tmp_path):
        results = run_campaign(self._payload(), tmp_path, n_jobs=1)
        assert [r["index"] for r in results] == [0, 1, 2]
        assert results[2]["exit_code"] == 2
        assert "DimensionMismatch" in results[2]["error"]
        assert campaign_exit_code(results) == 2
        assert (tmp_path / "campaign.json").exists()
        assert (tmp_path / "run_000" / "report.json").exists()

    def test_empty_campaign(self):
        assert campaign_exit_code([]) == 0
