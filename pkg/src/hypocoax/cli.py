"""
Command line interface.

    hypocoax analyze  --system euler-damped-2d [--require-sk] [--verify-decay]
    hypocoax certify  --system path/to/system.json [--epsilon 0.2] [--rho-count 128 --omega-count 32]
    hypocoax simulate --config run.json --out results/run [--parquet]
    hypocoax decay    --config decay.json --out results/decay
    hypocoax lp-norm  field.lpf1 --s 0 --r 1 --band low --threshold 0

Exit codes: 0 every verdict passed, 1 some verdict failed, 2 the run
itself failed (bad input, lost structure, blow-up, ...).

Author: Hypocoax Team
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from . import __version__
from .analysis.campaign import campaign_exit_code, is_campaign, run_campaign
from .analysis.pipeline import analyze_system, certify_summary, execute_decay, execute_run
from .analysis.report import RunReport, json_safe, write_report
from .config import configure_logging, get_settings
from .errors import HypocoaxError
from .lp.field_io import read_lpf1
from .lp.littlewood_paley import BANDS, BesovQuery, besov_report
from .simulator.run_config import RunConfig
from .stability.certification import default_rho_grid
from .stability.sk_analysis import DEFAULT_GRID, MIN_GRID
from .systems.registry import resolve_system

logger = logging.getLogger("hypocoax")

EXIT_OK, EXIT_VERDICT, EXIT_ERROR = 0, 1, 2


def _emit(payload: Dict[str, Any]) -> None:
    print(json.dumps(json_safe(payload), indent=2))


def _load_payload(path: str) -> Dict[str, Any]:
    with open(path) as f:
        return json.load(f)


def _run_config(args, **defaults) -> RunConfig:
    payload = _load_payload(args.config) if args.config else {}
    overrides = {"system": args.system, "gamma": args.gamma, "lambda": args.lam, "epsilon": args.epsilon}
    payload.update({k: v for k, v in overrides.items() if v is not None})
    for key, value in defaults.items():
        payload.setdefault(key, value)
    config = RunConfig.model_validate(payload)
    if getattr(args, "seed", None) is not None:
        config = config.model_copy(update={"seed": args.seed})
    return config


def _out_dir(args) -> Optional[Path]:
    return Path(args.out) if args.out else None


def _summarize(report: RunReport) -> None:
    for verdict in report.verdicts:
        print(f"[{'OK' if verdict.passed else 'FAIL'}] {verdict.name}: {verdict.detail}")


# ============================================================
# SUBCOMMANDS
# ============================================================

def cmd_analyze(args) -> int:
    config = _run_config(args)
    system = resolve_system(config.system, gamma=config.gamma, lam=config.lam)

    report = analyze_system(system, require_sk=args.require_sk, epsilon=config.epsilon)
    if args.verify_decay:
        oracle = config.model_copy(update={"mode": "linear-oracle"})
        if not args.config:
            oracle = oracle.model_copy(update={"t_end": 500.0})
        decay = execute_decay(oracle)
        report.fits.extend(decay.fits)
        report.verdicts.extend(decay.verdicts)

    out = _out_dir(args)
    if out is not None:
        write_report(report, out)
    _emit(report.to_dict())
    return report.exit_code


def cmd_certify(args) -> int:
    config = _run_config(args)
    system = resolve_system(config.system, gamma=config.gamma, lam=config.lam)
    if not 0.0 < args.rho_min < args.rho_max or args.rho_count < 2:
        logger.error(f"Bad rho grid: [{args.rho_min}, {args.rho_max}] with {args.rho_count} points")
        return EXIT_ERROR
    if args.omega_count < MIN_GRID:
        logger.error(f"--omega-count must be at least {MIN_GRID}, got {args.omega_count}")
        return EXIT_ERROR

    epsilon = None if args.autotune else config.epsilon
    rho_grid = default_rho_grid(args.rho_min, args.rho_max, args.rho_count)
    summary = certify_summary(system, epsilon=epsilon, rho_grid=rho_grid, omega_count=args.omega_count)
    _emit(summary)
    return EXIT_OK if summary["certified"] else EXIT_VERDICT


def cmd_simulate(args) -> int:
    if args.config and is_campaign(_load_payload(args.config)):
        results = run_campaign(_load_payload(args.config), out_dir=_out_dir(args) or get_settings().output_dir,
                               require_sk=args.require_sk, verify_decay=args.verify_decay)
        _emit({"runs": results})
        return campaign_exit_code(results)

    config = _run_config(args)
    report = execute_run(config, _out_dir(args), require_sk=args.require_sk,
                         verify_decay=args.verify_decay, parquet=args.parquet)
    _summarize(report)
    return report.exit_code


def cmd_decay(args) -> int:
    config = _run_config(args, mode="linear-oracle", t_end=500.0)
    report = execute_decay(config, _out_dir(args), require_sk=args.require_sk, parquet=args.parquet)
    for entry in report.fits:
        print(f"{entry.fit.column}: exponent {entry.fit.exponent:.4f} (theory {entry.theory}, "
              f"R^2 {entry.fit.r_squared:.4f})")
    _summarize(report)
    return report.exit_code


def cmd_lp_norm(args) -> int:
    field_ = read_lpf1(args.field)
    if args.components:
        start, _, stop = args.components.partition(":")
        field_ = field_.components(int(start), int(stop) if stop else None)
    r = float("inf") if args.r == "inf" else float(args.r)
    query = BesovQuery(s=args.s, r=r, band=args.band, threshold=args.threshold)
    report = besov_report(field_, [query])
    _emit({"field": str(args.field), "resolution": list(field_.resolution),
           "n_components": field_.n_components, "norm": report.values[query.key], **report.to_dict()})
    return EXIT_OK


# ============================================================
# PARSER
# ============================================================

def _add_system_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="Run configuration JSON")
    parser.add_argument("--system", help="Registry key or linear-system JSON file")
    parser.add_argument("--gamma", type=float, help="Adiabatic exponent (default: 2)")
    parser.add_argument("--lambda", dest="lam", type=float, help="Damping strength (default: 1)")
    parser.add_argument("--epsilon", type=float, help="Fixed schedule parameter; autotuned when omitted")
    parser.add_argument("--require-sk", action="store_true", help="Fail when the SK condition does not hold")


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", help="Output directory for trajectory.csv / report.json")
    parser.add_argument("--seed", type=int, help="Override the run seed")
    parser.add_argument("--parquet", action="store_true", help="Also write trajectory.parquet")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hypocoax",
        description="Hypocoercivity certification and decay analysis for partially dissipative hyperbolic systems."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR (default: HYPOCOAX_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="Structure checks, SK condition and certification")
    _add_system_options(analyze)
    analyze.add_argument("--out", help="Write report.json here")
    analyze.add_argument("--verify-decay", action="store_true", help="Also fit decay exponents on the radial oracle")
    analyze.set_defaults(handler=cmd_analyze)

    certify = sub.add_parser("certify", help="Certify the Lyapunov weight of a system")
    _add_system_options(certify)
    certify.add_argument("--rho-min", type=float, default=1e-2, help="Smallest |xi| on the certification grid")
    certify.add_argument("--rho-max", type=float, default=1e2, help="Largest |xi| on the certification grid")
    certify.add_argument("--rho-count", type=int, default=64, help="Log-spaced |xi| points (block edges are added)")
    certify.add_argument("--omega-count", type=int, default=DEFAULT_GRID, help="Points per angle on the unit sphere")
    certify.add_argument("--autotune", action="store_true", help="Autotune epsilon even when --epsilon is given")
    certify.set_defaults(handler=cmd_certify)

    simulate = sub.add_parser("simulate", help="Run a simulation (or a campaign) from a config")
    _add_system_options(simulate)
    _add_run_options(simulate)
    simulate.add_argument("--verify-decay", action="store_true", help="Append radial-oracle decay verdicts")
    simulate.set_defaults(handler=cmd_simulate)

    decay = sub.add_parser("decay", help="Decay exponents from the radial oracle")
    _add_system_options(decay)
    _add_run_options(decay)
    decay.set_defaults(handler=cmd_decay)

    lp_norm = sub.add_parser("lp-norm", help="Besov semi-norm of an LPF1 field")
    lp_norm.add_argument("field", help="LPF1 file")
    lp_norm.add_argument("--s", type=float, required=True, help="Regularity index")
    lp_norm.add_argument("--r", choices=["1", "inf"], default="1", help="Summation exponent")
    lp_norm.add_argument("--band", choices=BANDS, default="all")
    lp_norm.add_argument("--threshold", type=float, help="Band threshold")
    lp_norm.add_argument("--components", help="Component slice start:stop")
    lp_norm.set_defaults(handler=cmd_lp_norm)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.handler(args)
    except (HypocoaxError, ValidationError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
