"""
Campaigns: several runs from one JSON file, fanned out with joblib.

A campaign file holds shared settings plus a "runs" list; each entry
overrides the shared settings for one run.

Author: Hypocoax Team
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from joblib import Parallel, delayed

from ..config import get_settings
from ..errors import HypocoaxError
from ..simulator.run_config import RunConfig
from .pipeline import execute_run

logger = logging.getLogger(__name__)


def is_campaign(payload: Dict[str, Any]) -> bool:
    return isinstance(payload, dict) and "runs" in payload


def campaign_configs(payload: Dict[str, Any]) -> List[RunConfig]:
    shared = {k: v for k, v in payload.items() if k != "runs"}
    return [RunConfig.model_validate({**shared, **run}) for run in payload["runs"]]


def _run_one(index: int, config: RunConfig, out_dir: Optional[Path],
             require_sk: bool, verify_decay: bool) -> Dict[str, Any]:
    run_dir = None if out_dir is None else out_dir / f"run_{index:03d}"
    try:
        report = execute_run(config, run_dir, require_sk=require_sk, verify_decay=verify_decay)
    except HypocoaxError as e:
        logger.error(f"Run {index} failed: {e}")
        return {"index": index, "config_hash": config.config_hash(), "exit_code": 2,
                "error": f"{type(e).__name__}: {e}"}
    return {
        "index": index,
        "config_hash": config.config_hash(),
        "exit_code": report.exit_code,
        "verdicts": {v.name: v.status for v in report.verdicts},
    }


def run_campaign(payload: Dict[str, Any], out_dir=None, require_sk: bool = False,
                 verify_decay: bool = False, n_jobs: Optional[int] = None) -> List[Dict[str, Any]]:
    """Run every configuration; results come back in input order."""
    configs = campaign_configs(payload)
    n_jobs = get_settings().threads if n_jobs is None else n_jobs
    out_dir = None if out_dir is None else Path(out_dir)
    logger.info(f"Campaign of {len(configs)} runs on n_jobs={n_jobs}")

    results = Parallel(n_jobs=n_jobs)(
        delayed(_run_one)(i, config, out_dir, require_sk, verify_decay) for i, config in enumerate(configs)
    )
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "campaign.json", "w") as f:
            json.dump({"runs": results}, f, indent=2)
    return results


def campaign_exit_code(results: List[Dict[str, Any]]) -> int:
    return max((r["exit_code"] for r in results), default=0)
