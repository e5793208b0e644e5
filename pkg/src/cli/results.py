"""
Result files written by the CLI
phase_transition.csv / snr_curve.csv, metrics.json and manifest.json
"""

import json
import logging
import math
from pathlib import Path
from typing import Dict, Iterable, List, Optional

import pandas as pd

from errors import ConfigError

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = (
    "solver", "algebra", "n", "m_over_n", "snr_db", "trials",
    "success_rate", "mean_rel_dist", "mean_iters", "mean_seconds", "seed",
)
PHASE_TRANSITION_FILE = "phase_transition.csv"
SNR_CURVE_FILE = "snr_curve.csv"
METRICS_FILE = "metrics.json"
MANIFEST_FILE = "manifest.json"

INT_COLUMNS = {"n", "trials", "seed"}
TEXT_COLUMNS = {"solver", "algebra"}


def sweep_frame(records: Iterable) -> pd.DataFrame:
    """One row per ExperimentRecord, in the order given"""
    rows = [{column: getattr(record, column) for column in SWEEP_COLUMNS} for record in records]
    return pd.DataFrame(rows, columns=list(SWEEP_COLUMNS))


def write_sweep_csv(path, records: Iterable) -> Path:
    """Missing values (untimed runs, skipped cells) are left empty"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sweep_frame(records).to_csv(path, index=False, lineterminator="\n")
    logger.info("Wrote %s", path)
    return path


def _typed(column: str, value):
    if column in TEXT_COLUMNS:
        return str(value)
    if column in INT_COLUMNS:
        return int(value)
    if pd.isna(value):
        # skipped cells keep nan rates, untimed runs have no seconds
        return None if column == "mean_seconds" else math.nan
    return float(value)


def read_sweep_csv(path) -> List[Dict]:
    """Parse a sweep CSV back into typed rows; empty mean_seconds becomes None"""
    try:
        frame = pd.read_csv(path, dtype={column: str for column in TEXT_COLUMNS})
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ConfigError(f"Failed to read sweep file {path}: {e}") from e
    if tuple(frame.columns) != SWEEP_COLUMNS:
        raise ConfigError(f"Unexpected columns in {path}: {list(frame.columns)}")
    return [{column: _typed(column, row[column]) for column in SWEEP_COLUMNS}
            for row in frame.to_dict("records")]


def _json_number(value: Optional[float]) -> Optional[float]:
    if value is None or not math.isfinite(value):
        return None
    return value


def metrics_payload(result, seed: int, timing: bool = False) -> Dict:
    """psnr_db is null when the reconstruction is exact"""
    return {
        "psnr_db": _json_number(result.psnr_db),
        "per_patch_rel_dist": [float(d) for d in result.per_patch_rel_dist],
        "seconds": result.seconds if timing else None,
        "seed": seed,
        "exact": result.exact,
    }


def write_json(path, payload: Dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(payload, f, indent=2)
    logger.info("Wrote %s", path)
    return path


def write_metrics(out_dir, result, seed: int, timing: bool = False) -> Path:
    return write_json(Path(out_dir) / METRICS_FILE, metrics_payload(result, seed, timing))


def write_manifest(out_dir, config) -> Path:
    """Fully resolved config of a run, seed included under run.seed"""
    path = Path(out_dir) / MANIFEST_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    config.save_config(path)
    logger.info("Wrote %s", path)
    return path
