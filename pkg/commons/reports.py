import json
import math
from pathlib import Path

import pandas as pd
from loguru import logger

from errors.input_errors import ConfigError
from models.DatasetModel import RunManifest

CSV = "csv"
JSON = "json"
FORMATS = (CSV, JSON)


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else ("unbounded" if value > 0 else "-unbounded")
    if isinstance(value, dict):
        return {str(key): _json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(item) for item in value]
    return value


def write_table(frame: pd.DataFrame, output_dir: str, stem: str, fmt: str, manifest: RunManifest) -> Path:
    """
    Writes a report table as <output_dir>/<stem>.csv (or .json records) plus its manifest.

    Floats are written with their shortest round-trip representation, so reading the CSV
    back reproduces the numbers exactly.
    """
    if fmt not in FORMATS:
        raise ConfigError(f"unknown format '{fmt}', expected one of {FORMATS}", source="write_table()", key="format")
    directory = Path(output_dir)
    directory.mkdir(parents=True, exist_ok=True)
    target = directory / f"{stem}.{fmt}"
    if fmt == CSV:
        frame.to_csv(target, index=False)
    else:
        target.write_text(json.dumps(_json_safe(frame.to_dict(orient="records")), indent=2))
    manifest.write(str(target))
    logger.info(f"write_table() - {len(frame)} rows written to {target}")
    return target


def write_summary(summary: dict, output_dir: str, stem: str, manifest: RunManifest) -> Path:
    directory = Path(output_dir)
    directory.mkdir(parents=True, exist_ok=True)
    target = directory / f"{stem}.json"
    target.write_text(json.dumps(_json_safe(summary), indent=2, default=str))
    manifest.write(str(target))
    return target


def read_table(path: str) -> pd.DataFrame:
    path = Path(path)
    if path.suffix == f".{JSON}":
        return pd.DataFrame(json.loads(path.read_text()))
    return pd.read_csv(path, float_precision="round_trip")
