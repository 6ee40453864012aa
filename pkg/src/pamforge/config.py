"""Parameter-set loading: built-in presets plus JSON files.

Config files mirror the field names of the analysis parameter table (nfft,
windowOverlap, windowSize, recordSizeInSec) so they cross-reference directly.
"""

from __future__ import annotations

import json
from pathlib import Path

from .dsp import AnalysisParams
from .errors import InvariantViolation, SchemaError

PRESETS: dict[str, AnalysisParams] = {
    "set1": AnalysisParams(nfft=256, window_size=256, window_overlap=128,
                           record_size_sec=1.0),
    "set2": AnalysisParams(nfft=1024, window_size=1024, window_overlap=0,
                           record_size_sec=30.0),
}

_FIELD_MAP = {
    "nfft": ("nfft", int),
    "windowSize": ("window_size", int),
    "windowOverlap": ("window_overlap", int),
    "recordSizeInSec": ("record_size_sec", float),
    "sampleRateHz": ("sample_rate_hz", int),
    "windowType": ("window_type", str),
    "calibrationDb": ("calibration_db", float),
    "dbReference": ("db_reference", float),
}

_REQUIRED = ("nfft", "windowSize", "windowOverlap", "recordSizeInSec")


def load_params(source: str | Path) -> AnalysisParams:
    """Resolve a preset name ("set1", "set2") or load a JSON parameter file."""
    name = str(source)
    if name in PRESETS:
        return PRESETS[name]

    path = Path(source)
    if not path.exists():
        raise SchemaError(f"no preset or file named {name!r} "
                          f"(presets: {', '.join(sorted(PRESETS))})")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise SchemaError(f"{path}: top level must be a JSON object")

    missing = [f for f in _REQUIRED if f not in raw]
    if missing:
        raise SchemaError(f"{path}: missing required fields {missing}")
    unknown = [f for f in raw if f not in _FIELD_MAP]
    if unknown:
        raise SchemaError(f"{path}: unknown fields {unknown}")

    kwargs = {}
    for key, value in raw.items():
        attr, cast = _FIELD_MAP[key]
        try:
            kwargs[attr] = cast(value)
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{path}: field {key}: {exc}") from exc
    try:
        return AnalysisParams(**kwargs)
    except InvariantViolation:
        raise


def params_to_json(params: AnalysisParams) -> dict:
    return {
        "nfft": params.nfft,
        "windowSize": params.window_size,
        "windowOverlap": params.window_overlap,
        "recordSizeInSec": params.record_size_sec,
        "sampleRateHz": params.sample_rate_hz,
        "windowType": params.window_type,
        "calibrationDb": params.calibration_db,
        "dbReference": params.db_reference,
    }
