"""Per-record feature computation, ordered assembly, JSON serialization, and
oracle validation.

Two-level segmentation: Welch PSD and SPL come from the full record; TOL from
consecutive 1 s sub-records aligned to the record start, so records stay
independently computable. All averaging happens in linear power; dB conversion
is applied last.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable, Sequence, TextIO

import numpy as np

from . import dsp, oracle
from .audio_ingest import AudioFileMeta, RecordPlan, SampleBuffer, read_record
from .dsp import DB_FLOOR, AnalysisParams
from .errors import ParamsMismatch, RecordCountMismatch
from .executor import ExecutorConfig, TaskDescriptor, run, split_into_blocks

log = logging.getLogger(__name__)

TOL_WINDOW_SEC = 1.0  # ISO/ANSI minimum integration window for TOL


@dataclass(frozen=True)
class FeatureRecord:
    """One integration segment's outputs, all in dB."""

    timestamp: datetime
    file_id: str
    record_index: int
    welch: np.ndarray
    tol: np.ndarray
    spl: float
    params_hash: str


@dataclass
class FileResult:
    records: list[FeatureRecord]
    failed_indices: list[int]
    failure_errors: list[str]


@dataclass(frozen=True)
class ValidationReport:
    rmse_welch: float
    rmse_tol: float
    rmse_spl: float
    max_abs_error: float
    record_count: int

    def passed(self, threshold: float) -> bool:
        return max(self.rmse_welch, self.rmse_tol, self.rmse_spl) <= threshold


def process_record(buffer: SampleBuffer, params: AnalysisParams) -> FeatureRecord:
    """Compute Welch PSD (dB), TOL and SPL for one record."""
    n = len(buffer.samples)
    if n != params.record_size_samples:
        raise ValueError(
            f"buffer of {n} samples != configured record "
            f"{params.record_size_samples}"
        )
    record_psd = dsp.welch_psd(buffer.samples, params)
    welch_db = dsp.to_decibels(record_psd.values, params.db_reference)
    welch_db = np.where(welch_db > DB_FLOOR, welch_db + params.calibration_db,
                        welch_db)

    sub_len = round(TOL_WINDOW_SEC * params.sample_rate_hz)
    sub_count = max(n // sub_len, 1)
    sub_psds = [
        dsp.welch_psd(buffer.samples[i * sub_len : (i + 1) * sub_len], params)
        for i in range(sub_count)
    ]
    table = dsp.tol_band_table(params.sample_rate_hz, TOL_WINDOW_SEC)
    tol_vec = dsp.tol(sub_psds, table, params.db_reference, params.calibration_db)

    spl_db = dsp.spl(record_psd, params.db_reference, params.calibration_db)
    return FeatureRecord(
        timestamp=buffer.timestamp,
        file_id="",  # SampleBuffer carries no path; process_file attaches it
        record_index=buffer.record_index,
        welch=welch_db,
        tol=tol_vec.values,
        spl=spl_db,
        params_hash=params.fingerprint(),
    )


def process_file(
    meta: AudioFileMeta,
    plan: RecordPlan,
    params: AnalysisParams,
    cfg: ExecutorConfig,
) -> FileResult:
    """Process every planned record of one file through the worker pool and
    merge results in record order. Output is identical for any worker count;
    failed records are manifested, not fabricated."""
    return process_corpus([(meta, plan)], params, cfg)[meta.path]


def process_corpus(
    entries: Sequence[tuple[AudioFileMeta, RecordPlan]],
    params: AnalysisParams,
    cfg: ExecutorConfig,
) -> dict[str, FileResult]:
    """Process many files through one shared worker pool.

    Blocks from all files feed a single queue; per-file results are merged in
    record order afterwards, so output is a pure function of (bytes, params).
    """
    by_path = {meta.path: (meta, plan) for meta, plan in entries}
    tasks = split_into_blocks(list(entries), cfg)

    def task_fn(task: TaskDescriptor) -> list[FeatureRecord]:
        meta, plan = by_path[task.file_id]
        bound = params.with_sample_rate(meta.sample_rate_hz)
        out = []
        for idx in range(task.record_start, task.record_end):
            buf = read_record(meta, plan, idx)
            rec = process_record(buf, bound)
            out.append(
                FeatureRecord(
                    timestamp=rec.timestamp,
                    file_id=meta.path,
                    record_index=rec.record_index,
                    welch=rec.welch,
                    tol=rec.tol,
                    spl=rec.spl,
                    params_hash=rec.params_hash,
                )
            )
        return out

    outcome = run(tasks, cfg, task_fn)
    results: dict[str, FileResult] = {
        meta.path: FileResult(records=[], failed_indices=[], failure_errors=[])
        for meta, _plan in entries
    }
    for task, recs in outcome.results:
        results[task.file_id].records.extend(recs)
    for failure in outcome.failures:
        res = results[failure.task.file_id]
        res.failed_indices.extend(
            range(failure.task.record_start, failure.task.record_end)
        )
        res.failure_errors.append(failure.error)
    for res in results.values():
        res.records.sort(key=lambda r: r.record_index)
        res.failed_indices.sort()
    return results


# ---------------------------------------------------------------------------
# Serialization: newline-delimited JSON, fixed field order.

def _record_to_json(rec: FeatureRecord) -> str:
    obj = {
        "timestamp": rec.timestamp.astimezone(timezone.utc).isoformat(),
        "file": rec.file_id,
        "record": rec.record_index,
        "spl": float(rec.spl),
        "welch": [float(v) for v in rec.welch],
        "tol": [float(v) for v in rec.tol],
        "paramsHash": rec.params_hash,
    }
    return json.dumps(obj, ensure_ascii=False)


def serialize_records(records: Sequence[FeatureRecord], sink: TextIO) -> None:
    """Write one JSON object per line; doubles use shortest round-trip form.
    Floor values are finite, so no NaN/Infinity tokens ever appear."""
    for rec in records:
        sink.write(_record_to_json(rec))
        sink.write("\n")


def load_records(source: Iterable[str]) -> list[FeatureRecord]:
    out = []
    for line in source:
        line = line.strip()
        if not line:
            continue
        obj = json.loads(line)
        out.append(
            FeatureRecord(
                timestamp=datetime.fromisoformat(obj["timestamp"]),
                file_id=obj["file"],
                record_index=obj["record"],
                welch=np.array(obj["welch"]),
                tol=np.array(obj["tol"]),
                spl=obj["spl"],
                params_hash=obj["paramsHash"],
            )
        )
    return out


# ---------------------------------------------------------------------------
# Oracle validation

def oracle_record(buffer: SampleBuffer, params: AnalysisParams,
                  file_id: str = "") -> FeatureRecord:
    """Compute one record's features with the brute-force reference path."""
    x = np.asarray(buffer.samples, dtype=np.float64)
    psd = oracle.welch_psd_fast(
        x, params.window_type, params.window_size, params.window_overlap,
        params.nfft, params.sample_rate_hz,
    )
    bin_width = params.sample_rate_hz / params.nfft
    welch_db = np.array(
        [oracle.to_db(p, params.db_reference, params.calibration_db)
         if p > 0 else DB_FLOOR for p in psd]
    )

    sub_len = round(TOL_WINDOW_SEC * params.sample_rate_hz)
    sub_count = max(len(x) // sub_len, 1)
    sub_psds = [
        oracle.welch_psd_fast(
            x[i * sub_len : (i + 1) * sub_len], params.window_type,
            params.window_size, params.window_overlap, params.nfft,
            params.sample_rate_hz,
        )
        for i in range(sub_count)
    ]
    table = dsp.tol_band_table(params.sample_rate_hz, TOL_WINDOW_SEC)
    bands = [(b.low_hz, b.high_hz) for b in table.bands]
    tol_lin = oracle.tol_linear(sub_psds, bin_width, bands)
    tol_db = np.array(
        [oracle.to_db(p, params.db_reference, params.calibration_db)
         if p > 0 else DB_FLOOR for p in tol_lin]
    )
    spl_lin = oracle.spl_linear(psd, bin_width)
    spl_db = (oracle.to_db(spl_lin, params.db_reference, params.calibration_db)
              if spl_lin > 0 else DB_FLOOR)
    return FeatureRecord(
        timestamp=buffer.timestamp,
        file_id=file_id,
        record_index=buffer.record_index,
        welch=welch_db,
        tol=tol_db,
        spl=spl_db,
        params_hash=params.fingerprint(),
    )


def _de_db(values: np.ndarray) -> np.ndarray:
    return np.power(10.0, np.asarray(values, dtype=np.float64) / 10.0)


def _rel_rmse(a: np.ndarray, b: np.ndarray) -> float:
    diff = a - b
    scale = math.sqrt(float(np.mean(b * b)))
    if scale == 0.0:
        return math.sqrt(float(np.mean(diff * diff)))
    return math.sqrt(float(np.mean(diff * diff))) / scale


def validate_against_oracle(
    records: Sequence[FeatureRecord],
    oracle_records: Sequence[FeatureRecord],
    domain: str = "linear",
) -> ValidationReport:
    """Relative RMSE per feature family between engine and reference records.

    domain="linear" compares de-logged powers (the cross-validation domain);
    domain="dB" compares the serialized values directly.
    """
    if len(records) != len(oracle_records):
        raise RecordCountMismatch(
            f"{len(records)} engine records vs {len(oracle_records)} reference"
        )
    if records and records[0].params_hash != oracle_records[0].params_hash:
        raise ParamsMismatch("parameter fingerprints differ")
    if domain not in ("linear", "dB"):
        raise ValueError(f"unknown comparison domain {domain!r}")

    def prep(values):
        arr = np.asarray(values, dtype=np.float64)
        return _de_db(arr) if domain == "linear" else arr

    welch_a, welch_b, tol_a, tol_b, spl_a, spl_b = [], [], [], [], [], []
    for mine, ref in zip(records, oracle_records):
        welch_a.append(prep(mine.welch))
        welch_b.append(prep(ref.welch))
        tol_a.append(prep(mine.tol))
        tol_b.append(prep(ref.tol))
        spl_a.append(prep(mine.spl))
        spl_b.append(prep(ref.spl))

    welch_a = np.concatenate(welch_a) if welch_a else np.zeros(0)
    welch_b = np.concatenate(welch_b) if welch_b else np.zeros(0)
    tol_a = np.concatenate(tol_a) if tol_a else np.zeros(0)
    tol_b = np.concatenate(tol_b) if tol_b else np.zeros(0)
    spl_a = np.asarray(spl_a, dtype=np.float64)
    spl_b = np.asarray(spl_b, dtype=np.float64)

    max_abs = 0.0
    for a, b in ((welch_a, welch_b), (tol_a, tol_b), (spl_a, spl_b)):
        if len(a):
            max_abs = max(max_abs, float(np.max(np.abs(a - b))))
    return ValidationReport(
        rmse_welch=_rel_rmse(welch_a, welch_b) if len(welch_a) else 0.0,
        rmse_tol=_rel_rmse(tol_a, tol_b) if len(tol_a) else 0.0,
        rmse_spl=_rel_rmse(spl_a, spl_b) if len(spl_a) else 0.0,
        max_abs_error=max_abs,
        record_count=len(records),
    )
