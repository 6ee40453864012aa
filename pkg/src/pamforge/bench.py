"""Benchmark harness: workload sweeps, repeat-averaged wall-clock times, and
the speed-up metric T(1)/T(n).

Timing wraps only corpus processing (never setup or synthesis), each
configuration runs `repeats` times (3 by default), and results are persisted
incrementally so a crash loses at most one run. Standard deviation is
population (n), noted in the report header.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import pipeline
from .audio_ingest import (
    SignalSpec,
    WhiteNoise,
    generate_synthetic_wav,
    parse_wav_header,
    plan_records,
)
from .dsp import AnalysisParams
from .errors import MissingBaseline
from .executor import ExecutorConfig

log = logging.getLogger(__name__)

WAV_HEADER_BYTES = 44


@dataclass(frozen=True)
class WorkloadSpec:
    """Synthetic corpus description standing in for the real dataset."""

    file_count: int
    per_file_duration_sec: float
    sample_rate_hz: int = 32768
    signal: SignalSpec = field(default_factory=lambda: WhiteNoise(0.01, 0))

    @property
    def total_bytes(self) -> int:
        per_file = (round(self.per_file_duration_sec * self.sample_rate_hz) * 2
                    + WAV_HEADER_BYTES)
        return self.file_count * per_file


@dataclass
class BenchResult:
    workload: WorkloadSpec
    concurrency: int
    per_run_sec: list[float]

    @property
    def repeats(self) -> int:
        return len(self.per_run_sec)

    @property
    def mean_sec(self) -> float:
        return sum(self.per_run_sec) / len(self.per_run_sec)

    @property
    def std_sec(self) -> float:
        m = self.mean_sec
        return math.sqrt(sum((t - m) ** 2 for t in self.per_run_sec)
                         / len(self.per_run_sec))


@dataclass(frozen=True)
class SpeedupRow:
    workload_bytes: int
    concurrency: int
    speedup: float


@dataclass(frozen=True)
class SpeedupTable:
    rows: tuple[SpeedupRow, ...]


def generate_workload(spec: WorkloadSpec, workdir: Path) -> list[Path]:
    """Materialize the synthetic corpus; per-file seeds derive from the base
    seed so files differ but runs are reproducible."""
    workdir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(spec.file_count):
        signal = spec.signal
        if isinstance(signal, WhiteNoise):
            signal = WhiteNoise(variance=signal.variance, seed=signal.seed + i)
        path = workdir / f"synthetic_{i:05d}.wav"
        if not path.exists():
            generate_synthetic_wav(path, spec.per_file_duration_sec,
                                   spec.sample_rate_hz, signal)
        paths.append(path)
    return paths


def run_benchmark(
    spec: WorkloadSpec,
    concurrencies: Sequence[int],
    params: AnalysisParams,
    workdir: Path,
    repeats: int = 3,
    progress_path: Path | None = None,
    executor_template: ExecutorConfig | None = None,
) -> list[BenchResult]:
    """Time corpus processing at each concurrency level.

    Feature outputs are discarded (the determinism tie-in is checked by
    callers through process_corpus directly); only wall-clock time around the
    processing loop is recorded, mirroring the exclusion of launch time.
    """
    workdir = Path(workdir)
    paths = generate_workload(spec, workdir / "corpus")
    entries = []
    for path in paths:
        meta = parse_wav_header(path)
        entries.append((meta, plan_records(meta, params.record_size_sec)))

    template = executor_template or ExecutorConfig()
    results = []
    for concurrency in concurrencies:
        cfg = ExecutorConfig(
            num_executors=concurrency,
            executor_cores=1,
            block_size_bytes=template.block_size_bytes,
            max_retries=template.max_retries,
            reserved_cores=template.reserved_cores,
        )
        per_run = []
        for rep in range(repeats):
            start = time.perf_counter()
            file_results = pipeline.process_corpus(entries, params, cfg)
            elapsed = time.perf_counter() - start
            failed = sum(len(r.failed_indices) for r in file_results.values())
            if failed:
                log.error("benchmark run had %d failed records", failed)
            per_run.append(elapsed)
            if progress_path is not None:
                with open(progress_path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps({
                        "workload_bytes": spec.total_bytes,
                        "concurrency": concurrency,
                        "run": rep,
                        "sec": elapsed,
                    }) + "\n")
        result = BenchResult(workload=spec, concurrency=concurrency,
                             per_run_sec=per_run)
        if spec.file_count == 0:
            log.warning("degenerate empty workload: mean %.6f s", result.mean_sec)
        results.append(result)
    return results


def speedup(results: Sequence[BenchResult]) -> SpeedupTable:
    """S(n) = T(1)/T(n) per workload; requires a concurrency-1 baseline."""
    by_workload: dict[int, list[BenchResult]] = {}
    for r in results:
        by_workload.setdefault(r.workload.total_bytes, []).append(r)
    rows = []
    for workload_bytes, group in by_workload.items():
        baseline = next((r for r in group if r.concurrency == 1), None)
        if baseline is None:
            raise MissingBaseline(
                f"workload {workload_bytes} B has no concurrency-1 run"
            )
        for r in sorted(group, key=lambda r: r.concurrency):
            s = 1.0 if r.concurrency == 1 else baseline.mean_sec / r.mean_sec
            rows.append(SpeedupRow(workload_bytes=workload_bytes,
                                   concurrency=r.concurrency, speedup=s))
    return SpeedupTable(rows=tuple(rows))


def emit_report(results: Sequence[BenchResult], table: SpeedupTable,
                out_dir: Path) -> dict[str, Path]:
    """Write results.csv, speedup.csv and a series.json for plotting tools."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    speedup_by_key = {(r.workload_bytes, r.concurrency): r.speedup
                      for r in table.rows}

    results_csv = out_dir / "results.csv"
    with open(results_csv, "w", encoding="utf-8", newline="") as fh:
        fh.write("# std_sec is the population standard deviation\n")
        fh.write("workload_bytes,concurrency,repeats,mean_sec,std_sec,speedup\n")
        for r in results:
            s = speedup_by_key.get((r.workload.total_bytes, r.concurrency))
            s_txt = repr(s) if s is not None else ""
            fh.write(f"{r.workload.total_bytes},{r.concurrency},{r.repeats},"
                     f"{r.mean_sec!r},{r.std_sec!r},{s_txt}\n")

    speedup_csv = out_dir / "speedup.csv"
    with open(speedup_csv, "w", encoding="utf-8", newline="") as fh:
        fh.write("workload_bytes,concurrency,speedup\n")
        for row in table.rows:
            fh.write(f"{row.workload_bytes},{row.concurrency},{row.speedup!r}\n")

    series_json = out_dir / "series.json"
    series = {}
    for row in table.rows:
        series.setdefault(str(row.workload_bytes), {"x": [], "y": []})
        series[str(row.workload_bytes)]["x"].append(row.concurrency)
        series[str(row.workload_bytes)]["y"].append(row.speedup)
    with open(series_json, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "metric": "speedup T(1)/T(n)",
                "runs": [
                    {
                        "workload_bytes": r.workload.total_bytes,
                        "concurrency": r.concurrency,
                        "repeats": r.repeats,
                        "mean_sec": r.mean_sec,
                        "std_sec": r.std_sec,
                        "per_run_sec": r.per_run_sec,
                    }
                    for r in results
                ],
                "series": series,
            },
            fh, indent=2,
        )
        fh.write("\n")
    return {"results": results_csv, "speedup": speedup_csv, "series": series_json}


def parse_results_csv(path: Path) -> list[dict]:
    """Re-read results.csv; used by the round-trip check."""
    import csv

    rows = []
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    for row in csv.DictReader(lines):
        rows.append({
            "workload_bytes": int(row["workload_bytes"]),
            "concurrency": int(row["concurrency"]),
            "repeats": int(row["repeats"]),
            "mean_sec": float(row["mean_sec"]),
            "std_sec": float(row["std_sec"]),
            "speedup": float(row["speedup"]) if row["speedup"] else None,
        })
    return rows
