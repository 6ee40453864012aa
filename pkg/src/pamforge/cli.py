"""Command-line entry points: process, bench, validate, synth.

Exit codes: 0 success, 2 config/usage error, 3 partial failures (failure
manifest path printed), 4 fatal I/O. Log level via the PAMFORGE_LOG env var.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__, bench, config, pipeline
from .audio_ingest import (
    Silence,
    Sine,
    WhiteNoise,
    generate_synthetic_wav,
    parse_start_time,
    parse_wav_header,
    plan_records,
    read_record,
    with_start_time,
)
from .errors import PamforgeError
from .executor import DEFAULT_BLOCK_SIZE, ExecutorConfig

log = logging.getLogger("pamforge")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARTIAL = 3
EXIT_IO = 4


def _executor_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--num-executors", type=int, default=1)
    parser.add_argument("--executor-cores", type=int, default=1)
    parser.add_argument("--block-size-mb", type=int,
                        default=DEFAULT_BLOCK_SIZE // 2 ** 20)
    parser.add_argument("--reserved-cores", type=int, default=1)
    parser.add_argument("--max-retries", type=int, default=2)


def _executor_config(args) -> ExecutorConfig:
    return ExecutorConfig(
        num_executors=args.num_executors,
        executor_cores=args.executor_cores,
        block_size_bytes=args.block_size_mb * 2 ** 20,
        reserved_cores=args.reserved_cores,
        max_retries=args.max_retries,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pamforge",
        description="FFT-based acoustic feature batch engine and benchmark "
                    "harness",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("process", help="compute features over a WAV corpus")
    p.add_argument("--input", required=True, help="directory of WAV files")
    p.add_argument("--output", required=True, help="output directory")
    p.add_argument("--params", default="set1",
                   help="preset name or JSON parameter file")
    p.add_argument("--timestamp-pattern", default=None,
                   help="strptime pattern matched against filename stems")
    p.add_argument("--expect-sample-rate", type=int, default=None,
                   help="fail fast if a file's rate differs")
    _executor_args(p)

    b = sub.add_parser("bench", help="run the speed-up benchmark sweep")
    b.add_argument("--files", type=int, required=True)
    b.add_argument("--duration-sec", type=float, required=True)
    b.add_argument("--sample-rate", type=int, default=32768)
    b.add_argument("--concurrency", default="1,2,4,8",
                   help="comma-separated worker counts; must include 1")
    b.add_argument("--repeats", type=int, default=3)
    b.add_argument("--params", default="set1")
    b.add_argument("--out", required=True, help="report directory")
    b.add_argument("--workdir", default=None,
                   help="where synthetic files go (default: <out>/work)")
    b.add_argument("--seed", type=int, default=0)

    v = sub.add_parser("validate",
                       help="cross-validate the engine against the "
                            "brute-force reference")
    v.add_argument("--input", required=True, help="directory of WAV files")
    v.add_argument("--params", default="set1")
    v.add_argument("--max-records", type=int, default=5,
                   help="records compared per file")
    v.add_argument("--threshold", type=float, default=1e-12,
                   help="relative RMSE pass threshold (linear domain)")

    s = sub.add_parser("synth", help="generate deterministic WAV files")
    s.add_argument("--out", required=True, help="output file or directory")
    s.add_argument("--files", type=int, default=1)
    s.add_argument("--duration-sec", type=float, required=True)
    s.add_argument("--sample-rate", type=int, default=32768)
    s.add_argument("--signal", choices=["silence", "sine", "noise"],
                   default="noise")
    s.add_argument("--freq", type=float, default=1000.0)
    s.add_argument("--amplitude", type=float, default=0.5)
    s.add_argument("--variance", type=float, default=0.01)
    s.add_argument("--seed", type=int, default=0)
    return parser


def _signal_from_args(args):
    if args.signal == "silence":
        return Silence()
    if args.signal == "sine":
        return Sine(freq_hz=args.freq, amplitude=args.amplitude)
    return WhiteNoise(variance=args.variance, seed=args.seed)


def _scan_corpus(input_dir: Path, record_size_sec: float,
                 timestamp_pattern: str | None,
                 expect_sample_rate: int | None):
    """Parse every WAV in the directory; unreadable files are skipped and
    reported, a rate mismatch is fatal."""
    entries = []
    skipped = []
    paths = sorted(input_dir.glob("*.wav")) + sorted(input_dir.glob("*.WAV"))
    for i, path in enumerate(paths):
        try:
            meta = parse_wav_header(path)
        except PamforgeError as exc:
            log.warning("skipping %s: %s", path, exc)
            skipped.append({"file": str(path), "error": str(exc)})
            continue
        if expect_sample_rate and meta.sample_rate_hz != expect_sample_rate:
            raise PamforgeError(
                f"{path}: sample rate {meta.sample_rate_hz} != expected "
                f"{expect_sample_rate}"
            )
        meta = with_start_time(
            meta, parse_start_time(path.name, timestamp_pattern, i)
        )
        entries.append((meta, plan_records(meta, record_size_sec)))
    return entries, skipped


def _write_manifest(out_dir: Path, params, cfg: ExecutorConfig,
                    entries, skipped) -> None:
    manifest = {
        "version": __version__,
        "params": config.params_to_json(params),
        "paramsHash": params.fingerprint(),
        "executor": {
            "numExecutors": cfg.num_executors,
            "executorCores": cfg.executor_cores,
            "blockSizeBytes": cfg.block_size_bytes,
            "maxRetries": cfg.max_retries,
            "reservedCores": cfg.reserved_cores,
        },
        "inputs": [
            {"file": meta.path,
             "bytes": meta.total_samples * meta.bytes_per_frame,
             "sampleRateHz": meta.sample_rate_hz,
             "records": plan.record_count}
            for meta, plan in entries
        ],
        "skipped": skipped,
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_process(args) -> int:
    params = config.load_params(args.params)
    cfg = _executor_config(args)
    input_dir = Path(args.input)
    if not input_dir.is_dir():
        log.error("input directory %s does not exist", input_dir)
        return EXIT_CONFIG
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)

    entries, skipped = _scan_corpus(
        input_dir, params.record_size_sec, args.timestamp_pattern,
        args.expect_sample_rate,
    )
    if not entries and not skipped:
        log.warning("no WAV files found in %s", input_dir)

    results = pipeline.process_corpus(entries, params, cfg)
    failures = list(skipped)
    for meta, _plan in entries:
        res = results[meta.path]
        out_path = out_dir / (Path(meta.path).stem + ".features.json")
        with open(out_path, "w", encoding="utf-8") as fh:
            pipeline.serialize_records(res.records, fh)
        err = "; ".join(res.failure_errors)
        for idx in res.failed_indices:
            failures.append({"file": meta.path, "record": idx, "error": err})

    _write_manifest(out_dir, params, cfg, entries, skipped)
    if failures:
        manifest_path = out_dir / "failures.json"
        with open(manifest_path, "w", encoding="utf-8") as fh:
            json.dump(failures, fh, indent=2)
            fh.write("\n")
        print(f"partial failure: see {manifest_path}")
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_bench(args) -> int:
    params = config.load_params(args.params)
    try:
        concurrencies = [int(c) for c in args.concurrency.split(",") if c]
    except ValueError:
        log.error("bad --concurrency list %r", args.concurrency)
        return EXIT_CONFIG
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    workdir = Path(args.workdir) if args.workdir else out_dir / "work"

    spec = bench.WorkloadSpec(
        file_count=args.files,
        per_file_duration_sec=args.duration_sec,
        sample_rate_hz=args.sample_rate,
        signal=WhiteNoise(variance=0.01, seed=args.seed),
    )
    results = bench.run_benchmark(
        spec, concurrencies, params, workdir, repeats=args.repeats,
        progress_path=out_dir / "progress.jsonl",
    )
    table = bench.speedup(results)
    paths = bench.emit_report(results, table, out_dir)
    for row in table.rows:
        print(f"workload {row.workload_bytes} B  n={row.concurrency}  "
              f"S={row.speedup:.3f}")
    print(f"report written to {paths['results']}")
    return EXIT_OK


def cmd_validate(args) -> int:
    params = config.load_params(args.params)
    input_dir = Path(args.input)
    if not input_dir.is_dir():
        log.error("input directory %s does not exist", input_dir)
        return EXIT_CONFIG
    entries, skipped = _scan_corpus(input_dir, params.record_size_sec, None, None)
    if not entries:
        log.error("no readable WAV files in %s", input_dir)
        return EXIT_CONFIG

    engine_records = []
    reference_records = []
    for meta, plan in entries:
        bound = params.with_sample_rate(meta.sample_rate_hz)
        for idx in range(min(plan.record_count, args.max_records)):
            buf = read_record(meta, plan, idx)
            engine_records.append(pipeline.process_record(buf, bound))
            reference_records.append(pipeline.oracle_record(buf, bound))
    report = pipeline.validate_against_oracle(engine_records, reference_records,
                                              domain="linear")
    print(f"records compared: {report.record_count}")
    print(f"relative RMSE  welch={report.rmse_welch:.3e}  "
          f"tol={report.rmse_tol:.3e}  spl={report.rmse_spl:.3e}")
    print(f"max abs error (linear): {report.max_abs_error:.3e}")
    ok = report.passed(args.threshold)
    print(f"{'PASS' if ok else 'FAIL'} at threshold {args.threshold:g}")
    return EXIT_OK if ok else EXIT_PARTIAL


def cmd_synth(args) -> int:
    signal = _signal_from_args(args)
    out = Path(args.out)
    if args.files == 1 and out.suffix.lower() == ".wav":
        generate_synthetic_wav(out, args.duration_sec, args.sample_rate, signal)
        print(out)
        return EXIT_OK
    out.mkdir(parents=True, exist_ok=True)
    for i in range(args.files):
        sig = signal
        if isinstance(sig, WhiteNoise):
            sig = WhiteNoise(variance=sig.variance, seed=sig.seed + i)
        path = out / f"synthetic_{i:05d}.wav"
        generate_synthetic_wav(path, args.duration_sec, args.sample_rate, sig)
        print(path)
    return EXIT_OK


_COMMANDS = {
    "process": cmd_process,
    "bench": cmd_bench,
    "validate": cmd_validate,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("PAMFORGE_LOG", "INFO").upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help
        return int(exc.code) if exc.code else EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except PamforgeError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("I/O failure: %s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
