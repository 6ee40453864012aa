#!/usr/bin/env python3
"""Desk-scale scaling experiment: times a synthetic corpus at increasing
worker counts and writes results.csv / speedup.csv / series.json.

Equivalent to `pamforge bench` with the sweep defaults used in the scaling
acceptance check. On a machine with fewer than 8 cores the speed-up numbers
are reported but not meaningful.
"""

import argparse
import os
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from pamforge import bench, config
from pamforge.audio_ingest import WhiteNoise


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--files", type=int, default=64)
    ap.add_argument("--duration-sec", type=float, default=60.0)
    ap.add_argument("--sample-rate", type=int, default=32768)
    ap.add_argument("--concurrency", default="1,2,4,8")
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--params", default="set1")
    ap.add_argument("--out", default="scaling_report")
    args = ap.parse_args()

    cores = os.cpu_count() or 1
    if cores < 8:
        print(f"warning: only {cores} cores; scaling results will be flat")

    params = config.load_params(args.params)
    spec = bench.WorkloadSpec(
        file_count=args.files,
        per_file_duration_sec=args.duration_sec,
        sample_rate_hz=args.sample_rate,
        signal=WhiteNoise(0.01, 0),
    )
    out = Path(args.out)
    concurrencies = [int(c) for c in args.concurrency.split(",")]
    results = bench.run_benchmark(
        spec, concurrencies, params, out / "work",
        repeats=args.repeats, progress_path=out / "progress.jsonl",
    )
    table = bench.speedup(results)
    paths = bench.emit_report(results, table, out)
    for row in table.rows:
        print(f"n={row.concurrency:<3d} S={row.speedup:.3f}")
    print(f"report: {paths['results']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
