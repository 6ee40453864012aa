#!/usr/bin/env python3
"""Cross-validate the engine against the brute-force direct-DFT reference on
freshly generated noise records, for both built-in parameter sets."""

import sys
from dataclasses import replace
from pathlib import Path
from tempfile import TemporaryDirectory

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from pamforge import audio_ingest as ai
from pamforge import config, pipeline

FS = 32768
N_RECORDS = 20


def main() -> int:
    failed = False
    with TemporaryDirectory() as tmp:
        for name, preset in config.PRESETS.items():
            params = replace(preset, record_size_sec=1.0, sample_rate_hz=FS)
            path = Path(tmp) / f"{name}.wav"
            ai.generate_synthetic_wav(path, float(N_RECORDS), FS,
                                      ai.WhiteNoise(0.01, 7))
            meta = ai.parse_wav_header(path)
            plan = ai.plan_records(meta, 1.0)
            engine, ref = [], []
            for i in range(plan.record_count):
                buf = ai.read_record(meta, plan, i)
                engine.append(pipeline.process_record(buf, params))
                ref.append(pipeline.oracle_record(buf, params))
            rep = pipeline.validate_against_oracle(engine, ref, "linear")
            worst = max(rep.rmse_welch, rep.rmse_tol, rep.rmse_spl)
            ok = worst <= 1e-12
            failed |= not ok
            print(f"{name}: {rep.record_count} records, relative RMSE "
                  f"welch={rep.rmse_welch:.2e} tol={rep.rmse_tol:.2e} "
                  f"spl={rep.rmse_spl:.2e}  -> {'PASS' if ok else 'FAIL'}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
