import math

import pytest

from pamforge import bench
from pamforge.audio_ingest import WhiteNoise
from pamforge.dsp import AnalysisParams
from pamforge.errors import MissingBaseline

PARAMS = AnalysisParams(nfft=128, window_size=128, window_overlap=0,
                        record_size_sec=1.0, sample_rate_hz=4096)


def result(workload, concurrency, runs):
    return bench.BenchResult(workload=workload, concurrency=concurrency,
                             per_run_sec=list(runs))


def spec(files=2):
    return bench.WorkloadSpec(file_count=files, per_file_duration_sec=2.0,
                              sample_rate_hz=4096,
                              signal=WhiteNoise(0.01, 0))


class TestBenchResultStats:
    def test_mean_and_population_std(self):
        r = result(spec(), 1, [1.0, 2.0, 3.0])
        assert r.repeats == 3
        assert r.mean_sec == pytest.approx(2.0)
        assert r.std_sec == pytest.approx(math.sqrt(2.0 / 3.0))

    def test_identical_runs_zero_std(self):
        r = result(spec(), 1, [1.5, 1.5, 1.5])
        assert r.std_sec == 0.0


class TestSpeedup:
    def test_definition(self):
        results = [result(spec(), 1, [100.0]), result(spec(), 4, [25.0])]
        table = bench.speedup(results)
        by_n = {row.concurrency: row.speedup for row in table.rows}
        assert by_n[1] == 1.0
        assert by_n[4] == pytest.approx(4.0)

    def test_no_scaling(self):
        results = [result(spec(), 1, [50.0]), result(spec(), 2, [50.0])]
        by_n = {r.concurrency: r.speedup for r in bench.speedup(results).rows}
        assert by_n[2] == pytest.approx(1.0)

    def test_baseline_is_exactly_one(self):
        results = [result(spec(), 1, [3.3, 3.4, 3.5])]
        assert bench.speedup(results).rows[0].speedup == 1.0

    def test_missing_baseline(self):
        with pytest.raises(MissingBaseline):
            bench.speedup([result(spec(), 2, [10.0])])


class TestWorkloadSpec:
    def test_total_bytes(self):
        s = bench.WorkloadSpec(file_count=3, per_file_duration_sec=2.0,
                               sample_rate_hz=4096)
        assert s.total_bytes == 3 * (2 * 2 * 4096 + bench.WAV_HEADER_BYTES)


class TestRunBenchmark:
    def test_three_run_protocol(self, tmp_path):
        results = bench.run_benchmark(
            spec(files=2), [1, 2], PARAMS, tmp_path,
            repeats=3, progress_path=tmp_path / "progress.jsonl",
        )
        assert len(results) == 2
        for r in results:
            assert r.repeats == 3
            assert r.mean_sec == pytest.approx(sum(r.per_run_sec) / 3)
        # incremental persistence: one line per completed run
        lines = (tmp_path / "progress.jsonl").read_text().splitlines()
        assert len(lines) == 2 * 3

    def test_workload_files_reused(self, tmp_path):
        bench.generate_workload(spec(files=2), tmp_path / "c")
        first = sorted((tmp_path / "c").iterdir())
        bench.generate_workload(spec(files=2), tmp_path / "c")
        assert sorted((tmp_path / "c").iterdir()) == first

    def test_per_file_seeds_differ(self, tmp_path):
        paths = bench.generate_workload(spec(files=2), tmp_path / "c")
        assert paths[0].read_bytes() != paths[1].read_bytes()


class TestEmitReport:
    def _results(self):
        s = spec()
        return [result(s, 1, [4.0, 4.2, 4.4]), result(s, 2, [2.0, 2.1, 2.2])]

    def test_csv_roundtrip(self, tmp_path):
        results = self._results()
        table = bench.speedup(results)
        paths = bench.emit_report(results, table, tmp_path)
        rows = bench.parse_results_csv(paths["results"])
        assert len(rows) == 2
        for row, r in zip(rows, results):
            assert row["workload_bytes"] == r.workload.total_bytes
            assert row["concurrency"] == r.concurrency
            assert row["repeats"] == r.repeats
            assert row["mean_sec"] == r.mean_sec
            assert row["std_sec"] == r.std_sec

    def test_series_json_structure(self, tmp_path):
        import json

        results = self._results()
        paths = bench.emit_report(results, bench.speedup(results), tmp_path)
        series = json.loads(paths["series"].read_text())
        key = str(results[0].workload.total_bytes)
        assert series["series"][key]["x"] == [1, 2]
        assert series["series"][key]["y"][0] == 1.0

    def test_one_row_per_result(self, tmp_path):
        results = self._results()[:1]
        paths = bench.emit_report(results, bench.speedup(results), tmp_path)
        data_lines = [ln for ln in paths["results"].read_text().splitlines()
                      if ln and not ln.startswith("#")][1:]
        assert len(data_lines) == 1
