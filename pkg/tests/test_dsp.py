import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pamforge import dsp, oracle
from pamforge.dsp import DB_FLOOR, AnalysisParams
from pamforge.errors import (
    InvariantViolation,
    LengthMismatch,
    NegativeInput,
    RecordTooShort,
    TolWindowTooShort,
)

SET1 = AnalysisParams(nfft=256, window_size=256, window_overlap=128,
                      record_size_sec=1.0)
SET2 = AnalysisParams(nfft=1024, window_size=1024, window_overlap=0,
                      record_size_sec=30.0)


class TestAnalysisParams:
    def test_overlap_must_be_below_window(self):
        with pytest.raises(InvariantViolation):
            AnalysisParams(nfft=256, window_size=256, window_overlap=256,
                           record_size_sec=1.0)

    def test_window_must_fit_record(self):
        with pytest.raises(InvariantViolation):
            AnalysisParams(nfft=4096, window_size=4096, window_overlap=0,
                           record_size_sec=1.0, sample_rate_hz=1000)

    def test_fingerprint_stable_and_sensitive(self):
        assert SET1.fingerprint() == AnalysisParams(
            nfft=256, window_size=256, window_overlap=128, record_size_sec=1.0
        ).fingerprint()
        assert SET1.fingerprint() != SET2.fingerprint()


class TestMakeWindow:
    def test_hamming_endpoints(self):
        w = dsp.make_window("hamming", 64)
        assert w.coeffs[0] == pytest.approx(0.08)
        assert w.coeffs[-1] == pytest.approx(0.08)

    def test_hamming_odd_peak(self):
        w = dsp.make_window("hamming", 65)
        assert w.coeffs[32] == pytest.approx(1.0)

    def test_hamming_single_point(self):
        w = dsp.make_window("hamming", 1)
        assert list(w.coeffs) == [1.0]

    def test_rectangular(self):
        w = dsp.make_window("rectangular", 4)
        assert list(w.coeffs) == [1.0] * 4
        assert w.sum_squares == 4.0

    def test_matches_reference_formula(self):
        mine = dsp.make_window("hamming", 37).coeffs
        ref = oracle.hamming(37)
        np.testing.assert_allclose(mine, ref, rtol=0, atol=0)


class TestSegmentFrames:
    def test_set1_record(self):
        plan = dsp.segment_frames(32768, 256, 128)
        assert plan.hop == 128
        assert plan.frame_count == 255

    def test_set2_record(self):
        plan = dsp.segment_frames(983040, 1024, 0)
        assert plan.frame_count == 960

    def test_single_frame(self):
        assert dsp.segment_frames(256, 256, 128).frame_count == 1

    def test_too_short(self):
        with pytest.raises(RecordTooShort):
            dsp.segment_frames(255, 256, 0)

    @given(length=st.integers(8, 5000), window=st.integers(2, 512),
           overlap_frac=st.floats(0, 0.95))
    def test_frames_stay_in_bounds(self, length, window, overlap_frac):
        if length < window:
            return
        overlap = int(window * overlap_frac)
        plan = dsp.segment_frames(length, window, overlap)
        last_start = (plan.frame_count - 1) * plan.hop
        assert last_start + window <= length
        # one more frame would not fit
        assert last_start + plan.hop + window > length


class TestPeriodogram:
    def test_dc_only_spectrum(self):
        fs, n = 1000, 64
        w = dsp.make_window("rectangular", n)
        p = dsp.periodogram(np.ones(n), w, n, fs)
        assert p.values[0] == pytest.approx(n / fs, rel=1e-12)
        assert np.all(p.values[1:] <= p.values[0] * 1e-12)

    def test_exact_bin_sine_power(self):
        fs, n, k0, amp = 8192, 256, 10, 0.7
        t = np.arange(n) / fs
        freq = k0 * fs / n
        x = amp * np.sin(2 * np.pi * freq * t)
        w = dsp.make_window("rectangular", n)
        p = dsp.periodogram(x, w, n, fs)
        assert p.values[k0] * p.bin_width_hz == pytest.approx(amp ** 2 / 2,
                                                             rel=1e-12)

    def test_length_mismatch(self):
        w = dsp.make_window("hamming", 64)
        with pytest.raises(LengthMismatch):
            dsp.periodogram(np.zeros(65), w, 64, 1000)

    def test_matches_direct_dft(self, rng):
        fs, n = 4000, 48
        x = rng.normal(size=n)
        w = dsp.make_window("hamming", n)
        mine = dsp.periodogram(x, w, n, fs).values
        ref = oracle.periodogram(list(x), oracle.hamming(n), n, fs)
        np.testing.assert_allclose(mine, ref, rtol=1e-12, atol=1e-18)

    def test_zero_padding(self, rng):
        fs, n, nfft = 4000, 100, 256
        x = rng.normal(size=n)
        w = dsp.make_window("hamming", n)
        mine = dsp.periodogram(x, w, nfft, fs).values
        ref = oracle.periodogram(list(x), oracle.hamming(n), nfft, fs)
        assert len(mine) == nfft // 2 + 1
        np.testing.assert_allclose(mine, ref, rtol=1e-12, atol=1e-18)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2 ** 31), window_type=st.sampled_from(
        ["hamming", "rectangular"]), pad=st.booleans())
    def test_parseval(self, seed, window_type, pad):
        fs, n = 1024, 64
        nfft = 2 * n if pad else n
        x = np.random.default_rng(seed).normal(size=n)
        w = dsp.make_window(window_type, n)
        p = dsp.periodogram(x, w, nfft, fs)
        integral = float(np.sum(p.values) * p.bin_width_hz)
        direct = float(np.sum((w.coeffs * x) ** 2) / w.sum_squares)
        assert integral == pytest.approx(direct, rel=1e-12)


class TestWelch:
    def test_identical_frames_equal_single_periodogram(self):
        fs, n = 8192, 256
        rng = np.random.default_rng(3)
        frame = rng.normal(size=n)
        record = np.tile(frame, 4)
        params = AnalysisParams(nfft=n, window_size=n, window_overlap=0,
                                record_size_sec=len(record) / fs,
                                sample_rate_hz=fs)
        w = dsp.make_window("hamming", n)
        single = dsp.periodogram(frame, w, n, fs).values
        welch = dsp.welch_psd(record, params)
        assert welch.frame_count == 4
        np.testing.assert_array_equal(welch.values, single)

    def test_white_noise_total_power(self):
        # 30 s at 32768 Hz, set-2 framing: 960 averages keep the integral
        # within a few percent of the noise variance
        fs = 32768
        rng = np.random.default_rng(99)
        x = rng.normal(0, 0.1, size=30 * fs)
        p = dsp.welch_psd(x, SET2.with_sample_rate(fs))
        assert p.frame_count == 960
        assert p.total_power() == pytest.approx(0.01, rel=0.10)

    def test_sequential_mean_matches_per_frame_loop(self, rng):
        fs, n = 2048, 128
        x = rng.normal(size=1024)
        params = AnalysisParams(nfft=n, window_size=n, window_overlap=0,
                                record_size_sec=0.5, sample_rate_hz=fs)
        w = dsp.make_window("hamming", n)
        acc = np.zeros(n // 2 + 1)
        for i in range(8):
            acc += dsp.periodogram(x[i * n:(i + 1) * n], w, n, fs).values
        acc /= 8
        np.testing.assert_array_equal(dsp.welch_psd(x, params).values, acc)

    def test_one_sided_folding_matches_two_sided_dft(self, rng):
        # fold a full two-sided direct DFT and compare bin by bin
        fs, n = 1000, 32
        x = rng.normal(size=n)
        w = dsp.make_window("hamming", n)
        p = dsp.periodogram(x, w, n, fs).values
        xw = x * w.coeffs
        k = np.arange(n)
        basis = np.exp(-2j * np.pi * np.outer(k, k) / n)
        full = np.abs(basis @ xw) ** 2 / (fs * w.sum_squares)
        folded = np.empty(n // 2 + 1)
        folded[0] = full[0]
        folded[n // 2] = full[n // 2]
        for i in range(1, n // 2):
            folded[i] = full[i] + full[n - i]
        np.testing.assert_allclose(p, folded, rtol=1e-12)


class TestTolBandTable:
    def test_1khz_center_exact(self):
        table = dsp.tol_band_table(32768)
        band = next(b for b in table.bands if b.index == 30)
        assert band.center_hz == pytest.approx(1000.0, rel=1e-12)
        assert band.low_hz == pytest.approx(10 ** 2.95)
        assert band.high_hz == pytest.approx(10 ** 3.05)

    def test_edges_contiguous(self):
        table = dsp.tol_band_table(32768)
        for a, b in zip(table.bands, table.bands[1:]):
            if b.index == a.index + 1:
                assert a.high_hz == pytest.approx(b.low_hz, rel=1e-12)

    def test_top_band_below_nyquist(self):
        table = dsp.tol_band_table(32768)
        top = table.bands[-1]
        assert 10 ** ((top.index + 0.5) / 10) <= 16384
        assert 10 ** ((top.index + 1.5) / 10) > 16384

    def test_short_window_rejected(self):
        with pytest.raises(TolWindowTooShort):
            dsp.tol_band_table(32768, tol_window_sec=0.5)

    def test_min_center_respects_window(self):
        table = dsp.tol_band_table(32768, tol_window_sec=1.0)
        assert table.bands[0].center_hz >= 1.0


class TestTol:
    def _flat_psd(self, bin_width, n_bins, level=1.0):
        return dsp.PsdVector(values=np.full(n_bins, level),
                             bin_width_hz=bin_width, frame_count=1)

    def test_flat_psd_band_power_counts_bins(self):
        bw = 0.25
        psd = self._flat_psd(bw, 20000)
        table = dsp.tol_band_table(8000)
        out = dsp.tol([psd], table)
        freqs = psd.frequencies_hz
        for value, band in zip(out.values, out.bands):
            bins = np.sum((freqs >= band.low_hz) & (freqs < band.high_hz))
            expected = 10 * np.log10(bins * bw)
            assert value == pytest.approx(expected, abs=1e-9)

    def test_unit_band_power_is_zero_db(self):
        # single band holding exactly 1.0 of integrated power
        bw = 0.5
        psd = self._flat_psd(bw, 10000, level=0.0)
        table = dsp.tol_band_table(8000)
        band = next(b for b in table.bands if b.index == 30)
        freqs = psd.frequencies_hz
        mask = (freqs >= band.low_hz) & (freqs < band.high_hz)
        values = psd.values.copy()
        values[mask] = 1.0 / (mask.sum() * bw)
        psd = dsp.PsdVector(values=values, bin_width_hz=bw, frame_count=1)
        out = dsp.tol([psd], table)
        idx = [b.index for b in out.bands].index(30)
        assert out.values[idx] == pytest.approx(0.0, abs=1e-9)

    def test_mean_over_subrecords(self):
        bw = 0.5
        a = self._flat_psd(bw, 10000, level=1.0)
        b = self._flat_psd(bw, 10000, level=3.0)
        table = dsp.tol_band_table(8000)
        merged = dsp.tol([a, b], table)
        single = dsp.tol([self._flat_psd(bw, 10000, level=2.0)], table)
        np.testing.assert_allclose(merged.values, single.values, atol=1e-9)

    def test_empty_bands_dropped(self):
        # 32 Hz bins leave every band below ~900 Hz without a single bin
        psd = self._flat_psd(32.0, 513)
        table = dsp.tol_band_table(32768)
        out = dsp.tol([psd], table)
        assert len(out.bands) < len(table.bands)
        assert all(b.high_hz > 32.0 for b in out.bands)

    def test_calibration_shifts(self):
        psd = self._flat_psd(0.25, 20000)
        table = dsp.tol_band_table(8000)
        base = dsp.tol([psd], table)
        shifted = dsp.tol([psd], table, calibration_db=12.0)
        np.testing.assert_allclose(shifted.values - base.values, 12.0)


class TestSplAndDecibels:
    def test_unit_rms_sine_rectangular_is_zero_db(self):
        fs, n = 8192, 256
        t = np.arange(n) / fs
        x = np.sqrt(2) * np.sin(2 * np.pi * (10 * fs / n) * t)
        w = dsp.make_window("rectangular", n)
        p = dsp.periodogram(x, w, n, fs)
        assert dsp.spl(p) == pytest.approx(0.0, abs=1e-9)

    def test_hamming_sine_close_to_zero_db(self):
        fs = 8192
        t = np.arange(fs) / fs
        x = np.sqrt(2) * np.sin(2 * np.pi * 320.0 * t)
        params = AnalysisParams(nfft=256, window_size=256, window_overlap=128,
                                record_size_sec=1.0, sample_rate_hz=fs)
        p = dsp.welch_psd(x, params)
        assert dsp.spl(p) == pytest.approx(0.0, abs=0.05)

    def test_zero_record_hits_floor(self):
        p = dsp.PsdVector(values=np.zeros(129), bin_width_hz=32.0,
                          frame_count=1)
        assert dsp.spl(p) == DB_FLOOR
        assert dsp.spl(p, calibration_db=120.0) == DB_FLOOR

    def test_calibration_additive(self):
        p = dsp.PsdVector(values=np.ones(129), bin_width_hz=32.0,
                          frame_count=1)
        assert dsp.spl(p, calibration_db=120.0) - dsp.spl(p) == \
            pytest.approx(120.0)

    def test_to_decibels_identities(self):
        assert dsp.to_decibels(1.0, 1.0) == 0.0
        assert dsp.to_decibels(100.0, 1.0) == pytest.approx(20.0)
        assert dsp.to_decibels(0.0, 1.0) == DB_FLOOR

    def test_negative_rejected(self):
        with pytest.raises(NegativeInput):
            dsp.to_decibels(-1.0, 1.0)
        with pytest.raises(NegativeInput):
            dsp.to_decibels(1.0, 0.0)

    @settings(max_examples=30, deadline=None)
    @given(alpha=st.floats(0.01, 100.0), seed=st.integers(0, 2 ** 31))
    def test_power_linearity(self, alpha, seed):
        fs, n = 2048, 128
        x = np.random.default_rng(seed).normal(size=4 * n)
        params = AnalysisParams(nfft=n, window_size=n, window_overlap=0,
                                record_size_sec=4 * n / fs, sample_rate_hz=fs)
        base = dsp.welch_psd(x, params)
        scaled = dsp.welch_psd(alpha * x, params)
        np.testing.assert_allclose(scaled.values, alpha ** 2 * base.values,
                                   rtol=1e-9)
        shift = dsp.spl(scaled) - dsp.spl(base)
        assert shift == pytest.approx(20 * np.log10(alpha), abs=1e-9)

    def test_tol_power_never_exceeds_spl_integral(self, rng):
        fs = 8192
        x = rng.normal(0, 0.1, size=fs)
        params = AnalysisParams(nfft=1024, window_size=1024, window_overlap=0,
                                record_size_sec=1.0, sample_rate_hz=fs)
        p = dsp.welch_psd(x, params)
        table = dsp.tol_band_table(fs)
        out = dsp.tol([p], table)
        band_total = float(np.sum(10 ** (out.values / 10)))
        assert band_total <= p.total_power() * (1 + 1e-9)
