"""Deterministic double-precision DSP primitives.

Conventions, fixed so that the brute-force oracle can match them exactly:
- density-scaled one-sided PSD, 1/(fs * sum(w^2)) with doubling of interior
  bins (the pwelch convention);
- symmetric Hamming window by default, rectangular available;
- no per-frame detrending;
- Welch averaging sums periodograms sequentially in frame index;
- base-10 third-octave bands, centers 10^(n/10), half-open [low, high) bin
  assignment;
- zero linear power maps to a finite dB floor so outputs stay serializable.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    InvariantViolation,
    LengthMismatch,
    NegativeInput,
    RecordTooShort,
    TolWindowTooShort,
)

log = logging.getLogger(__name__)

DB_FLOOR = -1000.0

_warned_empty_bands: set = set()


@dataclass(frozen=True)
class AnalysisParams:
    """FFT analysis parameter set plus engine-level knobs."""

    nfft: int
    window_size: int
    window_overlap: int
    record_size_sec: float
    sample_rate_hz: int = 32768
    window_type: str = "hamming"
    calibration_db: float = 0.0
    db_reference: float = 1.0

    def __post_init__(self):
        if self.nfft < 1:
            raise InvariantViolation(f"nfft {self.nfft} must be positive")
        if not 0 <= self.window_overlap < self.window_size <= self.nfft:
            raise InvariantViolation(
                f"need 0 <= overlap ({self.window_overlap}) < windowSize "
                f"({self.window_size}) <= nfft ({self.nfft})"
            )
        if self.window_type not in ("hamming", "rectangular"):
            raise InvariantViolation(f"unknown window type {self.window_type!r}")
        if self.sample_rate_hz < 1:
            raise InvariantViolation("sample rate must be positive")
        if self.record_size_sec <= 0:
            raise InvariantViolation("record size must be positive")
        if self.window_size > self.record_size_sec * self.sample_rate_hz:
            raise InvariantViolation(
                f"windowSize {self.window_size} exceeds record length "
                f"{self.record_size_sec * self.sample_rate_hz} samples"
            )

    @property
    def record_size_samples(self) -> int:
        return round(self.record_size_sec * self.sample_rate_hz)

    @property
    def hop(self) -> int:
        return self.window_size - self.window_overlap

    def with_sample_rate(self, sample_rate_hz: int) -> "AnalysisParams":
        from dataclasses import replace

        return replace(self, sample_rate_hz=sample_rate_hz)

    def fingerprint(self) -> str:
        """Stable hash of the parameter values, recorded on every output."""
        canonical = json.dumps(
            {
                "nfft": self.nfft,
                "windowSize": self.window_size,
                "windowOverlap": self.window_overlap,
                "recordSizeInSec": self.record_size_sec,
                "sampleRateHz": self.sample_rate_hz,
                "windowType": self.window_type,
                "calibrationDb": self.calibration_db,
                "dbReference": self.db_reference,
            },
            sort_keys=True,
        )
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class WindowCoeffs:
    coeffs: np.ndarray
    sum_squares: float

    def __len__(self) -> int:
        return len(self.coeffs)


@dataclass(frozen=True)
class PsdVector:
    """One-sided power spectral density, linear units (pressure^2/Hz)."""

    values: np.ndarray  # length nfft//2 + 1
    bin_width_hz: float
    frame_count: int

    @property
    def frequencies_hz(self) -> np.ndarray:
        return np.arange(len(self.values)) * self.bin_width_hz

    def total_power(self) -> float:
        # integral over the one-sided spectrum
        return float(np.sum(self.values) * self.bin_width_hz)


@dataclass(frozen=True)
class TolBand:
    index: int
    center_hz: float
    low_hz: float
    high_hz: float


@dataclass(frozen=True)
class TolBandTable:
    bands: tuple[TolBand, ...]

    def __len__(self) -> int:
        return len(self.bands)


@dataclass(frozen=True)
class TolVector:
    values: np.ndarray  # dB, one per retained band
    bands: tuple[TolBand, ...]


@dataclass(frozen=True)
class FramePlan:
    frame_count: int
    hop: int


def make_window(window_type: str, window_size: int) -> WindowCoeffs:
    """Symmetric Hamming (0.54 - 0.46 cos) or all-ones rectangular window."""
    if window_size < 1:
        raise InvariantViolation(f"window size {window_size} < 1")
    if window_type == "rectangular":
        w = np.ones(window_size)
    elif window_type == "hamming":
        if window_size == 1:
            w = np.ones(1)
        else:
            n = np.arange(window_size, dtype=np.float64)
            w = 0.54 - 0.46 * np.cos(2.0 * np.pi * n / (window_size - 1))
    else:
        raise InvariantViolation(f"unknown window type {window_type!r}")
    return WindowCoeffs(coeffs=w, sum_squares=float(np.sum(w * w)))


def segment_frames(length: int, window_size: int, window_overlap: int) -> FramePlan:
    """Frame plan for one record; trailing samples short of a full frame are
    dropped."""
    if length < window_size:
        raise RecordTooShort(f"record of {length} samples < window {window_size}")
    hop = window_size - window_overlap
    return FramePlan(frame_count=(length - window_size) // hop + 1, hop=hop)


def _one_sided_scale(nfft: int) -> np.ndarray:
    n_bins = nfft // 2 + 1
    scale = np.full(n_bins, 2.0)
    scale[0] = 1.0
    if nfft % 2 == 0:
        scale[-1] = 1.0
    return scale


def periodogram(
    frame: np.ndarray, window: WindowCoeffs, nfft: int, sample_rate_hz: int
) -> PsdVector:
    """One-sided density-scaled periodogram of a single windowed frame,
    zero-padded to nfft."""
    if len(frame) != len(window):
        raise LengthMismatch(f"frame {len(frame)} != window {len(window)}")
    xw = np.asarray(frame, dtype=np.float64) * window.coeffs
    spectrum = np.fft.rfft(xw, n=nfft)
    p = (np.abs(spectrum) ** 2) * _one_sided_scale(nfft)
    p /= sample_rate_hz * window.sum_squares
    return PsdVector(values=p, bin_width_hz=sample_rate_hz / nfft, frame_count=1)


def _frame_psd_matrix(samples: np.ndarray, params: AnalysisParams,
                      window: WindowCoeffs) -> np.ndarray:
    plan = segment_frames(len(samples), params.window_size, params.window_overlap)
    frames = np.lib.stride_tricks.sliding_window_view(samples, params.window_size)
    frames = frames[:: plan.hop][: plan.frame_count]
    xw = frames * window.coeffs
    spectra = np.fft.rfft(xw, n=params.nfft, axis=1)
    p = (np.abs(spectra) ** 2) * _one_sided_scale(params.nfft)
    p /= params.sample_rate_hz * window.sum_squares
    return p


def welch_psd(samples: np.ndarray, params: AnalysisParams) -> PsdVector:
    """Welch estimate: arithmetic mean of per-frame periodograms.

    Frames are summed sequentially in frame index so the result is
    bit-identical regardless of worker count.
    """
    window = make_window(params.window_type, params.window_size)
    per_frame = _frame_psd_matrix(np.asarray(samples, dtype=np.float64),
                                  params, window)
    acc = np.zeros(per_frame.shape[1])
    for row in per_frame:
        acc += row
    acc /= per_frame.shape[0]
    return PsdVector(
        values=acc,
        bin_width_hz=params.sample_rate_hz / params.nfft,
        frame_count=per_frame.shape[0],
    )


def tol_band_table(sample_rate_hz: int, tol_window_sec: float = 1.0) -> TolBandTable:
    """Base-10 third-octave bands: center 10^(n/10), edges 10^((n +/- 0.5)/10).

    Included bands have center >= max(1/tolWindowSec, 1 Hz) and upper edge at
    or below Nyquist.
    """
    if tol_window_sec < 1.0:
        raise TolWindowTooShort(
            f"TOL window {tol_window_sec} s below the 1 s standard minimum"
        )
    min_center = max(1.0 / tol_window_sec, 1.0)
    nyquist = sample_rate_hz / 2.0
    bands = []
    n = 0
    while True:
        center = 10.0 ** (n / 10.0)
        high = 10.0 ** ((n + 0.5) / 10.0)
        if high > nyquist:
            break
        if center >= min_center:
            bands.append(
                TolBand(index=n, center_hz=center,
                        low_hz=10.0 ** ((n - 0.5) / 10.0), high_hz=high)
            )
        n += 1
    return TolBandTable(bands=tuple(bands))


def tol(
    psd_sequence: Sequence[PsdVector],
    table: TolBandTable,
    db_reference: float = 1.0,
    calibration_db: float = 0.0,
) -> TolVector:
    """Third-octave levels from PSDs of consecutive 1 s sub-records.

    Per band: mean over sub-records of the band-integrated power, then dB.
    Each bin belongs to exactly one band via half-open [low, high) intervals.
    Bands with no bins are dropped with a warning, never silently zeroed.
    """
    if not psd_sequence:
        raise InvariantViolation("tol needs at least one sub-record PSD")
    bin_width = psd_sequence[0].bin_width_hz
    if any(abs(p.bin_width_hz - bin_width) > 1e-12 for p in psd_sequence):
        raise InvariantViolation("sub-record PSDs disagree on bin width")

    freqs = psd_sequence[0].frequencies_hz
    mean_psd = np.zeros(len(freqs))
    for p in psd_sequence:
        mean_psd += p.values
    mean_psd /= len(psd_sequence)

    kept_bands = []
    powers = []
    empty = []
    for band in table.bands:
        mask = (freqs >= band.low_hz) & (freqs < band.high_hz)
        if not mask.any():
            empty.append(band.index)
            continue
        kept_bands.append(band)
        powers.append(float(np.sum(mean_psd[mask]) * bin_width))
    if empty:
        key = (round(bin_width, 9), tuple(empty))
        if key not in _warned_empty_bands:  # once per configuration, not per record
            _warned_empty_bands.add(key)
            log.warning(
                "dropping %d empty TOL bands (bin width %.3f Hz): indices %s",
                len(empty), bin_width, empty,
            )
    values = to_decibels(np.array(powers), db_reference)
    values = np.where(values > DB_FLOOR, values + calibration_db, values)
    return TolVector(values=values, bands=tuple(kept_bands))


def spl(psd: PsdVector, db_reference: float = 1.0,
        calibration_db: float = 0.0) -> float:
    """Broadband sound pressure level: dB of the full-band PSD integral."""
    total = psd.total_power()
    level = to_decibels(total, db_reference)
    if level <= DB_FLOOR:
        return DB_FLOOR
    return level + calibration_db


def to_decibels(linear, reference: float = 1.0, floor_db: float = DB_FLOOR):
    """10*log10(linear / reference^2); zero maps to the floor. Scalar or array."""
    if reference <= 0:
        raise NegativeInput(f"reference {reference} must be positive")
    arr = np.asarray(linear, dtype=np.float64)
    if np.any(arr < 0):
        raise NegativeInput("negative linear power")
    ref2 = reference * reference
    with np.errstate(divide="ignore"):
        db = np.where(arr > 0, 10.0 * np.log10(np.maximum(arr, 1e-300) / ref2),
                      floor_db)
    db = np.maximum(db, floor_db)
    if np.isscalar(linear) or getattr(linear, "ndim", 1) == 0:
        return float(db)
    return db
