"""Brute-force reference implementation used only for cross-validation.

Everything here is a literal transcription of the defining formulas: direct
O(N^2) DFT sums, explicit per-frame loops, per-bin band summation. No FFT, no
vectorized framing, nothing shared with the engine's dsp module, so agreement
between the two is meaningful evidence.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

DB_FLOOR = -1000.0


def direct_dft(x: Sequence[float], nfft: int) -> np.ndarray:
    """One-sided DFT bins 0..nfft//2 by the direct sum definition."""
    n_bins = nfft // 2 + 1
    out = np.zeros(n_bins, dtype=complex)
    for k in range(n_bins):
        acc = 0.0 + 0.0j
        for n in range(min(len(x), nfft)):
            angle = -2.0 * math.pi * k * n / nfft
            acc += x[n] * complex(math.cos(angle), math.sin(angle))
        out[k] = acc
    return out


def hamming(n: int) -> list[float]:
    if n == 1:
        return [1.0]
    return [0.54 - 0.46 * math.cos(2.0 * math.pi * i / (n - 1)) for i in range(n)]


def window_coeffs(window_type: str, n: int) -> list[float]:
    if window_type == "hamming":
        return hamming(n)
    if window_type == "rectangular":
        return [1.0] * n
    raise ValueError(window_type)


def periodogram(frame, window, nfft: int, fs: int) -> np.ndarray:
    w = window
    xw = [frame[i] * w[i] for i in range(len(frame))]
    spectrum = direct_dft(xw, nfft)
    sumsq = sum(c * c for c in w)
    n_bins = nfft // 2 + 1
    p = np.zeros(n_bins)
    for k in range(n_bins):
        scale = 2.0
        if k == 0 or (nfft % 2 == 0 and k == n_bins - 1):
            scale = 1.0
        p[k] = scale * abs(spectrum[k]) ** 2 / (fs * sumsq)
    return p


def welch_psd(samples, window_type: str, window_size: int, overlap: int,
              nfft: int, fs: int) -> np.ndarray:
    w = window_coeffs(window_type, window_size)
    hop = window_size - overlap
    frame_count = (len(samples) - window_size) // hop + 1
    acc = np.zeros(nfft // 2 + 1)
    for i in range(frame_count):
        frame = samples[i * hop : i * hop + window_size]
        acc += periodogram(frame, w, nfft, fs)
    return acc / frame_count


def band_power(psd: np.ndarray, bin_width: float, low: float, high: float) -> float:
    total = 0.0
    for k in range(len(psd)):
        f = k * bin_width
        if low <= f < high:
            total += psd[k] * bin_width
    return total


def tol_linear(psd_list: list[np.ndarray], bin_width: float,
               bands: list[tuple[float, float]]) -> list[float]:
    """Mean band power across sub-records, per (low, high) band; empty bands
    are skipped like the engine does."""
    out = []
    for low, high in bands:
        has_bin = any(low <= k * bin_width < high for k in range(len(psd_list[0])))
        if not has_bin:
            continue
        per_sub = [band_power(p, bin_width, low, high) for p in psd_list]
        out.append(sum(per_sub) / len(per_sub))
    return out


def spl_linear(psd: np.ndarray, bin_width: float) -> float:
    return float(sum(p * bin_width for p in psd))


def to_db(power: float, reference: float = 1.0,
          calibration_db: float = 0.0) -> float:
    if power <= 0:
        return DB_FLOOR
    return 10.0 * math.log10(power / (reference * reference)) + calibration_db


def fast_direct_dft(frames: np.ndarray, nfft: int) -> np.ndarray:
    """Matrix form of the direct DFT sum for many frames at once.

    Still O(N^2) per transform and independent of any FFT; used where the
    per-sample python loop would be too slow for the acceptance runtime.
    """
    frames = np.asarray(frames, dtype=np.float64)
    if frames.shape[1] < nfft:
        pad = np.zeros((frames.shape[0], nfft - frames.shape[1]))
        frames = np.hstack([frames, pad])
    k = np.arange(nfft // 2 + 1)
    n = np.arange(nfft)
    basis = np.exp(-2j * np.pi * np.outer(n, k) / nfft)
    return frames[:, :nfft] @ basis


def welch_psd_fast(samples, window_type: str, window_size: int, overlap: int,
                   nfft: int, fs: int) -> np.ndarray:
    """Same estimate as welch_psd but with the matrix-form direct DFT."""
    w = np.array(window_coeffs(window_type, window_size))
    hop = window_size - overlap
    frame_count = (len(samples) - window_size) // hop + 1
    frames = np.stack(
        [np.asarray(samples[i * hop : i * hop + window_size]) * w
         for i in range(frame_count)]
    )
    spectra = fast_direct_dft(frames, nfft)
    n_bins = nfft // 2 + 1
    scale = np.full(n_bins, 2.0)
    scale[0] = 1.0
    if nfft % 2 == 0:
        scale[-1] = 1.0
    p = (np.abs(spectra) ** 2) * scale / (fs * float(np.sum(w * w)))
    acc = np.zeros(n_bins)
    for row in p:
        acc += row
    return acc / frame_count
