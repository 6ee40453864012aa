import numpy as np
import pytest

from pamforge import audio_ingest as ai


@pytest.fixture
def wav_factory(tmp_path):
    """Write a synthetic WAV into the test's tmp dir and parse it back."""

    counter = {"n": 0}

    def make(duration_sec, sample_rate_hz, signal):
        counter["n"] += 1
        path = tmp_path / f"test_{counter['n']:03d}.wav"
        ai.generate_synthetic_wav(path, duration_sec, sample_rate_hz, signal)
        return ai.parse_wav_header(path)

    return make


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
