"""Batch engine for FFT-based underwater-acoustic features with a worker-pool
executor and a speed-up benchmark harness."""

__version__ = "0.1.0"
