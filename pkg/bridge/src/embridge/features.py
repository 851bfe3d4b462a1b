"""Audio loading and spectrogram features for checkpoint inference.

The framing convention matches the separation toolkit's documented grid:
reflect-pad by ``window // 2``, frame count ``1 + (len + 2*(window//2) -
window) // hop``, square-root Hann analysis window. Keeping the grid
identical is what lets exported embedding fields line up with the
toolkit's time-frequency representation bin for bin.

Network input features are log magnitudes with per-utterance mean and
variance normalization. That choice is this bridge's own; checkpoints
trained with a different featurization should ship their own adapter.
"""

from __future__ import annotations

import numpy as np
from scipy.io import wavfile

_LOG_EPS = 1e-8


def load_mono_wav(path) -> tuple[np.ndarray, int]:
    """Read a WAV file as float64 mono in [-1, 1]."""
    rate, data = wavfile.read(path)
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise ValueError(f"unsupported WAV encoding {data.dtype}")
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    return samples, int(rate)


def sqrt_hann(length: int) -> np.ndarray:
    n = np.arange(length)
    return np.sqrt(0.5 - 0.5 * np.cos(2.0 * np.pi * n / length))


def magnitude_stft(
    samples: np.ndarray, window: int, hop: int, fft_size: int | None = None
) -> np.ndarray:
    """Magnitude spectrogram (frames, fft_size // 2 + 1) on the shared grid."""
    fft_size = fft_size or window
    if not (0 < hop <= window <= fft_size):
        raise ValueError(
            f"require 0 < hop <= window <= fft_size, got {hop}/{window}/{fft_size}"
        )
    if samples.size == 0:
        raise ValueError("empty signal")
    pad = window // 2
    padded = np.pad(samples, pad, mode="reflect")
    n_frames = 1 + (padded.size - window) // hop
    win = sqrt_hann(window)
    frames = np.stack(
        [padded[t * hop : t * hop + window] * win for t in range(n_frames)]
    )
    return np.abs(np.fft.rfft(frames, n=fft_size, axis=1))


def log_mag_features(mag: np.ndarray) -> np.ndarray:
    """Log magnitude, normalized to zero mean and unit variance per utterance."""
    logmag = np.log(mag + _LOG_EPS)
    std = logmag.std()
    if std == 0.0:
        return np.zeros_like(logmag)
    return (logmag - logmag.mean()) / std
