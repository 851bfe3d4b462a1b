"""Time-domain audio: the Waveform type, WAV file I/O, and resampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

_INT16_FULL_SCALE = 32768.0


@dataclass(frozen=True)
class Waveform:
    """Mono audio samples with a sample rate.

    Samples are dimensionless amplitudes, nominally in [-1, 1]. Instances
    are treated as immutable; do not write into ``samples`` after
    construction.
    """

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        if int(self.sample_rate) <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate


def read_wav(path) -> tuple[Waveform, str]:
    """Read a WAV file as a mono Waveform.

    Supports 16-bit PCM and 32-bit float. Multi-channel input is downmixed
    by averaging the channels. Returns the waveform together with the
    encoding name ("pcm16" or "float32") so callers can write outputs in
    the same encoding.
    """
    sample_rate, data = wavfile.read(path)
    if data.dtype == np.int16:
        encoding = "pcm16"
        samples = data.astype(np.float64) / _INT16_FULL_SCALE
    elif data.dtype == np.float32:
        encoding = "float32"
        samples = data.astype(np.float64)
    elif data.dtype == np.float64:
        encoding = "float32"
        samples = data
    else:
        raise ValueError(
            f"unsupported WAV encoding {data.dtype}; expected int16 or float32"
        )
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    return Waveform(samples, sample_rate), encoding


def write_wav(path, waveform: Waveform, encoding: str = "float32") -> None:
    """Write a mono Waveform as 16-bit PCM or 32-bit float WAV."""
    x = waveform.samples
    if encoding == "pcm16":
        scaled = np.clip(x, -1.0, 1.0) * (_INT16_FULL_SCALE - 1)
        wavfile.write(path, waveform.sample_rate, np.round(scaled).astype(np.int16))
    elif encoding == "float32":
        wavfile.write(path, waveform.sample_rate, x.astype(np.float32))
    else:
        raise ValueError(f"unknown encoding {encoding!r}; use 'pcm16' or 'float32'")


def resample(waveform: Waveform, target_rate: int) -> Waveform:
    """Resample with a Kaiser-windowed sinc (polyphase) filter.

    Resampling is never applied implicitly anywhere in the library; call
    this explicitly when a file's rate differs from the analysis rate.
    """
    if target_rate <= 0:
        raise ValueError(f"target_rate must be positive, got {target_rate}")
    if target_rate == waveform.sample_rate:
        return waveform
    g = np.gcd(int(target_rate), waveform.sample_rate)
    up, down = target_rate // g, waveform.sample_rate // g
    return Waveform(resample_poly(waveform.samples, up, down), target_rate)
