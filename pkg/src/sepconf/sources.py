"""Synthetic source families for desk-scale benchmarks.

Each family is a deterministic generator keyed by an RNG: band-limited tone
stacks, chirps, filtered noise bursts, and pulse trains. Families occupy
distinct frequency bands so that two-source mixtures drawn from different
families have (nearly) disjoint time-frequency support, which keeps
ideal-mask separation quality high and controllable.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import butter, sosfilt

from .audio import Waveform


def _am_envelope(n: int, sample_rate: int, rng: np.random.Generator) -> np.ndarray:
    """Slow amplitude modulation so sources are not stationary."""
    rate = rng.uniform(0.5, 2.0)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    t = np.arange(n) / sample_rate
    return 0.6 + 0.4 * np.sin(2.0 * np.pi * rate * t + phase)


def tone_stack(
    n: int, sample_rate: int, rng: np.random.Generator, low: float, high: float,
    n_tones: int = 3,
) -> np.ndarray:
    """Sum of a few sinusoids with random frequencies inside a band."""
    t = np.arange(n) / sample_rate
    out = np.zeros(n)
    freqs = rng.uniform(low, high, size=n_tones)
    for f in freqs:
        out += rng.uniform(0.5, 1.0) * np.sin(
            2.0 * np.pi * f * t + rng.uniform(0.0, 2.0 * np.pi)
        )
    return out * _am_envelope(n, sample_rate, rng)


def chirp(
    n: int, sample_rate: int, rng: np.random.Generator, f_start: float, f_end: float
) -> np.ndarray:
    """Linear sweep between two band edges, repeated over the clip."""
    t = np.arange(n) / sample_rate
    sweep_len = rng.uniform(0.8, 1.6)
    pos = (t % sweep_len) / sweep_len
    f0 = f_start + rng.uniform(-0.05, 0.05) * (f_end - f_start)
    inst = f0 + (f_end - f0) * pos
    phase = 2.0 * np.pi * np.cumsum(inst) / sample_rate
    return np.sin(phase) * _am_envelope(n, sample_rate, rng)


def noise_band(
    n: int, sample_rate: int, rng: np.random.Generator, low: float, high: float
) -> np.ndarray:
    """Band-pass filtered noise with burst on/off gating."""
    sos = butter(6, [low, high], btype="bandpass", fs=sample_rate, output="sos")
    x = sosfilt(sos, rng.standard_normal(n))
    gate_rate = rng.uniform(1.0, 3.0)
    t = np.arange(n) / sample_rate
    gate = 0.5 * (1.0 + np.sign(np.sin(2.0 * np.pi * gate_rate * t + rng.uniform(0, np.pi))))
    smooth = np.convolve(gate, np.ones(256) / 256.0, mode="same")
    return x * (0.2 + 0.8 * smooth)


def pulse_train(
    n: int, sample_rate: int, rng: np.random.Generator, f0_low: float, f0_high: float
) -> np.ndarray:
    """Periodic decaying-sinusoid clicks at a random rate and pitch."""
    rate = rng.uniform(3.0, 7.0)
    f0 = rng.uniform(f0_low, f0_high)
    period = int(sample_rate / rate)
    click_len = min(int(0.06 * sample_rate), period)
    t = np.arange(click_len) / sample_rate
    click = np.sin(2.0 * np.pi * f0 * t) * np.exp(-t / 0.012)
    out = np.zeros(n)
    offset = int(rng.integers(0, period))
    for start in range(offset, n, period):
        seg = min(click_len, n - start)
        out[start : start + seg] += click[:seg]
    return out


# Registered kinds: name -> generator(n, sample_rate, rng). Band edges are
# chosen so that the listed domain pairs occupy disjoint bands.
SOURCE_KINDS = {
    "tones_low": lambda n, sr, rng: tone_stack(n, sr, rng, 250.0, 1200.0),
    "tones_high": lambda n, sr, rng: tone_stack(n, sr, rng, 3200.0, 6400.0),
    "chirp_up": lambda n, sr, rng: chirp(n, sr, rng, 300.0, 2400.0),
    "chirp_down": lambda n, sr, rng: chirp(n, sr, rng, 6500.0, 3600.0),
    "noise_mid": lambda n, sr, rng: noise_band(n, sr, rng, 2600.0, 5400.0),
    "pulses_low": lambda n, sr, rng: pulse_train(n, sr, rng, 400.0, 900.0),
}


def generate_source(kind: str, n: int, sample_rate: int, rng: np.random.Generator) -> Waveform:
    """Instantiate one registered source kind, RMS-normalized to 0.1."""
    if kind not in SOURCE_KINDS:
        raise ValueError(f"unknown source kind {kind!r}; known: {sorted(SOURCE_KINDS)}")
    x = SOURCE_KINDS[kind](n, sample_rate, rng)
    rms = np.sqrt(np.mean(x**2))
    if rms > 0:
        x = x * (0.1 / rms)
    return Waveform(x, sample_rate)
