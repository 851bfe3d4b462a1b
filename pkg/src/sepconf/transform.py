"""Short-time Fourier analysis, inverse overlap-add, and loudness ranking.

Framing convention: the signal is reflect-padded by ``window_length // 2``
on both ends, so frame ``t`` is centered at sample ``t * hop_length`` of the
original signal. The frame count is ``1 + (len(x) + 2*(W//2) - W) // hop``,
which for an even window reduces to ``1 + len(x) // hop``. Samples past the
last full window are dropped.

The inverse is least-squares overlap-add: each frame is windowed again and
accumulated, then divided by the summed squared window (guarded by a small
epsilon). For any window/hop pair whose squared window sums to a nonzero
constant-overlap-add denominator this inverts an unmodified forward
transform to machine precision over the interior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import check_NOLA

from .audio import Waveform

ISTFT_EPS = 1e-10

DEFAULT_WINDOW_LENGTH = 512
DEFAULT_HOP_LENGTH = 128
DEFAULT_FFT_SIZE = 512
DEFAULT_WINDOW = "sqrt_hann"


def make_window(name: str, length: int) -> np.ndarray:
    """Periodic analysis window by name: sqrt_hann, hann, or rect."""
    n = np.arange(length)
    hann = 0.5 - 0.5 * np.cos(2.0 * np.pi * n / length)
    if name == "sqrt_hann":
        return np.sqrt(hann)
    if name == "hann":
        return hann
    if name == "rect":
        return np.ones(length)
    raise ValueError(f"unknown window {name!r}; use sqrt_hann, hann, or rect")


@dataclass(frozen=True)
class StftParams:
    """Analysis parameters: window/hop/FFT lengths and the window name.

    The default (512-sample square-root Hann, hop 128, at 16 kHz audio:
    32 ms / 8 ms) is a standard configuration for separation work.
    """

    window_length: int = DEFAULT_WINDOW_LENGTH
    hop_length: int = DEFAULT_HOP_LENGTH
    fft_size: int = DEFAULT_FFT_SIZE
    window: str = DEFAULT_WINDOW

    def __post_init__(self):
        if not (0 < self.hop_length <= self.window_length <= self.fft_size):
            raise ValueError(
                "require 0 < hop_length <= window_length <= fft_size, got "
                f"hop={self.hop_length} window={self.window_length} fft={self.fft_size}"
            )
        win = make_window(self.window, self.window_length)
        if not check_NOLA(win, self.window_length, self.window_length - self.hop_length):
            raise ValueError(
                f"window {self.window!r} with hop {self.hop_length} does not satisfy "
                "the overlap-add invertibility condition"
            )

    @property
    def bins(self) -> int:
        return self.fft_size // 2 + 1

    def window_values(self) -> np.ndarray:
        return make_window(self.window, self.window_length)

    def frame_count(self, n_samples: int) -> int:
        padded = n_samples + 2 * (self.window_length // 2)
        if padded < self.window_length:
            raise ValueError(f"waveform of {n_samples} samples is too short to frame")
        return 1 + (padded - self.window_length) // self.hop_length


@dataclass(frozen=True)
class TfRepr:
    """Complex time-frequency matrix plus the parameters that produced it."""

    values: np.ndarray  # complex, shape (frames, bins)
    params: StftParams
    sample_rate: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        if values.ndim != 2:
            raise ValueError(f"values must be 2-D, got shape {values.shape}")
        if values.shape[1] != self.params.bins:
            raise ValueError(
                f"expected {self.params.bins} bins for fft_size "
                f"{self.params.fft_size}, got {values.shape[1]}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("time-frequency values must be finite")
        object.__setattr__(self, "values", values)

    @property
    def frames(self) -> int:
        return self.values.shape[0]

    @property
    def bins(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def stft(waveform: Waveform, params: StftParams | None = None) -> TfRepr:
    """Forward short-time Fourier transform.

    Parameters
    ----------
    waveform : Waveform
        Non-empty input signal.
    params : StftParams, optional
        Analysis parameters; defaults to the library defaults.

    Returns
    -------
    TfRepr
        Complex matrix of shape (frames, fft_size // 2 + 1).
    """
    if params is None:
        params = StftParams()
    x = waveform.samples
    if x.size == 0:
        raise ValueError("cannot transform an empty waveform")
    pad = params.window_length // 2
    padded = np.pad(x, pad, mode="reflect") if pad else x
    n_frames = params.frame_count(x.size)
    frames = sliding_window_view(padded, params.window_length)[:: params.hop_length]
    frames = frames[:n_frames] * params.window_values()
    values = np.fft.rfft(frames, n=params.fft_size, axis=1)
    return TfRepr(values, params, waveform.sample_rate)


def istft(tf: TfRepr, n_samples: int | None = None) -> Waveform:
    """Inverse transform by least-squares overlap-add.

    Without ``n_samples`` the output has ``(frames - 1) * hop`` samples
    (the span covered by full analysis windows after removing the center
    padding, for an even window length). Pass ``n_samples`` to zero-pad or
    trim to an exact length, e.g. the original mixture length.
    """
    params = tf.params
    win = params.window_values()
    w, hop = params.window_length, params.hop_length
    pad = w // 2
    frames = np.fft.irfft(tf.values, n=params.fft_size, axis=1)[:, :w] * win
    total = (tf.frames - 1) * hop + w
    acc = np.zeros(total)
    den = np.zeros(total)
    for t in range(tf.frames):
        start = t * hop
        acc[start : start + w] += frames[t]
        den[start : start + w] += win * win
    core = acc[pad : total - pad] / np.maximum(den[pad : total - pad], ISTFT_EPS)
    if n_samples is not None:
        if n_samples <= core.size:
            core = core[:n_samples]
        else:
            core = np.concatenate([core, np.zeros(n_samples - core.size)])
    return Waveform(core, tf.sample_rate)


def magnitude(tf: TfRepr) -> np.ndarray:
    """Elementwise complex modulus of the time-frequency values."""
    return np.abs(tf.values)


def loudest_bins(mag: np.ndarray, percentile: float) -> np.ndarray:
    """Flat indices of the loudest fraction of time-frequency bins.

    Returns the top ``ceil(percentile * T * F)`` bins ranked by linear
    magnitude, loudest first. Ties are broken by ascending flat index
    (row-major over the (frames, bins) grid), so the result is a pure
    function of its inputs.
    """
    mag = np.asarray(mag)
    if mag.size == 0:
        raise ValueError("cannot rank an empty magnitude matrix")
    if not (0.0 < percentile <= 1.0):
        raise ValueError(f"percentile must be in (0, 1], got {percentile}")
    count = math.ceil(percentile * mag.size)
    order = np.argsort(-mag.ravel(), kind="stable")
    return order[:count]
