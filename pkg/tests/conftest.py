"""Shared fixtures and independent oracle implementations.

The oracles here are deliberately naive (loops, brute force) so they stay
independent of the library's vectorized paths.
"""

import numpy as np
import pytest

from sepconf import StftParams, Waveform, stft


def brute_silhouette(points: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """O(n^2) brute-force per-point silhouette, point by point.

    Distances are taken directly as norms of coordinate differences (no
    Gram-matrix shortcut), one row at a time.
    """
    n = len(points)
    out = np.zeros(n)
    labs = sorted(set(labels.tolist()))
    for i in range(n):
        own = labels[i]
        dists = np.linalg.norm(points - points[i], axis=1)
        own_mask = (labels == own)
        other_means = [
            float(np.mean(dists[labels == lab])) for lab in labs if lab != own
        ]
        if own_mask.sum() <= 1:
            out[i] = 0.0
            continue
        a = float(dists[own_mask].sum() / (own_mask.sum() - 1))
        b = min(other_means)
        denom = max(a, b)
        out[i] = 0.0 if denom == 0 else (b - a) / denom
    return out


def brute_si_sdr(estimate: np.ndarray, reference: np.ndarray) -> float:
    """Least-squares projection oracle for the scale-invariant SDR."""
    alpha = float(np.dot(estimate, reference) / np.dot(reference, reference))
    target = alpha * reference
    num = float(np.sum(target**2))
    den = float(np.sum((target - estimate) ** 2))
    if den <= 1e-10 * num:
        return 100.0
    if num == 0.0:
        return -100.0
    return float(np.clip(10.0 * np.log10(num / den), -100.0, 100.0))


def hard_kmeans_labels(points: np.ndarray, init_means: np.ndarray) -> np.ndarray:
    """Lloyd's algorithm from given means; the large-stiffness oracle."""
    means = init_means.copy()
    for _ in range(300):
        d2 = ((points[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
        labels = d2.argmin(axis=1)
        new_means = means.copy()
        for j in range(len(means)):
            if np.any(labels == j):
                new_means[j] = points[labels == j].mean(axis=0)
        if np.allclose(new_means, means, atol=1e-14):
            break
        means = new_means
    d2 = ((points[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
    return d2.argmin(axis=1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def short_noise():
    generator = np.random.default_rng(7)
    return Waveform(0.2 * generator.standard_normal(16000), 16000)


@pytest.fixture
def small_params():
    # small grid keeps full-pipeline tests quick
    return StftParams(window_length=256, hop_length=64, fft_size=256)


def sinusoid(freq: float, duration: float = 1.0, sample_rate: int = 16000,
             amp: float = 0.4) -> Waveform:
    t = np.arange(int(duration * sample_rate)) / sample_rate
    return Waveform(amp * np.sin(2.0 * np.pi * freq * t), sample_rate)


def disjoint_pair(duration: float = 1.0, sample_rate: int = 16000):
    """Two sinusoids at far-apart bin-center frequencies, plus their sum."""
    low = sinusoid(500.0, duration, sample_rate)   # bin 16 at 512-pt fft
    high = sinusoid(4000.0, duration, sample_rate)  # bin 128
    mix = Waveform(low.samples + high.samples, sample_rate)
    return mix, [low, high]


def oracle_refs(references, params=None):
    params = params or StftParams()
    return [stft(r, params) for r in references]
