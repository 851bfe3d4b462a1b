"""Render estimated sources by masking the mixture spectrogram.

Masks come straight from clustering posteriors (soft) or hard labels
(binary); estimates reuse the mixture phase. Output source order is the
cluster index order; evaluation resolves the permutation against
references.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .audio import Waveform
from .clustering import ClusterResult, SoftKMeansConfig, soft_kmeans
from .confidence import ConfidenceConfig
from .embedding import EmbeddingField
from .transform import StftParams, TfRepr, istft, stft

_SOFT_SUM_TOL = 1e-6


@dataclass(frozen=True)
class MaskSet:
    """K time-frequency masks, either soft (rows sum to 1) or binary."""

    masks: np.ndarray  # (K, T, F)
    kind: str

    def __post_init__(self):
        masks = np.asarray(self.masks, dtype=np.float64)
        if masks.ndim != 3:
            raise ValueError(f"masks must be 3-D (K, T, F), got {masks.shape}")
        if self.kind == "soft":
            if masks.min() < 0.0 or masks.max() > 1.0:
                raise ValueError("soft mask entries must lie in [0, 1]")
            sums = masks.sum(axis=0)
            if np.max(np.abs(sums - 1.0)) > _SOFT_SUM_TOL:
                raise ValueError("soft masks must sum to 1 at every bin")
        elif self.kind == "binary":
            if not np.all((masks == 0.0) | (masks == 1.0)):
                raise ValueError("binary mask entries must be 0 or 1")
            if not np.all(masks.sum(axis=0) == 1.0):
                raise ValueError("binary masks must have exactly one 1 per bin")
        else:
            raise ValueError(f"unknown mask kind {self.kind!r}")
        object.__setattr__(self, "masks", masks)

    @property
    def k(self) -> int:
        return self.masks.shape[0]


@dataclass(frozen=True)
class SeparationResult:
    """Estimated sources, the masks that produced them, and a model label."""

    sources: list[Waveform]
    masks: MaskSet
    model_name: str = ""


@dataclass(frozen=True)
class PipelineConfig:
    """Shared knobs for the embed -> cluster -> mask -> render pipeline."""

    stft_params: StftParams = field(default_factory=StftParams)
    k: int = 2
    stiffness: float = 5.0
    kmeans_max_iters: int = 300
    kmeans_tol: float = 1e-4
    sample_size: int = 1000
    loud_percentile: float = 0.01
    mask_kind: str = "soft"
    seed: int = 0

    def kmeans_config(self, seed: int | None = None) -> SoftKMeansConfig:
        return SoftKMeansConfig(
            k=self.k,
            stiffness=self.stiffness,
            max_iters=self.kmeans_max_iters,
            tol=self.kmeans_tol,
            seed=self.seed if seed is None else seed,
        )

    def confidence_config(self, seed: int | None = None) -> ConfidenceConfig:
        return ConfidenceConfig(
            sample_size=self.sample_size,
            loud_percentile=self.loud_percentile,
            seed=self.seed if seed is None else seed,
        )


def masks_from_posteriors(result: ClusterResult, frames: int, bins: int, kind: str = "soft") -> MaskSet:
    """Reshape posterior columns (soft) or one-hot labels (binary) to masks."""
    if result.n_points != frames * bins:
        raise ValueError(
            f"clustering has {result.n_points} rows, expected {frames}x{bins}"
        )
    if kind == "soft":
        masks = result.posteriors.T.reshape(result.k, frames, bins)
    elif kind == "binary":
        onehot = np.eye(result.k)[result.hard_labels]
        masks = onehot.T.reshape(result.k, frames, bins)
    else:
        raise ValueError(f"unknown mask kind {kind!r}")
    return MaskSet(masks, kind)


def apply_masks(mixture_tf: TfRepr, masks: MaskSet) -> list[TfRepr]:
    """Per-source spectrograms: mask times complex mixture (phase reused)."""
    if masks.masks.shape[1:] != mixture_tf.shape:
        raise ValueError(
            f"mask grid {masks.masks.shape[1:]} does not match mixture grid "
            f"{mixture_tf.shape}"
        )
    return [
        TfRepr(masks.masks[k] * mixture_tf.values, mixture_tf.params, mixture_tf.sample_rate)
        for k in range(masks.k)
    ]


def separate(
    mixture: Waveform,
    field_: EmbeddingField,
    k: int = 2,
    cfg: PipelineConfig | None = None,
    model_name: str = "",
) -> SeparationResult:
    """Cluster the embedding field and render K estimated sources.

    Runs stft -> soft K-means (on every bin) -> masks -> istft; estimates
    have the mixture's length and sample rate. Deterministic given the
    config seed.
    """
    if k < 2:
        raise ValueError(f"separation requires k >= 2, got {k}")
    if cfg is None:
        cfg = PipelineConfig(k=k)
    elif cfg.k != k:
        cfg = replace(cfg, k=k)
    mixture_tf = stft(mixture, cfg.stft_params)
    if field_.shape[:2] != mixture_tf.shape:
        raise ValueError(
            f"embedding grid {field_.shape} does not match mixture TF grid "
            f"{mixture_tf.shape}"
        )
    result = soft_kmeans(field_.points(), cfg.kmeans_config())
    masks = masks_from_posteriors(result, field_.frames, field_.bins, cfg.mask_kind)
    sources = [
        istft(tf_k, n_samples=len(mixture)) for tf_k in apply_masks(mixture_tf, masks)
    ]
    return SeparationResult(sources=sources, masks=masks, model_name=model_name)
