"""Ground-truth-free separation confidence over a clustered embedding field.

The confidence of a mixture is C(X) = S(X) * P(X):

* S(X): mean silhouette of a fixed-size sample drawn from the loudest
  fraction of time-frequency bins. Silhouettes are computed within the
  sample, using the clustering's hard labels to partition it.
* P(X): mean posterior strength ``(K * max_k gamma[i,k] - 1) / (K - 1)``
  over the full loud pool, mapping a maximally ambiguous posterior (max
  1/K) to 0 and a fully committed one to 1.

Multiplying the two means confidence is high only when the embedding both
forms well-separated clusters and assigns loud bins decisively.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .clustering import ClusterResult
from .embedding import EmbeddingField
from .transform import loudest_bins


class DegenerateClusteringError(RuntimeError):
    """Loud bins collapse to a single cluster: silhouette is undefined.

    Signals unusably low confidence; selection layers rank such an outcome
    below every numeric confidence.
    """


@dataclass(frozen=True)
class ConfidenceConfig:
    """Sample size, loudness percentile, seed, and distance choice."""

    sample_size: int = 1000
    loud_percentile: float = 0.01
    seed: int = 0
    distance: str = "euclidean"

    def __post_init__(self):
        if self.sample_size < 2:
            raise ValueError(f"sample_size must be >= 2, got {self.sample_size}")
        if not (0.0 < self.loud_percentile <= 1.0):
            raise ValueError(
                f"loud_percentile must be in (0, 1], got {self.loud_percentile}"
            )
        if self.distance != "euclidean":
            raise ValueError(f"unsupported distance {self.distance!r}")


@dataclass(frozen=True)
class ConfidenceReport:
    """S(X), P(X), C(X) plus the sample that produced them."""

    silhouette: float
    posterior_strength: float
    confidence: float
    k: int
    sampled_indices: np.ndarray = field(repr=False)
    loud_indices_count: int = 0
    per_point_silhouette: np.ndarray = field(repr=False, default=None)
    seed: int = 0

    def __post_init__(self):
        if not -1.0 <= self.silhouette <= 1.0:
            raise ValueError(f"silhouette {self.silhouette} outside [-1, 1]")
        if not 0.0 <= self.posterior_strength <= 1.0:
            raise ValueError(
                f"posterior_strength {self.posterior_strength} outside [0, 1]"
            )
        if not -1.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [-1, 1]")

    def to_dict(self) -> dict:
        return {
            "silhouette": self.silhouette,
            "posterior_strength": self.posterior_strength,
            "confidence": self.confidence,
            "k": self.k,
            "sample_size_used": int(self.sampled_indices.size),
            "loud_pool_size": self.loud_indices_count,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def silhouette_point(
    index: int, points_sample: np.ndarray, labels_sample: np.ndarray
) -> float:
    """Silhouette of one sampled point: (b - a) / max(a, b).

    ``a`` is the mean distance to the other points of its own cluster
    (0-width clusters and singletons return 0 by convention); ``b`` is the
    smallest mean distance to any other cluster's points.
    """
    labels_sample = np.asarray(labels_sample)
    own = labels_sample[index]
    others = np.unique(labels_sample)
    if others.size < 2:
        raise DegenerateClusteringError("sample covers a single cluster")
    dists = np.linalg.norm(points_sample - points_sample[index], axis=1)
    own_mask = labels_sample == own
    if own_mask.sum() <= 1:
        return 0.0
    a = dists[own_mask].sum() / (own_mask.sum() - 1)
    b = min(np.mean(dists[labels_sample == lab]) for lab in others if lab != own)
    denom = max(a, b)
    if denom == 0.0:
        return 0.0
    return (b - a) / denom


def _sample_silhouettes(
    points_sample: np.ndarray, labels_sample: np.ndarray
) -> np.ndarray:
    """Vectorized per-point silhouettes over one sample."""
    labels_sample = np.asarray(labels_sample)
    labs = np.unique(labels_sample)
    if labs.size < 2:
        raise DegenerateClusteringError("sample covers a single cluster")
    n = points_sample.shape[0]
    sq = np.einsum("ij,ij->i", points_sample, points_sample)
    dmat = points_sample @ points_sample.T
    dmat *= -2.0
    dmat += sq[:, None]
    dmat += sq[None, :]
    np.sqrt(np.maximum(dmat, 0.0, out=dmat), out=dmat)
    np.fill_diagonal(dmat, 0.0)
    sums = np.stack([dmat[:, labels_sample == lab].sum(axis=1) for lab in labs], axis=1)
    counts = np.array([(labels_sample == lab).sum() for lab in labs])
    own_col = np.searchsorted(labs, labels_sample)
    rows = np.arange(n)

    own_count = counts[own_col]
    a = np.zeros(n)
    multi = own_count > 1
    a[multi] = sums[rows[multi], own_col[multi]] / (own_count[multi] - 1)

    mean_other = sums / counts[None, :]
    mean_other[rows, own_col] = np.inf
    b = mean_other.min(axis=1)

    denom = np.maximum(a, b)
    s = np.zeros(n)
    nz = denom > 0
    s[nz] = (b[nz] - a[nz]) / denom[nz]
    s[~multi] = 0.0  # singleton convention
    return s


def _draw_silhouette_sample(
    field_: EmbeddingField,
    result: ClusterResult,
    mag: np.ndarray,
    cfg: ConfidenceConfig,
) -> tuple[np.ndarray, np.ndarray]:
    """Seeded loud-pool sample and its per-point silhouettes."""
    pool = loudest_bins(mag, cfg.loud_percentile)
    if pool.size < 2 or np.unique(result.hard_labels[pool]).size < 2:
        raise DegenerateClusteringError("loud bins collapse to a single cluster")
    rng = np.random.default_rng(cfg.seed)
    take = min(cfg.sample_size, pool.size)
    sampled = pool[rng.choice(pool.size, size=take, replace=False)]
    points = field_.points()[sampled]
    labels = result.hard_labels[sampled]
    return _sample_silhouettes(points, labels), sampled


def silhouette_score(
    field_: EmbeddingField,
    result: ClusterResult,
    mag: np.ndarray,
    cfg: ConfidenceConfig,
) -> tuple[float, np.ndarray]:
    """Mean silhouette over a seeded sample of the loudest bins.

    Draws ``min(sample_size, pool)`` indices uniformly without replacement
    from the loudest ``loud_percentile`` of bins, partitions the sample by
    the clustering's hard labels, and averages the per-point silhouettes.

    Raises
    ------
    DegenerateClusteringError
        If the loud pool (or the drawn sample) covers fewer than two
        clusters.
    """
    per_point, sampled = _draw_silhouette_sample(field_, result, mag, cfg)
    return float(per_point.mean()), sampled


def posterior_strength(result: ClusterResult, loud_indices: np.ndarray) -> float:
    """Mean of ``(K * max_k gamma - 1) / (K - 1)`` over the loud pool."""
    k = result.k
    if k < 2:
        raise ValueError(f"posterior strength requires K >= 2, got {k}")
    loud_indices = np.asarray(loud_indices)
    if loud_indices.size == 0:
        raise ValueError("loud_indices must be non-empty")
    top = result.posteriors[loud_indices].max(axis=1)
    # clip float dust: normalized rows can put max a few ulp outside [1/K, 1]
    return float(np.clip(np.mean((k * top - 1.0) / (k - 1.0)), 0.0, 1.0))


def confidence(
    field_: EmbeddingField,
    result: ClusterResult,
    mag: np.ndarray,
    cfg: ConfidenceConfig | None = None,
) -> ConfidenceReport:
    """Full confidence report: C(X) = S(X) * P(X).

    S uses the seeded subsample; P uses the entire loud pool. Negative
    silhouettes are not clipped, so C can be negative; ranking downstream
    still works.
    """
    if cfg is None:
        cfg = ConfidenceConfig()
    if result.n_points != field_.frames * field_.bins:
        raise ValueError(
            f"clustering covers {result.n_points} points but field has "
            f"{field_.frames}x{field_.bins} bins"
        )
    per_point, sampled = _draw_silhouette_sample(field_, result, mag, cfg)
    s = float(per_point.mean())
    pool = loudest_bins(mag, cfg.loud_percentile)
    p = posterior_strength(result, pool)
    return ConfidenceReport(
        silhouette=s,
        posterior_strength=p,
        confidence=s * p,
        k=result.k,
        sampled_indices=sampled,
        loud_indices_count=int(pool.size),
        per_point_silhouette=per_point,
        seed=cfg.seed,
    )
