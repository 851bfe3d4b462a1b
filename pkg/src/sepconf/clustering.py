"""Soft K-means over embedding points.

The E-step computes responsibilities

    gamma[i, k] = exp(-beta * d2(x_i, mu_k)) / sum_l exp(-beta * d2(x_i, mu_l))

with squared Euclidean distances and a log-sum-exp shift (mandatory for
numerical stability at large stiffness). The M-step replaces each mean by
the responsibility-weighted average of the points. Iteration stops when the
mean centroid movement drops below ``tol`` or after ``max_iters`` rounds.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

_EMPTY_CLUSTER_WEIGHT = 1e-10


@dataclass(frozen=True)
class SoftKMeansConfig:
    """Cluster count, stiffness (inverse temperature), and stopping rules.

    The default stiffness of 5.0 assumes unit-box embeddings (sigmoid
    range), where squared inter-cluster distances are O(1): responsibilities
    come out crisp but not saturated.
    """

    k: int = 2
    stiffness: float = 5.0
    max_iters: int = 300
    tol: float = 1e-4
    seed: int = 0
    init: str = "kmeans++"
    initial_means: np.ndarray | None = None

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"k must be >= 2, got {self.k}")
        if self.stiffness <= 0:
            raise ValueError(f"stiffness must be > 0, got {self.stiffness}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.tol <= 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.init not in ("kmeans++", "provided"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.init == "provided":
            if self.initial_means is None:
                raise ValueError("init='provided' requires initial_means")
            means = np.asarray(self.initial_means, dtype=np.float64)
            if means.shape[0] != self.k:
                raise ValueError(
                    f"initial_means has {means.shape[0]} rows, expected k={self.k}"
                )
            object.__setattr__(self, "initial_means", means)


@dataclass(frozen=True)
class ClusterResult:
    """Means, per-point posteriors, hard labels, and convergence info.

    ``objective_trace`` holds the per-iteration soft-distortion values (a
    temperature-smoothed point-to-nearest-centroid distortion; hard
    K-means distortion in the large-stiffness limit).
    """

    means: np.ndarray  # (K, D)
    posteriors: np.ndarray  # (N, K), rows sum to 1
    hard_labels: np.ndarray  # (N,), argmax of each posterior row
    iterations: int
    converged: bool
    objective_trace: np.ndarray = field(repr=False, default=None)

    @property
    def k(self) -> int:
        return self.means.shape[0]

    @property
    def n_points(self) -> int:
        return self.posteriors.shape[0]


def kmeanspp_init(points: np.ndarray, k: int, seed: int = 0) -> np.ndarray:
    """Squared-distance-weighted seeding; deterministic given the seed.

    The first mean is drawn uniformly from the points; each further mean is
    drawn with probability proportional to the squared distance to the
    nearest mean chosen so far. Identical points (total weight zero) fall
    back to a uniform draw.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if n < k:
        raise ValueError(f"need at least k={k} points, got {n}")
    rng = np.random.default_rng(seed)
    chosen = np.empty(k, dtype=np.intp)
    chosen[0] = rng.integers(n)
    d2 = np.sum((points - points[chosen[0]]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            chosen[j] = rng.choice(n, p=d2 / total)
        else:
            chosen[j] = rng.integers(n)
        d2 = np.minimum(d2, np.sum((points - points[chosen[j]]) ** 2, axis=1))
    return points[chosen].copy()


def _squared_distances(
    points: np.ndarray, means: np.ndarray, point_sq: np.ndarray | None = None
) -> np.ndarray:
    # ||x||^2 - 2 x.mu + ||mu||^2, clipped at 0 against rounding
    if point_sq is None:
        point_sq = np.einsum("ij,ij->i", points, points)
    d2 = points @ means.T
    d2 *= -2.0
    d2 += point_sq[:, None]
    d2 += np.einsum("ij,ij->i", means, means)[None, :]
    return np.maximum(d2, 0.0, out=d2)


def _estep(d2: np.ndarray, beta: float) -> tuple[np.ndarray, float]:
    """Responsibilities plus the soft-distortion objective at these means.

    The objective is ``sum_i softmin_k d2(x_i, mu_k)`` with
    ``softmin_k v_k = -(1/beta) log sum_k exp(-beta v_k)``, i.e. each
    point's temperature-smoothed distance to its nearest centroid. Both
    half-steps of the alternation provably never increase it (unlike the
    expected distortion ``sum gamma * d2``, which the E-step can raise by
    trading distortion against assignment entropy); as beta grows it
    converges to the classic hard K-means distortion.
    """
    logits = d2 * -beta
    shift = logits.max(axis=1, keepdims=True)
    logits -= shift
    gamma = np.exp(logits, out=logits)
    norm = gamma.sum(axis=1, keepdims=True)
    gamma /= norm
    objective = float(-np.sum(shift + np.log(norm)) / beta)
    return gamma, objective


def soft_kmeans(points: np.ndarray, cfg: SoftKMeansConfig) -> ClusterResult:
    """Fit soft K-means and return posteriors, means, and hard labels.

    Hard labels are the argmax of each posterior row (lowest index on exact
    ties). ``objective_trace`` records the soft distortion (see ``_estep``)
    of the means entering each iteration; it is non-increasing. A cluster
    whose total responsibility collapses to zero is reseeded to the point
    farthest from its assigned mean (with a warning), keeping the cluster
    count fixed; the reseed jump is the one event that may break the
    trace's monotonicity.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValueError(f"points must be 2-D (N, D), got shape {points.shape}")
    if not np.all(np.isfinite(points)):
        raise ValueError("points must be finite")
    n = points.shape[0]
    if n < cfg.k:
        raise ValueError(f"need at least k={cfg.k} points, got {n}")

    if cfg.init == "provided":
        means = cfg.initial_means.copy()
    else:
        means = kmeanspp_init(points, cfg.k, cfg.seed)

    beta = cfg.stiffness
    point_sq = np.einsum("ij,ij->i", points, points)
    trace = []
    converged = False
    iterations = 0
    gamma = None
    for _ in range(cfg.max_iters):
        iterations += 1
        d2 = _squared_distances(points, means, point_sq)
        gamma, objective = _estep(d2, beta)
        trace.append(objective)

        weights = gamma.sum(axis=0)
        empty = weights < _EMPTY_CLUSTER_WEIGHT
        if np.any(empty):
            labels = np.argmax(gamma, axis=1)
            own_d2 = d2[np.arange(n), labels]
            for k_idx in np.flatnonzero(empty):
                far = int(np.argmax(own_d2))
                means[k_idx] = points[far]
                own_d2[far] = -1.0  # don't reseed two clusters to one point
                warnings.warn(
                    f"cluster {k_idx} collapsed; reseeded to farthest point {far}",
                    RuntimeWarning,
                    stacklevel=2,
                )
            d2 = _squared_distances(points, means, point_sq)
            gamma, _ = _estep(d2, beta)
            weights = gamma.sum(axis=0)

        new_means = (gamma.T @ points) / weights[:, None]
        movement = np.mean(np.linalg.norm(new_means - means, axis=1))
        means = new_means
        if movement < cfg.tol:
            converged = True
            break

    # final E-step so posteriors and labels describe the returned means
    posteriors, _ = _estep(_squared_distances(points, means, point_sq), beta)
    hard_labels = np.argmax(posteriors, axis=1)
    return ClusterResult(
        means=means,
        posteriors=posteriors,
        hard_labels=hard_labels,
        iterations=iterations,
        converged=converged,
        objective_trace=np.asarray(trace),
    )
