"""Ground-truth metrics and selection-quality statistics.

The separation metric is the scale-invariant signal-to-distortion ratio:
the estimate is compared against its least-squares projection onto the
reference, so any nonzero rescaling of the estimate scores identically.
Values are clamped to +/-100 dB to keep reports finite.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .audio import Waveform

SDR_CAP_DB = 100.0
_MAX_PERMUTATION_SOURCES = 6


@dataclass(frozen=True)
class EvalResult:
    """Per-source SI-SDR (dB) under the best source-to-reference matching."""

    per_source_sdr: np.ndarray  # (K,), ordered by estimate index
    mean_sdr: float
    permutation: tuple[int, ...]  # estimate j is scored against reference permutation[j]

    def to_dict(self) -> dict:
        return {
            "per_source_sdr": [float(v) for v in self.per_source_sdr],
            "mean_sdr": self.mean_sdr,
            "permutation": list(self.permutation),
        }


@dataclass(frozen=True)
class SelectionStats:
    """Confusion counts (predicted x true) with per-label precision/recall."""

    labels: tuple[str, ...]
    confusion: np.ndarray  # (M, M), rows predicted, columns true
    precision: np.ndarray
    recall: np.ndarray

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "confusion": self.confusion.tolist(),
            "precision": [float(v) for v in self.precision],
            "recall": [float(v) for v in self.recall],
        }


def si_sdr(estimate: Waveform, reference: Waveform) -> float:
    """Scale-invariant SDR in dB, clamped to [-100, +100].

    Projects the estimate onto the reference (alpha = <est, ref> / ||ref||^2)
    and returns ``10 log10(||alpha ref||^2 / ||alpha ref - est||^2)``. A
    residual below 1e-10 of the target energy hits the +100 dB cap.
    """
    if len(estimate) != len(reference):
        raise ValueError(
            f"length mismatch: estimate {len(estimate)} vs reference {len(reference)}"
        )
    s = reference.samples
    s_hat = estimate.samples
    ref_energy = float(np.dot(s, s))
    if ref_energy == 0.0:
        raise ValueError("reference is all-zero")
    alpha = float(np.dot(s_hat, s)) / ref_energy
    target = alpha * s
    target_energy = float(np.dot(target, target))
    residual_energy = float(np.sum((target - s_hat) ** 2))
    if residual_energy <= 1e-10 * target_energy:
        return SDR_CAP_DB
    if target_energy == 0.0:
        return -SDR_CAP_DB
    value = 10.0 * np.log10(target_energy / residual_energy)
    return float(np.clip(value, -SDR_CAP_DB, SDR_CAP_DB))


def eval_separation(
    estimates: list[Waveform], references: list[Waveform]
) -> EvalResult:
    """Score K estimates against K references, resolving the permutation.

    Searches all K! assignments exhaustively (intended for K <= 4) and
    keeps the one with the highest mean SI-SDR.
    """
    if len(estimates) != len(references):
        raise ValueError(
            f"count mismatch: {len(estimates)} estimates vs "
            f"{len(references)} references"
        )
    k = len(estimates)
    if k == 0:
        raise ValueError("nothing to evaluate")
    if k > _MAX_PERMUTATION_SOURCES:
        raise ValueError(f"exhaustive permutation search capped at {_MAX_PERMUTATION_SOURCES} sources")
    pair_sdr = np.array(
        [[si_sdr(est, ref) for ref in references] for est in estimates]
    )
    best_perm = None
    best_mean = -np.inf
    for perm in itertools.permutations(range(k)):
        mean = pair_sdr[range(k), perm].mean()
        if mean > best_mean:
            best_mean = mean
            best_perm = perm
    per_source = pair_sdr[range(k), best_perm]
    return EvalResult(
        per_source_sdr=per_source,
        mean_sdr=float(per_source.mean()),
        permutation=tuple(best_perm),
    )


def pearson(xs, ys) -> float:
    """Pearson product-moment correlation of two equal-length sequences."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("xs and ys must be 1-D of equal length")
    if xs.size < 3:
        raise ValueError(f"need at least 3 points, got {xs.size}")
    xc = xs - xs.mean()
    yc = ys - ys.mean()
    sx = float(np.dot(xc, xc))
    sy = float(np.dot(yc, yc))
    if sx == 0.0 or sy == 0.0:
        raise ValueError("degenerate variance: one side is constant")
    r = float(np.dot(xc, yc) / np.sqrt(sx * sy))
    return float(np.clip(r, -1.0, 1.0))


def selection_stats(trials: list[tuple[str, str]]) -> SelectionStats:
    """Confusion matrix and precision/recall from (true, predicted) pairs.

    ``confusion[pred][true]`` counts trials; precision is the diagonal over
    row sums (how often a model was right when chosen), recall over column
    sums (how often each domain got its model). Empty rows or columns give
    0, not NaN.
    """
    if not trials:
        raise ValueError("trials must be non-empty")
    labels = tuple(sorted({lab for pair in trials for lab in pair}))
    index = {lab: i for i, lab in enumerate(labels)}
    m = len(labels)
    confusion = np.zeros((m, m), dtype=np.int64)
    for true, pred in trials:
        confusion[index[pred], index[true]] += 1
    diag = np.diag(confusion).astype(np.float64)
    row = confusion.sum(axis=1).astype(np.float64)
    col = confusion.sum(axis=0).astype(np.float64)
    precision = np.divide(diag, row, out=np.zeros(m), where=row > 0)
    recall = np.divide(diag, col, out=np.zeros(m), where=col > 0)
    return SelectionStats(
        labels=labels, confusion=confusion, precision=precision, recall=recall
    )
