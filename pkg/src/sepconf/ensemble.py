"""Run candidate embedding models on one mixture and pick an output.

Every candidate is always evaluated in full (separation plus confidence,
plus SI-SDR when references are supplied); selection then reduces to an
argmax over the retained outcomes. A candidate whose loud bins collapse to
a single cluster is flagged degenerate and ranks below every numeric
confidence, including negative ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import Waveform
from .clustering import soft_kmeans
from .confidence import ConfidenceReport, DegenerateClusteringError, confidence
from .embedding import EmbeddingSource
from .evaluation import EvalResult, eval_separation
from .separation import (
    PipelineConfig,
    SeparationResult,
    apply_masks,
    masks_from_posteriors,
)
from .transform import istft, magnitude, stft

STRATEGIES = ("confidence", "oracle", "random")


@dataclass(frozen=True)
class CandidateOutcome:
    """Everything one candidate produced for the mixture."""

    source: EmbeddingSource
    confidence_report: ConfidenceReport | None
    separation: SeparationResult
    sdr: EvalResult | None = None

    @property
    def degenerate(self) -> bool:
        return self.confidence_report is None

    @property
    def confidence_value(self) -> float | None:
        return None if self.degenerate else self.confidence_report.confidence


@dataclass(frozen=True)
class SelectionReport:
    """All candidate outcomes plus the chosen index for one strategy."""

    outcomes: list[CandidateOutcome]
    chosen_index: int
    strategy: str
    seed: int = 0
    all_degenerate: bool = False

    @property
    def chosen(self) -> CandidateOutcome:
        return self.outcomes[self.chosen_index]

    def to_dict(self) -> dict:
        per_candidate = []
        for out in self.outcomes:
            entry = {
                "name": out.source.name,
                "degenerate": out.degenerate,
                "confidence": None,
                "silhouette": None,
                "posterior_strength": None,
            }
            if not out.degenerate:
                rep = out.confidence_report
                entry.update(
                    confidence=rep.confidence,
                    silhouette=rep.silhouette,
                    posterior_strength=rep.posterior_strength,
                )
            if out.sdr is not None:
                entry["mean_sdr"] = out.sdr.mean_sdr
            per_candidate.append(entry)
        return {
            "strategy": self.strategy,
            "chosen_index": self.chosen_index,
            "seed": self.seed,
            "all_degenerate": self.all_degenerate,
            "candidates": per_candidate,
        }


def _candidate_seeds(base_seed: int, index: int) -> tuple[int, int]:
    """Deterministic (clustering, sampling) seeds for candidate ``index``."""
    state = np.random.SeedSequence((base_seed, index)).generate_state(2)
    return int(state[0]), int(state[1])


def evaluate_candidate(
    mixture: Waveform,
    source: EmbeddingSource,
    cfg: PipelineConfig,
    index: int = 0,
    references: list[Waveform] | None = None,
) -> CandidateOutcome:
    """Full pipeline for one candidate: cluster, score, separate, evaluate."""
    mixture_tf = stft(mixture, cfg.stft_params)
    field_ = source.load()
    if field_.shape[:2] != mixture_tf.shape:
        raise ValueError(
            f"candidate {source.name!r}: embedding grid {field_.shape} does not "
            f"match mixture TF grid {mixture_tf.shape}"
        )
    mag = magnitude(mixture_tf)
    seed_cluster, seed_sample = _candidate_seeds(cfg.seed, index)
    result = soft_kmeans(field_.points(), cfg.kmeans_config(seed_cluster))
    try:
        report = confidence(field_, result, mag, cfg.confidence_config(seed_sample))
    except DegenerateClusteringError:
        report = None
    masks = masks_from_posteriors(result, field_.frames, field_.bins, cfg.mask_kind)
    sources = [
        istft(tf_k, n_samples=len(mixture)) for tf_k in apply_masks(mixture_tf, masks)
    ]
    separation = SeparationResult(sources=sources, masks=masks, model_name=source.name)
    sdr = eval_separation(sources, references) if references is not None else None
    return CandidateOutcome(
        source=source, confidence_report=report, separation=separation, sdr=sdr
    )


def _choose_confidence(outcomes: list[CandidateOutcome]) -> tuple[int, bool]:
    best, best_value = None, None
    for i, out in enumerate(outcomes):
        if out.degenerate:
            continue
        if best_value is None or out.confidence_value > best_value:
            best, best_value = i, out.confidence_value
    if best is None:
        return 0, True  # every candidate collapsed; fall back to the first
    return best, False


def _choose_oracle(outcomes: list[CandidateOutcome]) -> int:
    best, best_value = 0, -np.inf
    for i, out in enumerate(outcomes):
        if out.sdr is None:
            raise ValueError("oracle strategy requires references for every candidate")
        if out.sdr.mean_sdr > best_value:
            best, best_value = i, out.sdr.mean_sdr
    return best


def choose_random(m: int, seed: int) -> int:
    """Seeded uniform choice among ``m`` candidates."""
    return int(np.random.default_rng(seed).integers(m))


def select(
    mixture: Waveform,
    candidates: list[EmbeddingSource],
    strategy: str = "confidence",
    cfg: PipelineConfig | None = None,
    references: list[Waveform] | None = None,
) -> SelectionReport:
    """Evaluate all candidates and choose one output.

    ``confidence`` picks the highest-confidence candidate, ``oracle`` the
    highest mean SI-SDR against the supplied references, and ``random`` a
    seeded uniform draw. Ties break to the lowest candidate index; all
    outcomes are retained in the report regardless of strategy.
    """
    if not candidates:
        raise ValueError("need at least one candidate")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; use one of {STRATEGIES}")
    names = [c.name for c in candidates]
    if len(set(names)) != len(names):
        raise ValueError(f"candidate names must be unique, got {names}")
    if strategy == "oracle" and references is None:
        raise ValueError("oracle strategy requires references")
    if cfg is None:
        cfg = PipelineConfig()

    outcomes = [
        evaluate_candidate(mixture, source, cfg, index=i, references=references)
        for i, source in enumerate(candidates)
    ]
    all_degenerate = False
    if strategy == "confidence":
        chosen, all_degenerate = _choose_confidence(outcomes)
    elif strategy == "oracle":
        chosen = _choose_oracle(outcomes)
    else:
        chosen = choose_random(len(outcomes), cfg.seed)
    return SelectionReport(
        outcomes=outcomes,
        chosen_index=chosen,
        strategy=strategy,
        seed=cfg.seed,
        all_degenerate=all_degenerate,
    )


def rank_candidates(outcomes: list[CandidateOutcome]) -> list[int]:
    """Indices in descending confidence order, degenerate outcomes last.

    Exact ties (and degenerates among themselves) keep their input order.
    """
    if not outcomes:
        raise ValueError("need at least one outcome")
    return sorted(
        range(len(outcomes)),
        key=lambda i: (
            outcomes[i].degenerate,
            -outcomes[i].confidence_value if not outcomes[i].degenerate else 0.0,
        ),
    )
