"""Desk-scale experiment drivers.

Two studies over synthetic mixtures:

* ``correlation_bench``: sweep embedding corruption and record confidence
  next to ground-truth SI-SDR, to check that confidence tracks actual
  separation quality.
* ``ensemble_bench``: a multi-domain selection study where each domain has
  one matched (low-noise) candidate embedder and mismatched (high-noise)
  ones, scored under the confidence / oracle / random strategies.

Every trial's randomness derives from the master seed through a documented
counter scheme: stream ``j`` of trial ``(group, i)`` is seeded with
``SeedSequence((master, group, i))``'s ``j``-th word, so trials are
independent and the whole run is reproducible bit-for-bit.
"""

from __future__ import annotations

import csv
import io
import multiprocessing
from dataclasses import dataclass, field, replace

import numpy as np

from .audio import Waveform
from .clustering import soft_kmeans
from .confidence import DegenerateClusteringError, confidence
from .embedding import EmbeddingSource, oracle_embed
from .ensemble import (
    _choose_confidence,
    _choose_oracle,
    choose_random,
    evaluate_candidate,
)
from .evaluation import SelectionStats, eval_separation, selection_stats
from .separation import PipelineConfig, apply_masks, masks_from_posteriors
from .sources import generate_source
from .transform import istft, magnitude, stft


@dataclass(frozen=True)
class MixSpec:
    """Synthetic two-or-more-source mixture construction parameters.

    Sources after the first are scaled to a level drawn uniformly from
    ``snr_range`` (dB of RMS power relative to the first source); the whole
    mixture is then peak-normalized to 0.9 with the same gain applied to the
    references, so the mixture equals the left-to-right sum of the returned
    references exactly. An asymmetric preset such as ``snr_range=(10, 10)``
    pins the second source 10 dB above the first.
    """

    duration: float = 5.0
    sample_rate: int = 16000
    snr_range: tuple[float, float] = (-2.5, 2.5)
    source_kinds: tuple[str, ...] = ("tones_low", "tones_high")
    seed: int = 0

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError(f"duration must be positive, got {self.duration}")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if self.snr_range[0] > self.snr_range[1]:
            raise ValueError(f"snr_range low > high: {self.snr_range}")
        if len(self.source_kinds) < 2:
            raise ValueError("need at least 2 source kinds")


@dataclass(frozen=True)
class DomainConfig:
    """One synthetic domain: its source family pair and embedder noise."""

    name: str
    source_kinds: tuple[str, ...]
    matched_sigma: float = 0.05
    mismatched_sigma: float = 0.8


@dataclass(frozen=True)
class BenchConfig:
    """Everything a benchmark run needs besides its trial counts."""

    mix: MixSpec = field(default_factory=MixSpec)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    embed_dim: int = 20
    master_seed: int = 0


@dataclass(frozen=True)
class BenchRun:
    """Trial rows plus the config snapshot that produced them."""

    kind: str
    trials: list[dict]
    config: BenchConfig


def make_mixture(spec: MixSpec) -> tuple[Waveform, list[Waveform]]:
    """Generate one mixture and its references per the spec.

    Sub-streams of ``spec.seed``: stream 0 draws the SNRs, stream 1+i
    generates source i.
    """
    n = int(round(spec.duration * spec.sample_rate))
    k = len(spec.source_kinds)
    snr_rng = np.random.default_rng(np.random.SeedSequence((spec.seed, 0)))
    raw = [
        generate_source(
            kind, n, spec.sample_rate,
            np.random.default_rng(np.random.SeedSequence((spec.seed, 1 + i))),
        )
        for i, kind in enumerate(spec.source_kinds)
    ]
    gains = np.ones(k)
    for i in range(1, k):
        snr_db = snr_rng.uniform(spec.snr_range[0], spec.snr_range[1])
        gains[i] = 10.0 ** (snr_db / 20.0)  # sources are equal-RMS generated
    scaled = [raw[i].samples * gains[i] for i in range(k)]
    peak = np.max(np.abs(sum(scaled)))
    norm = 0.9 / peak if peak > 0 else 1.0
    ref_samples = [s * norm for s in scaled]
    mix_samples = ref_samples[0].copy()
    for s in ref_samples[1:]:
        mix_samples += s
    references = [Waveform(s, spec.sample_rate) for s in ref_samples]
    return Waveform(mix_samples, spec.sample_rate), references


def _trial_words(master: int, group: int, trial: int, n: int) -> list[int]:
    return [int(w) for w in np.random.SeedSequence((master, group, trial)).generate_state(n)]


def _run_trials(worker, tasks: list, workers: int) -> list:
    """Run independent trial tasks, in task order, optionally in parallel."""
    if workers <= 1 or len(tasks) <= 1:
        return [worker(task) for task in tasks]
    ctx = multiprocessing.get_context("fork")
    with ctx.Pool(workers) as pool:
        return pool.map(worker, tasks, chunksize=1)


def _correlation_trial(task) -> dict:
    cfg, si, sigma, trial = task
    mix_seed, embed_seed, pipe_seed = _trial_words(cfg.master_seed, si, trial, 3)
    mixture, references = make_mixture(replace(cfg.mix, seed=mix_seed))
    mixture_tf = stft(mixture, cfg.pipeline.stft_params)
    ref_tfs = [stft(r, cfg.pipeline.stft_params) for r in references]
    field_ = oracle_embed(ref_tfs, float(sigma), seed=embed_seed, dim=cfg.embed_dim)
    pipeline = replace(cfg.pipeline, seed=pipe_seed)
    result = soft_kmeans(field_.points(), pipeline.kmeans_config())
    mag = magnitude(mixture_tf)
    try:
        report = confidence(field_, result, mag, pipeline.confidence_config())
        conf, sil, post = (
            report.confidence,
            report.silhouette,
            report.posterior_strength,
        )
    except DegenerateClusteringError:
        conf, sil, post = -1.0, -1.0, 0.0
    masks = masks_from_posteriors(
        result, field_.frames, field_.bins, pipeline.mask_kind
    )
    estimates = [
        istft(tf_k, n_samples=len(mixture))
        for tf_k in apply_masks(mixture_tf, masks)
    ]
    mean_sdr = eval_separation(estimates, references).mean_sdr
    return {
        "sigma": float(sigma),
        "trial": trial,
        "confidence": conf,
        "silhouette": sil,
        "posterior_strength": post,
        "mean_sdr": mean_sdr,
    }


def correlation_bench(
    n_trials: int,
    sigma_grid: list[float],
    cfg: BenchConfig | None = None,
    workers: int = 1,
) -> BenchRun:
    """Confidence-vs-SDR study across an embedding-noise grid.

    Runs ``n_trials`` full pipelines per noise level: synthetic mixture,
    ideal-mask embeddings corrupted at that level, clustering, confidence,
    separation, SI-SDR. A degenerate clustering is recorded with
    confidence -1 rather than aborting the run. Trials are independent;
    ``workers`` > 1 runs them in a process pool with results still
    collected in trial order, so output is identical for any worker count.
    """
    if cfg is None:
        cfg = BenchConfig()
    tasks = [
        (cfg, si, sigma, trial)
        for si, sigma in enumerate(sigma_grid)
        for trial in range(n_trials)
    ]
    rows = _run_trials(_correlation_trial, tasks, workers)
    return BenchRun(kind="correlation", trials=rows, config=cfg)


def _ensemble_trial(task) -> list[dict]:
    cfg, domains, d_idx, trial = task
    domain = domains[d_idx]
    names = [d.name for d in domains]
    words = _trial_words(cfg.master_seed, d_idx, trial, 3 + len(domains))
    mix_seed, pipe_seed, rand_seed = words[0], words[1], words[2]
    mix_spec = replace(
        cfg.mix, seed=mix_seed, source_kinds=tuple(domain.source_kinds)
    )
    mixture, references = make_mixture(mix_spec)
    ref_tfs = [stft(r, cfg.pipeline.stft_params) for r in references]
    pipeline = replace(cfg.pipeline, seed=pipe_seed)
    candidates = []
    for m, cand_domain in enumerate(domains):
        sigma = (
            cand_domain.matched_sigma if m == d_idx else cand_domain.mismatched_sigma
        )
        field_ = oracle_embed(ref_tfs, sigma, seed=words[3 + m], dim=cfg.embed_dim)
        candidates.append(
            EmbeddingSource(name=cand_domain.name, kind="oracle", field=field_)
        )
    outcomes = [
        evaluate_candidate(mixture, source, pipeline, index=m, references=references)
        for m, source in enumerate(candidates)
    ]
    confidences = [
        -1.0 if out.degenerate else out.confidence_value for out in outcomes
    ]
    sdrs = [out.sdr.mean_sdr for out in outcomes]
    chosen = {
        "confidence": _choose_confidence(outcomes)[0],
        "oracle": _choose_oracle(outcomes),
        "random": choose_random(len(domains), rand_seed),
    }
    return [
        {
            "domain": domain.name,
            "trial": trial,
            "strategy": strategy,
            "chosen": idx,
            "predicted": names[chosen["confidence"]],
            "confidences": list(confidences),
            "sdrs": list(sdrs),
        }
        for strategy, idx in chosen.items()
    ]


def ensemble_bench(
    n_trials_per_domain: int,
    domains: list[DomainConfig],
    cfg: BenchConfig | None = None,
    workers: int = 1,
) -> tuple[BenchRun, "SelectionStatsBundle"]:
    """Multi-domain selection study under all three strategies.

    For each trial the true domain's candidate embedder runs at
    ``matched_sigma`` and every other candidate at ``mismatched_sigma``;
    all candidates are evaluated once and the three strategies pick from
    the shared outcomes. Trials are independent and may run in a process
    pool (``workers``); results are identical for any worker count.
    """
    if cfg is None:
        cfg = BenchConfig()
    if len(domains) < 2:
        raise ValueError("need at least 2 domains")
    names = [d.name for d in domains]
    if len(set(names)) != len(names):
        raise ValueError(f"domain names must be unique, got {names}")
    tasks = [
        (cfg, domains, d_idx, trial)
        for d_idx in range(len(domains))
        for trial in range(n_trials_per_domain)
    ]
    rows = [row for batch in _run_trials(_ensemble_trial, tasks, workers) for row in batch]
    confusion_pairs = [
        (row["domain"], row["predicted"])
        for row in rows
        if row["strategy"] == "confidence"
    ]
    stats = selection_stats(confusion_pairs)
    sdr_table = _strategy_sdr_table(rows, names)
    run = BenchRun(kind="ensemble", trials=rows, config=cfg)
    return run, SelectionStatsBundle(stats=stats, sdr_table=sdr_table)


@dataclass(frozen=True)
class SelectionStatsBundle:
    """Selection quality plus the mean-SDR-by-strategy summary table."""

    stats: SelectionStats
    sdr_table: dict

    def to_dict(self) -> dict:
        return {"selection": self.stats.to_dict(), "mean_sdr": self.sdr_table}


def _strategy_sdr_table(rows: list[dict], names: list[str]) -> dict:
    """Mean chosen-SDR per strategy per domain, plus fixed-model rows."""
    table: dict[str, dict[str, float]] = {}
    for strategy in ("oracle", "confidence", "random"):
        table[strategy] = {}
        for domain in names:
            values = [
                row["sdrs"][row["chosen"]]
                for row in rows
                if row["strategy"] == strategy and row["domain"] == domain
            ]
            table[strategy][domain] = float(np.mean(values))
    for m, model in enumerate(names):
        key = f"{model} model"
        table[key] = {}
        for domain in names:
            values = [
                row["sdrs"][m]
                for row in rows
                if row["strategy"] == "confidence" and row["domain"] == domain
            ]
            table[key][domain] = float(np.mean(values))
    return table


def correlation_csv(run: BenchRun) -> str:
    """Byte-deterministic CSV: sigma,trial,confidence,silhouette,posterior_strength,mean_sdr."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["sigma", "trial", "confidence", "silhouette", "posterior_strength", "mean_sdr"]
    )
    for row in run.trials:
        writer.writerow(
            [
                row["sigma"],
                row["trial"],
                row["confidence"],
                row["silhouette"],
                row["posterior_strength"],
                row["mean_sdr"],
            ]
        )
    return buf.getvalue()


def ensemble_csv(run: BenchRun) -> str:
    """Byte-deterministic CSV: domain,trial,strategy,chosen,confidence_*,sdr_*."""
    if not run.trials:
        raise ValueError("empty benchmark run")
    m = len(run.trials[0]["confidences"])
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["domain", "trial", "strategy", "chosen"]
        + [f"confidence_{i}" for i in range(m)]
        + [f"sdr_{i}" for i in range(m)]
    )
    for row in run.trials:
        writer.writerow(
            [row["domain"], row["trial"], row["strategy"], row["chosen"]]
            + row["confidences"]
            + row["sdrs"]
        )
    return buf.getvalue()
