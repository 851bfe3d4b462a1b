"""Command-line surface: confidence scoring, separation, selection,
evaluation, oracle embedding export, and the benchmark drivers.

Exit codes: 0 success, 1 usage/I-O/shape error, 2 degenerate-but-valid
result. stdout carries machine-readable JSON or CSV only; diagnostics go
to stderr. Every randomized command takes a seed and is byte-reproducible
given it.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .audio import read_wav, write_wav
from .bench import (
    BenchConfig,
    DomainConfig,
    MixSpec,
    correlation_bench,
    correlation_csv,
    ensemble_bench,
    ensemble_csv,
)
from .clustering import soft_kmeans
from .confidence import DegenerateClusteringError, confidence
from .embedding import (
    EmbeddingSource,
    oracle_embed,
    read_emb,
    read_sidecar,
    write_emb,
    write_sidecar,
)
from .ensemble import select
from .evaluation import eval_separation, pearson
from .separation import PipelineConfig, separate
from .transform import StftParams, magnitude, stft

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_DEGENERATE = 2

DEFAULT_DOMAINS = (
    DomainConfig("tonal", ("tones_low", "tones_high")),
    DomainConfig("sweeps", ("chirp_up", "chirp_down")),
    DomainConfig("percussive", ("noise_mid", "pulses_low")),
)

_SIDECAR_PARAM_KEYS = ("window_length", "hop_length", "fft_size", "window")


def _emit(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload, sort_keys=True) + "\n")


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_ERROR


def _stft_params(args) -> StftParams:
    return StftParams(
        window_length=args.window,
        hop_length=args.hop,
        fft_size=args.fft_size,
        window=args.window_fn,
    )


def _pipeline_config(args, params: StftParams) -> PipelineConfig:
    return PipelineConfig(
        stft_params=params,
        k=args.k,
        stiffness=args.stiffness,
        sample_size=args.sample_size,
        loud_percentile=args.loud_percentile,
        mask_kind=getattr(args, "mask", "soft"),
        seed=args.seed,
    )


def _check_sidecar(emb_path: str, params: StftParams) -> None:
    """Reject embeddings whose sidecar records different analysis params."""
    meta = read_sidecar(emb_path)
    if meta is None:
        return
    configured = {
        "window_length": params.window_length,
        "hop_length": params.hop_length,
        "fft_size": params.fft_size,
        "window": params.window,
    }
    for key in _SIDECAR_PARAM_KEYS:
        if key in meta and meta[key] != configured[key]:
            raise ValueError(
                f"{emb_path}: sidecar {key}={meta[key]!r} does not match "
                f"configured {key}={configured[key]!r}"
            )


def _add_stft_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--window", type=int, default=512, help="analysis window length")
    parser.add_argument("--hop", type=int, default=128, help="hop length")
    parser.add_argument("--fft-size", type=int, default=512)
    parser.add_argument("--window-fn", default="sqrt_hann",
                        choices=("sqrt_hann", "hann", "rect"))


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--k", type=int, default=2, help="number of sources/clusters")
    parser.add_argument("--sample-size", type=int, default=1000)
    parser.add_argument("--loud-percentile", type=float, default=0.01)
    parser.add_argument("--stiffness", type=float, default=5.0)
    parser.add_argument("--seed", type=int, default=0)
    _add_stft_flags(parser)


def cmd_confidence(args) -> int:
    params = _stft_params(args)
    mixture, _ = read_wav(args.mixture)
    _check_sidecar(args.embeddings, params)
    field_ = read_emb(args.embeddings)
    mixture_tf = stft(mixture, params)
    if field_.shape[:2] != mixture_tf.shape:
        raise ValueError(
            f"embedding grid {field_.shape[0]}x{field_.shape[1]}x{field_.shape[2]} "
            f"does not match mixture TF grid {mixture_tf.shape[0]}x{mixture_tf.shape[1]}"
        )
    pipeline = _pipeline_config(args, params)
    result = soft_kmeans(field_.points(), pipeline.kmeans_config())
    try:
        report = confidence(
            field_, result, magnitude(mixture_tf), pipeline.confidence_config()
        )
    except DegenerateClusteringError:
        _emit({"degenerate": True, "confidence": -1.0, "k": args.k, "seed": args.seed})
        return EXIT_DEGENERATE
    payload = report.to_dict()
    payload["degenerate"] = False
    _emit(payload)
    return EXIT_OK


def cmd_separate(args) -> int:
    params = _stft_params(args)
    mixture, encoding = read_wav(args.mixture)
    _check_sidecar(args.embeddings, params)
    field_ = read_emb(args.embeddings)
    cfg = _pipeline_config(args, params)
    result = separate(mixture, field_, k=args.k, cfg=cfg)
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.mixture).stem
    paths = []
    for i, source in enumerate(result.sources):
        path = out_dir / f"{stem}_src{i}.wav"
        write_wav(path, source, encoding)
        paths.append(str(path))
    _emit({"sources": paths, "mask_kind": result.masks.kind, "k": args.k})
    return EXIT_OK


def cmd_select(args) -> int:
    params = _stft_params(args)
    mixture, encoding = read_wav(args.mixture)
    candidates = []
    for emb_path in args.embeddings:
        _check_sidecar(emb_path, params)
        candidates.append(
            EmbeddingSource(name=Path(emb_path).name, kind="file", path=emb_path)
        )
    references = None
    if args.references:
        references = [read_wav(p)[0] for p in args.references]
    if args.strategy == "oracle" and references is None:
        raise ValueError("--strategy oracle requires --references")
    cfg = _pipeline_config(args, params)
    report = select(
        mixture, candidates, strategy=args.strategy, cfg=cfg, references=references
    )
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.mixture).stem
    written = []
    for i, source in enumerate(report.chosen.separation.sources):
        path = out_dir / f"{stem}_src{i}.wav"
        write_wav(path, source, encoding)
        written.append(str(path))
    payload = report.to_dict()
    payload["written"] = written
    _emit(payload)
    return EXIT_DEGENERATE if report.all_degenerate else EXIT_OK


def cmd_evaluate(args) -> int:
    estimates = [read_wav(p)[0] for p in args.estimates]
    references = [read_wav(p)[0] for p in args.references]
    result = eval_separation(estimates, references)
    _emit(result.to_dict())
    return EXIT_OK


def cmd_embed_oracle(args) -> int:
    params = _stft_params(args)
    references = [read_wav(p)[0] for p in args.references]
    ref_tfs = [stft(r, params) for r in references]
    field_ = oracle_embed(ref_tfs, args.noise_sigma, seed=args.seed, dim=args.dim)
    write_emb(field_, args.output)
    write_sidecar(
        args.output,
        {
            "model": "oracle",
            "dim": field_.dim,
            "noise_sigma": args.noise_sigma,
            "seed": args.seed,
            "sample_rate": references[0].sample_rate,
            "window_length": params.window_length,
            "hop_length": params.hop_length,
            "fft_size": params.fft_size,
            "window": params.window,
        },
    )
    _emit({"output": args.output, "frames": field_.frames, "bins": field_.bins,
           "dim": field_.dim})
    return EXIT_OK


def _bench_config(args) -> BenchConfig:
    mix = MixSpec(duration=args.duration)
    pipeline = PipelineConfig(
        k=args.k,
        stiffness=args.stiffness,
        sample_size=args.sample_size,
        loud_percentile=args.loud_percentile,
    )
    cfg = BenchConfig(
        mix=mix, pipeline=pipeline, embed_dim=args.dim, master_seed=args.master_seed
    )
    if args.config:
        cfg = _apply_config_file(cfg, args.config)
    return cfg


def _apply_config_file(cfg: BenchConfig, path: str) -> BenchConfig:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    mix = cfg.mix
    for key in ("duration", "sample_rate", "seed"):
        if key in raw:
            mix = replace(mix, **{key: raw[key]})
    if "snr_range" in raw:
        mix = replace(mix, snr_range=tuple(raw["snr_range"]))
    if "source_kinds" in raw:
        mix = replace(mix, source_kinds=tuple(raw["source_kinds"]))
    pipeline = cfg.pipeline
    for key in ("k", "stiffness", "sample_size", "loud_percentile"):
        if key in raw:
            pipeline = replace(pipeline, **{key: raw[key]})
    cfg = replace(cfg, mix=mix, pipeline=pipeline)
    if "embed_dim" in raw:
        cfg = replace(cfg, embed_dim=raw["embed_dim"])
    return cfg


def _parse_domains(raw: list[dict]) -> list[DomainConfig]:
    return [
        DomainConfig(
            name=d["name"],
            source_kinds=tuple(d["source_kinds"]),
            matched_sigma=d.get("matched_sigma", 0.05),
            mismatched_sigma=d.get("mismatched_sigma", 0.8),
        )
        for d in raw
    ]


def cmd_bench_correlation(args) -> int:
    cfg = _bench_config(args)
    sigmas = [float(s) for s in args.sigmas.split(",")]
    run = correlation_bench(args.trials, sigmas, cfg, workers=args.workers)
    csv_text = correlation_csv(run)
    if args.output:
        Path(args.output).write_text(csv_text, encoding="utf-8")
        ok = [t for t in run.trials if t["confidence"] > -1.0]
        try:
            r = pearson([t["confidence"] for t in ok], [t["mean_sdr"] for t in ok])
        except ValueError:
            r = None  # too few rows or constant columns
        _emit(
            {
                "trials": len(run.trials),
                "degenerate_trials": len(run.trials) - len(ok),
                "pearson_r": r,
                "csv": args.output,
            }
        )
    else:
        sys.stdout.write(csv_text)
    return EXIT_OK


def cmd_bench_ensemble(args) -> int:
    cfg = _bench_config(args)
    if args.config:
        raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        domains = _parse_domains(raw["domains"]) if "domains" in raw else list(DEFAULT_DOMAINS)
    else:
        domains = list(DEFAULT_DOMAINS)
    if args.matched_sigma is not None:
        domains = [replace(d, matched_sigma=args.matched_sigma) for d in domains]
    if args.mismatched_sigma is not None:
        domains = [replace(d, mismatched_sigma=args.mismatched_sigma) for d in domains]
    run, bundle = ensemble_bench(
        args.trials_per_domain, domains, cfg, workers=args.workers
    )
    csv_text = ensemble_csv(run)
    if args.output:
        Path(args.output).write_text(csv_text, encoding="utf-8")
        _emit(bundle.to_dict())
    else:
        sys.stdout.write(csv_text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sepconf",
        description="Confidence-driven model selection for clustering-based "
        "audio source separation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("confidence", help="score one embedding field for one mixture")
    p.add_argument("mixture", help="mixture WAV")
    p.add_argument("embeddings", help="EMB1 embedding file")
    _add_common_flags(p)
    p.set_defaults(func=cmd_confidence)

    p = sub.add_parser("separate", help="render estimated sources from embeddings")
    p.add_argument("mixture")
    p.add_argument("embeddings")
    p.add_argument("--output-dir", default=".")
    p.add_argument("--mask", default="soft", choices=("soft", "binary"))
    _add_common_flags(p)
    p.set_defaults(func=cmd_separate)

    p = sub.add_parser("select", help="pick the best candidate embedding model")
    p.add_argument("mixture")
    p.add_argument("embeddings", nargs="+", help="candidate EMB1 files")
    p.add_argument("--strategy", default="confidence",
                   choices=("confidence", "oracle", "random"))
    p.add_argument("--references", nargs="*", default=None,
                   help="reference WAVs (required for oracle strategy)")
    p.add_argument("--output-dir", default=".")
    p.add_argument("--mask", default="soft", choices=("soft", "binary"))
    _add_common_flags(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("evaluate", help="SI-SDR of estimates against references")
    p.add_argument("--estimates", nargs="+", required=True)
    p.add_argument("--references", nargs="+", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("embed-oracle", help="ideal-binary-mask embeddings from references")
    p.add_argument("--references", nargs="+", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--dim", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    _add_stft_flags(p)
    p.set_defaults(func=cmd_embed_oracle)

    bench = sub.add_parser("bench", help="benchmark drivers")
    bench_sub = bench.add_subparsers(dest="bench_command", required=True)

    p = bench_sub.add_parser("correlation", help="confidence vs SI-SDR study")
    p.add_argument("--trials", type=int, default=30, help="trials per sigma")
    p.add_argument("--sigmas", default="0,0.2,0.4,0.6,0.8,1.0")
    p.add_argument("--master-seed", type=int, default=0)
    p.add_argument("--output", default=None, help="CSV path (stdout if omitted)")
    p.add_argument("--duration", type=float, default=5.0)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--stiffness", type=float, default=5.0)
    p.add_argument("--sample-size", type=int, default=1000)
    p.add_argument("--loud-percentile", type=float, default=0.01)
    p.add_argument("--dim", type=int, default=20)
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--workers", type=int, default=1,
                   help="trial-level process parallelism (output is identical)")
    p.set_defaults(func=cmd_bench_correlation)

    p = bench_sub.add_parser("ensemble", help="multi-domain selection study")
    p.add_argument("--trials-per-domain", type=int, default=100)
    p.add_argument("--master-seed", type=int, default=0)
    p.add_argument("--output", default=None, help="CSV path (stdout if omitted)")
    p.add_argument("--matched-sigma", type=float, default=None)
    p.add_argument("--mismatched-sigma", type=float, default=None)
    p.add_argument("--duration", type=float, default=5.0)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--stiffness", type=float, default=5.0)
    p.add_argument("--sample-size", type=int, default=1000)
    p.add_argument("--loud-percentile", type=float, default=0.01)
    p.add_argument("--dim", type=int, default=20)
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--workers", type=int, default=1,
                   help="trial-level process parallelism (output is identical)")
    p.set_defaults(func=cmd_bench_ensemble)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
