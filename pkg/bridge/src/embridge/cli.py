"""Bridge CLI: create reference checkpoints and export embedding fields."""

from __future__ import annotations

import argparse
import json
import sys

from .adapter import save_reference_checkpoint
from .export import BridgeConfig, export_embeddings


def cmd_export(args) -> int:
    cfg = BridgeConfig(
        checkpoint=args.checkpoint,
        output=args.output,
        window=args.window,
        hop=args.hop,
        fft_size=args.fft_size,
        device=args.device,
    )
    sidecar = export_embeddings(args.input, cfg)
    sys.stdout.write(json.dumps({"output": args.output, **sidecar}, sort_keys=True) + "\n")
    return 0


def cmd_init(args) -> int:
    bins = args.fft_size // 2 + 1 if args.fft_size else args.window // 2 + 1
    save_reference_checkpoint(
        args.output,
        bins=bins,
        dim=args.dim,
        hidden=args.hidden,
        layers=args.layers,
        seed=args.seed,
    )
    sys.stdout.write(
        json.dumps(
            {"checkpoint": args.output, "bins": bins, "dim": args.dim}, sort_keys=True
        )
        + "\n"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embridge",
        description="Export per-bin embedding fields from deep-clustering checkpoints",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("export", help="run a checkpoint over a mixture")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True, help="mixture WAV")
    p.add_argument("--output", required=True, help="EMB1 destination")
    p.add_argument("--window", type=int, default=512)
    p.add_argument("--hop", type=int, default=128)
    p.add_argument("--fft-size", type=int, default=None)
    p.add_argument("--device", default="cpu")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("init", help="write a reference checkpoint with random weights")
    p.add_argument("--output", required=True)
    p.add_argument("--dim", type=int, default=20)
    p.add_argument("--hidden", type=int, default=300)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--window", type=int, default=512)
    p.add_argument("--fft-size", type=int, default=None)
    p.set_defaults(func=cmd_init)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
