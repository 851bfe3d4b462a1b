"""Run a checkpoint over one mixture and export the EMB1 embedding field.

EMB1 layout (shared exchange format): 4-byte ASCII magic ``EMB1``, three
unsigned 32-bit little-endian dimensions T, F, D, then ``T * F * D``
little-endian float32 values in time-major order. A JSON sidecar at
``<output>.json`` records the model name, embedding size, and the analysis
parameters, so consumers can reject grid mismatches up front.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .adapter import load_checkpoint
from .features import load_mono_wav, log_mag_features, magnitude_stft

EMB1_MAGIC = b"EMB1"


@dataclass(frozen=True)
class BridgeConfig:
    """Checkpoint, analysis grid, output path, and device."""

    checkpoint: str
    output: str
    window: int = 512
    hop: int = 128
    fft_size: int | None = None
    device: str = "cpu"

    @property
    def resolved_fft_size(self) -> int:
        return self.fft_size or self.window


def write_emb1(values: np.ndarray, path) -> None:
    values = np.ascontiguousarray(values, dtype="<f4")
    t, f, d = values.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sIII", EMB1_MAGIC, t, f, d))
        fh.write(values.tobytes())


def export_embeddings(mixture_path, cfg: BridgeConfig) -> dict:
    """Embed one mixture and write EMB1 plus sidecar; returns the sidecar."""
    samples, sample_rate = load_mono_wav(mixture_path)
    mag = magnitude_stft(samples, cfg.window, cfg.hop, cfg.resolved_fft_size)
    model = load_checkpoint(cfg.checkpoint, cfg.device)
    if model.bins != mag.shape[1]:
        raise ValueError(
            f"checkpoint expects {model.bins} frequency bins but the "
            f"{cfg.resolved_fft_size}-point grid has {mag.shape[1]}"
        )
    embeddings = model.embed(log_mag_features(mag))
    if not np.all(np.isfinite(embeddings)):
        raise ValueError("model produced non-finite embeddings")
    write_emb1(embeddings, cfg.output)
    sidecar = {
        "model": Path(cfg.checkpoint).name,
        "arch": "blstm-embedder",
        "dim": int(embeddings.shape[2]),
        "sample_rate": sample_rate,
        "window_length": cfg.window,
        "hop_length": cfg.hop,
        "fft_size": cfg.resolved_fft_size,
        "window": "sqrt_hann",
    }
    Path(str(cfg.output) + ".json").write_text(
        json.dumps(sidecar, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return sidecar
