"""Checkpoint adapters: load a network and map spectrogram frames to
per-bin embeddings.

An adapter is anything with an ``embed(features) -> (T, F, D)`` method and
``dim``/``bins`` attributes. The reference adapter is a 2-layer
bidirectional LSTM with 300 hidden units per direction feeding a linear
layer that emits one sigmoid-activated embedding vector per
frequency bin; with random weights it stands in for a trained model in
integration tests.
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

REFERENCE_ARCH = "blstm-embedder"


class BlstmEmbedder(nn.Module):
    """Bidirectional recurrent embedder over spectrogram frames."""

    def __init__(self, bins: int, dim: int = 20, hidden: int = 300, layers: int = 2):
        super().__init__()
        self.bins = bins
        self.dim = dim
        self.hidden = hidden
        self.layers = layers
        self.rnn = nn.LSTM(
            input_size=bins,
            hidden_size=hidden,
            num_layers=layers,
            bidirectional=True,
            batch_first=True,
        )
        self.projection = nn.Linear(2 * hidden, bins * dim)

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        # features: (T, F) -> embeddings (T, F, D) in [0, 1]
        hidden, _ = self.rnn(features.unsqueeze(0))
        flat = torch.sigmoid(self.projection(hidden.squeeze(0)))
        return flat.reshape(-1, self.bins, self.dim)

    @torch.no_grad()
    def embed(self, features: np.ndarray) -> np.ndarray:
        tensor = torch.as_tensor(features, dtype=torch.float32)
        return self.forward(tensor).numpy().astype(np.float32)


def save_reference_checkpoint(
    path, bins: int, dim: int = 20, hidden: int = 300, layers: int = 2, seed: int = 0
) -> None:
    """Write a reference-architecture checkpoint with seeded random weights."""
    torch.manual_seed(seed)
    model = BlstmEmbedder(bins=bins, dim=dim, hidden=hidden, layers=layers)
    torch.save(
        {
            "arch": REFERENCE_ARCH,
            "config": {"bins": bins, "dim": dim, "hidden": hidden, "layers": layers},
            "state_dict": model.state_dict(),
        },
        path,
    )


def load_checkpoint(path, device: str = "cpu") -> BlstmEmbedder:
    """Load a reference-architecture checkpoint onto the given device."""
    payload = torch.load(path, map_location=device, weights_only=True)
    if payload.get("arch") != REFERENCE_ARCH:
        raise ValueError(
            f"{path}: unknown architecture {payload.get('arch')!r}; "
            f"this bridge ships the {REFERENCE_ARCH!r} adapter"
        )
    model = BlstmEmbedder(**payload["config"])
    model.load_state_dict(payload["state_dict"])
    model.to(device)
    model.eval()
    return model
