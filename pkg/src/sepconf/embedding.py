"""Per-bin embedding fields: the EMB1 exchange format and built-in embedders.

EMB1 layout (bit-exact, little-endian):

* bytes 0-3: ASCII magic ``EMB1``
* bytes 4-15: unsigned 32-bit T, F, D
* then ``T * F * D`` IEEE-754 32-bit floats, time-major (t outer, f middle,
  d inner)

An optional sidecar at ``<path>.json`` carries free-form provenance (model
name, domain, sample_rate, analysis parameters) as a UTF-8 JSON object.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from dataclasses import field as dataclass_field
from pathlib import Path

import numpy as np

from .transform import TfRepr

EMB1_MAGIC = b"EMB1"
_HEADER = struct.Struct("<4sIII")

# Refuse headers that would ask for absurd allocations.
_MAX_ELEMENTS = 1 << 40


class EmbeddingFormatError(ValueError):
    """Raised when an EMB1 file is malformed."""


@dataclass(frozen=True)
class EmbeddingField:
    """A (frames, bins, dim) tensor of per-bin embedding vectors."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float32)
        if values.ndim != 3:
            raise ValueError(f"values must be 3-D (T, F, D), got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("embedding values must be finite")
        object.__setattr__(self, "values", values)

    @property
    def frames(self) -> int:
        return self.values.shape[0]

    @property
    def bins(self) -> int:
        return self.values.shape[1]

    @property
    def dim(self) -> int:
        return self.values.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape

    def points(self) -> np.ndarray:
        """Flatten to (T*F, D) float64 points, time-major."""
        t, f, d = self.values.shape
        return self.values.reshape(t * f, d).astype(np.float64)


@dataclass(frozen=True)
class EmbeddingSource:
    """A named provider of one embedding field for a selection run.

    ``kind`` is one of ``file`` (read ``path`` as EMB1), ``oracle`` or
    ``synthetic`` (a prebuilt in-memory ``field``). ``meta`` is free-form
    provenance.
    """

    name: str
    kind: str
    path: str | None = None
    field: EmbeddingField | None = None
    meta: dict = dataclass_field(default_factory=dict)

    def __post_init__(self):
        if not self.name:
            raise ValueError("embedding source name must be non-empty")
        if self.kind not in ("file", "oracle", "synthetic"):
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.kind == "file" and self.path is None:
            raise ValueError("file-backed source requires a path")
        if self.kind != "file" and self.field is None:
            raise ValueError(f"{self.kind} source requires an in-memory field")

    def load(self) -> EmbeddingField:
        if self.field is not None:
            return self.field
        return read_emb(self.path)


def write_emb(field: EmbeddingField, path) -> None:
    """Write an embedding field in the EMB1 layout (byte-deterministic)."""
    t, f, d = field.shape
    payload = np.ascontiguousarray(field.values, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(EMB1_MAGIC, t, f, d))
        fh.write(payload)


def read_emb(path) -> EmbeddingField:
    """Read an EMB1 file, validating magic, dimensions, and payload size."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise EmbeddingFormatError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, t, f, d = _HEADER.unpack_from(raw)
    if magic != EMB1_MAGIC:
        raise EmbeddingFormatError(f"{path}: bad magic {magic!r}")
    n_values = t * f * d
    if n_values > _MAX_ELEMENTS:
        raise EmbeddingFormatError(f"{path}: dimension overflow ({t}x{f}x{d})")
    expected = n_values * 4
    actual = len(raw) - _HEADER.size
    if actual < expected:
        raise EmbeddingFormatError(
            f"{path}: truncated payload ({actual} bytes, header implies {expected})"
        )
    if actual > expected:
        raise EmbeddingFormatError(
            f"{path}: oversized payload ({actual} bytes, header implies {expected})"
        )
    values = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(t, f, d)
    if not np.all(np.isfinite(values)):
        raise EmbeddingFormatError(f"{path}: non-finite values in payload")
    return EmbeddingField(values)


def sidecar_path(path) -> Path:
    return Path(str(path) + ".json")


def write_sidecar(path, meta: dict) -> None:
    sidecar_path(path).write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def read_sidecar(path) -> dict | None:
    """Return the sidecar JSON object for an EMB1 path, or None if absent."""
    sc = sidecar_path(path)
    if not sc.exists():
        return None
    loaded = json.loads(sc.read_text(encoding="utf-8"))
    if not isinstance(loaded, dict):
        raise EmbeddingFormatError(f"{sc}: sidecar must be a JSON object")
    return loaded


def oracle_embed(
    references: list[TfRepr],
    noise_sigma: float = 0.0,
    seed: int = 0,
    dim: int | None = None,
) -> EmbeddingField:
    """Ideal-binary-mask embeddings with optional Gaussian corruption.

    Each bin gets the one-hot indicator of the reference with the largest
    magnitude there (ties go to the lowest reference index), plus isotropic
    Gaussian noise of standard deviation ``noise_sigma``, clamped to
    [0, 1]. The clamp mirrors the value range of sigmoid-activated
    embedding networks. With ``dim`` the one-hot axes are zero-padded up
    to D >= len(references).

    Deterministic given ``seed``.
    """
    if len(references) < 2:
        raise ValueError("need at least 2 references to define bin ownership")
    shape = references[0].shape
    for ref in references[1:]:
        if ref.shape != shape:
            raise ValueError(
                f"reference shapes differ: {ref.shape} vs {shape}"
            )
    if noise_sigma < 0:
        raise ValueError(f"noise_sigma must be >= 0, got {noise_sigma}")
    k_src = len(references)
    d = k_src if dim is None else int(dim)
    if d < k_src:
        raise ValueError(f"dim={d} is smaller than the {k_src} references")
    mags = np.stack([np.abs(ref.values) for ref in references])  # (K, T, F)
    owner = np.argmax(mags, axis=0)  # lowest index wins exact ties
    t, f = shape
    values = np.zeros((t, f, d), dtype=np.float64)
    onehot = np.eye(k_src, d)
    values[:] = onehot[owner]
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        values += rng.normal(0.0, noise_sigma, size=values.shape)
        np.clip(values, 0.0, 1.0, out=values)
    return EmbeddingField(values.astype(np.float32))


def blob_embed(
    frames: int,
    bins: int,
    dim: int,
    k: int,
    separation: float,
    spread: float,
    seed: int = 0,
) -> tuple[EmbeddingField, np.ndarray]:
    """Synthetic Gaussian-blob embedding field with ground-truth labels.

    Places ``k`` blob means with pairwise distance >= ``separation`` (on a
    deterministic axis lattice), draws each point's blob uniformly, and adds
    per-coordinate Gaussian noise of std ``spread``. Returns the field and
    the flat (time-major) label array for external validation.
    """
    if k < 1 or dim < 1 or frames < 1 or bins < 1:
        raise ValueError("frames, bins, dim, and k must all be >= 1")
    if separation < 0 or spread <= 0:
        raise ValueError("require separation >= 0 and spread > 0")
    rng = np.random.default_rng(seed)
    means = np.zeros((k, dim))
    for j in range(k):
        means[j, j % dim] = separation * (1 + j // dim)
    n = frames * bins
    labels = rng.integers(0, k, size=n)
    points = means[labels] + rng.normal(0.0, spread, size=(n, dim))
    return EmbeddingField(points.reshape(frames, bins, dim).astype(np.float32)), labels
