"""Bridge from deep-clustering checkpoints to EMB1 embedding fields."""

from .adapter import BlstmEmbedder, load_checkpoint, save_reference_checkpoint
from .export import BridgeConfig, export_embeddings, write_emb1

__version__ = "0.1.0"
