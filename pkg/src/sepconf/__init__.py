"""Confidence-driven model selection for clustering-based source separation.

The toolkit scores a separation by how clusterable its embedding field is
(silhouette over loud bins times posterior strength) and uses that score to
pick among candidate embedding models, with no ground truth needed.
"""

from .audio import Waveform, read_wav, resample, write_wav
from .bench import (
    BenchConfig,
    BenchRun,
    DomainConfig,
    MixSpec,
    correlation_bench,
    ensemble_bench,
    make_mixture,
)
from .clustering import ClusterResult, SoftKMeansConfig, kmeanspp_init, soft_kmeans
from .confidence import (
    ConfidenceConfig,
    ConfidenceReport,
    DegenerateClusteringError,
    confidence,
    posterior_strength,
    silhouette_point,
    silhouette_score,
)
from .embedding import (
    EmbeddingField,
    EmbeddingFormatError,
    EmbeddingSource,
    blob_embed,
    oracle_embed,
    read_emb,
    write_emb,
)
from .ensemble import CandidateOutcome, SelectionReport, rank_candidates, select
from .evaluation import (
    EvalResult,
    SelectionStats,
    eval_separation,
    pearson,
    selection_stats,
    si_sdr,
)
from .separation import (
    MaskSet,
    PipelineConfig,
    SeparationResult,
    apply_masks,
    masks_from_posteriors,
    separate,
)
from .transform import StftParams, TfRepr, istft, loudest_bins, magnitude, stft

__version__ = "0.1.0"
