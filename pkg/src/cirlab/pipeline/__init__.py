"""Triplet-construction pipeline: pairing, annotation, dataset assembly."""

from .annotate import (
    BatchOutcome,
    caption_batch,
    caption_image,
    synthesize_batch,
    synthesize_modification,
)
from .build import (
    BuildResult,
    DatasetStatistics,
    build_dataset,
    build_enhanced_eval,
    compute_statistics,
)
from .clients import (
    HttpServiceClient,
    ManagedClient,
    RateLimiter,
    RequestBudget,
    RetryPolicy,
    ServiceRequest,
    ServiceResponse,
)
from .embeddings import (
    EmbeddingStore,
    HashProjectionEmbedder,
    compute_embeddings,
    make_embedder,
)
from .mocks import MockCaptionService, MockModificationService
from .pairing import pair_images
from .records import (
    CandidatePair,
    CaptionRecord,
    CirTriplet,
    ImageRecord,
    ModificationRecord,
    read_image_manifest,
    read_jsonl,
    read_triplet_manifest,
    write_jsonl,
)

__all__ = [
    "BatchOutcome",
    "BuildResult",
    "CandidatePair",
    "CaptionRecord",
    "CirTriplet",
    "DatasetStatistics",
    "EmbeddingStore",
    "HashProjectionEmbedder",
    "HttpServiceClient",
    "ImageRecord",
    "ManagedClient",
    "MockCaptionService",
    "MockModificationService",
    "ModificationRecord",
    "RateLimiter",
    "RequestBudget",
    "RetryPolicy",
    "ServiceRequest",
    "ServiceResponse",
    "build_dataset",
    "build_enhanced_eval",
    "caption_batch",
    "caption_image",
    "compute_embeddings",
    "compute_statistics",
    "make_embedder",
    "pair_images",
    "read_image_manifest",
    "read_jsonl",
    "read_triplet_manifest",
    "synthesize_batch",
    "synthesize_modification",
    "write_jsonl",
]
