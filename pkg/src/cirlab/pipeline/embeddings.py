"""Image embeddings for similarity-based pairing, with a persistent cache.

The embedder is pluggable: anything that maps decoded pixels to a fixed
-length vector works (a pretrained image encoder in production, and a
hash-projection embedder — identical pixels, identical vector — for
deterministic desk-scale runs). Vectors are L2-normalized and cached on
disk keyed by (embedder tag, image id); re-runs hit the cache and skip
re-encoding, which also makes interrupted runs resumable.
"""

import hashlib
import logging
from pathlib import Path
from typing import Protocol

import numpy as np
from PIL import Image

from .records import ImageRecord

log = logging.getLogger(__name__)


class ImageEmbedder(Protocol):
    tag: str

    def embed(self, pixels: np.ndarray) -> np.ndarray: ...


class HashProjectionEmbedder:
    """Deterministic pixels-to-vector map: hash the bytes, seed a Gaussian."""

    def __init__(self, dim: int = 64):
        self.dim = dim
        self.tag = f"hashproj{dim}"

    def embed(self, pixels: np.ndarray) -> np.ndarray:
        digest = hashlib.sha256(
            repr(pixels.shape).encode("ascii") + np.ascontiguousarray(pixels).tobytes()
        ).digest()
        seed = int.from_bytes(digest[:8], "big")
        rng = np.random.default_rng(seed)
        return rng.standard_normal(self.dim)


class EmbeddingStore:
    """One ``.npy`` per (embedder tag, image id) under a cache directory."""

    def __init__(self, cache_dir: str | Path):
        self.cache_dir = Path(cache_dir)

    def _path(self, tag: str, image_id: str) -> Path:
        safe = image_id.replace("/", "_")
        return self.cache_dir / tag / f"{safe}.npy"

    def has(self, tag: str, image_id: str) -> bool:
        return self._path(tag, image_id).exists()

    def get(self, tag: str, image_id: str) -> np.ndarray:
        return np.load(self._path(tag, image_id))

    def put(self, tag: str, image_id: str, vector: np.ndarray) -> None:
        path = self._path(tag, image_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp.npy")
        np.save(tmp, vector)
        tmp.replace(path)


def read_pixels(path: str | Path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))


def compute_embeddings(
    records: list[ImageRecord],
    embedder: ImageEmbedder,
    store: EmbeddingStore | None = None,
    root: str | Path = ".",
) -> tuple[dict[str, np.ndarray], list[str]]:
    """Embed every readable record; returns (id -> unit vector, skipped ids).

    Unreadable images are skipped and logged, never fatal. With a store,
    cached vectors are reused and fresh ones persisted.
    """
    root = Path(root)
    vectors: dict[str, np.ndarray] = {}
    skipped: list[str] = []
    for record in records:
        if store is not None and store.has(embedder.tag, record.id):
            vectors[record.id] = store.get(embedder.tag, record.id)
            continue
        path = Path(record.path)
        if not path.is_absolute():
            path = root / path
        try:
            pixels = read_pixels(path)
        except OSError as exc:
            log.warning("skipping unreadable image %s (%s): %s", record.id, path, exc)
            skipped.append(record.id)
            continue
        vector = np.asarray(embedder.embed(pixels), dtype=np.float64)
        norm = np.linalg.norm(vector)
        if norm > 0:
            vector = vector / norm
        vectors[record.id] = vector
        if store is not None:
            store.put(embedder.tag, record.id, vector)
    return vectors, skipped


def make_embedder(name: str, dim: int) -> ImageEmbedder:
    if name == "hash_projection":
        return HashProjectionEmbedder(dim)
    raise ValueError(f"unknown embedder {name!r}")
