"""Triplet batches and dataset access for the training loop."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from ..errors import ContractViolation, DataError
from ..pipeline.records import (
    CirTriplet,
    ImageRecord,
    read_image_manifest,
    read_triplet_manifest,
)


@dataclass
class TripletBatch:
    """One contrastive batch; row i's positive target is column i."""

    reference_images: list[torch.Tensor]
    modification_texts: list[str]
    target_images: list[torch.Tensor]
    target_captions: list[str] | None = None

    def __post_init__(self):
        n = len(self.reference_images)
        if n < 2:
            raise ContractViolation(
                f"contrastive batches need n >= 2 (one negative), got {n}"
            )
        lengths = {n, len(self.modification_texts), len(self.target_images)}
        if self.target_captions is not None:
            lengths.add(len(self.target_captions))
        if len(lengths) != 1:
            raise ContractViolation("batch fields must share one length")

    @property
    def batch_size(self) -> int:
        return len(self.reference_images)


def load_image(path: str | Path) -> torch.Tensor:
    """Decode an image file to a float64 ``(3, H, W)`` tensor in [0, 1]."""
    with Image.open(path) as img:
        array = np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0
    return torch.from_numpy(array).permute(2, 0, 1)


class TripletDataset:
    """Triplets plus the image records they reference, with image caching."""

    def __init__(self, images: dict[str, ImageRecord], triplets: list[CirTriplet],
                 root: str | Path = "."):
        self.images = images
        self.triplets = triplets
        self.root = Path(root)
        self._cache: dict[str, torch.Tensor] = {}
        referenced = {t.reference_id for t in triplets} | {t.target_id for t in triplets}
        missing = sorted(referenced - set(images))
        if missing:
            raise DataError(f"triplets reference unknown image ids: {missing[:10]}")

    @classmethod
    def from_dir(cls, data_dir: str | Path) -> "TripletDataset":
        """Load ``images.jsonl`` + ``triplets.jsonl`` from one directory."""
        data_dir = Path(data_dir)
        images = read_image_manifest(data_dir / "images.jsonl")
        triplets = read_triplet_manifest(data_dir / "triplets.jsonl")
        return cls(images, triplets, root=data_dir)

    def __len__(self) -> int:
        return len(self.triplets)

    @property
    def has_captions(self) -> bool:
        return bool(self.triplets) and all(
            t.target_caption is not None for t in self.triplets
        )

    def image_tensor(self, image_id: str) -> torch.Tensor:
        if image_id not in self._cache:
            record = self.images[image_id]
            path = Path(record.path)
            if not path.is_absolute():
                path = self.root / path
            self._cache[image_id] = load_image(path)
        return self._cache[image_id]

    def category_of(self, triplet: CirTriplet) -> str:
        return self.images[triplet.target_id].category

    def make_batch(self, indices: list[int], with_captions: bool) -> TripletBatch:
        chosen = [self.triplets[i] for i in indices]
        captions = None
        if with_captions:
            captions = [t.target_caption or "" for t in chosen]
        return TripletBatch(
            reference_images=[self.image_tensor(t.reference_id) for t in chosen],
            modification_texts=[t.modification_text for t in chosen],
            target_images=[self.image_tensor(t.target_id) for t in chosen],
            target_captions=captions,
        )

    def batches(self, batch_size: int, rng: np.random.Generator,
                with_captions: bool = False):
        """Yield shuffled batches; a trailing batch of size 1 is dropped."""
        order = rng.permutation(len(self.triplets))
        for start in range(0, len(order), batch_size):
            indices = [int(i) for i in order[start : start + batch_size]]
            if len(indices) < 2:
                continue
            yield self.make_batch(indices, with_captions)
