"""Dataset record types and line-delimited manifest IO.

Manifests are UTF-8 JSON lines, one record per line, fields in a stable
order; ``None`` fields are omitted. Triplet manifests also accept records
carrying a ``captions`` list (dual human annotations), which the loader
joins with an ``"and"`` into a single modification text.
"""

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from ..errors import DataError

IMAGE_SOURCES = ("fashion200k", "deepfashion_mm", "other")


@dataclass
class ImageRecord:
    """One source image with its category, item-group key, and metadata."""

    id: str
    path: str
    source: str
    category: str
    item_group: str
    web_caption: str | None = None
    attributes: dict[str, str] | None = None

    def __post_init__(self):
        if not self.id:
            raise DataError("image record must have a non-empty id")
        if not self.item_group:
            raise DataError(f"image record {self.id}: item_group must be non-empty")
        if self.source not in IMAGE_SOURCES:
            raise DataError(
                f"image record {self.id}: unknown source {self.source!r} "
                f"(expected one of {IMAGE_SOURCES})"
            )


@dataclass
class CandidatePair:
    """A reference/target pairing chosen among the most similar images."""

    reference_id: str
    target_id: str
    similarity: float
    rank_of_target: int
    low_similarity: bool = False

    def __post_init__(self):
        if self.reference_id == self.target_id:
            raise DataError(f"pair must not reference itself: {self.reference_id}")
        if not -1.0 - 1e-9 <= self.similarity <= 1.0 + 1e-9:
            raise DataError(
                f"pair {self.reference_id}->{self.target_id}: similarity "
                f"{self.similarity} outside [-1, 1]"
            )
        if self.rank_of_target < 1:
            raise DataError(
                f"pair {self.reference_id}->{self.target_id}: rank_of_target must be >= 1"
            )


@dataclass
class CaptionRecord:
    """A generated caption for a single image, with prompt provenance."""

    image_id: str
    caption: str
    generator: str
    prompt_fingerprint: str
    truncated: bool = False

    def __post_init__(self):
        if not self.caption:
            raise DataError(f"caption for {self.image_id} must be non-empty")


@dataclass
class ModificationRecord:
    """A synthesized modification text for one reference/target pair."""

    reference_id: str
    target_id: str
    text: str
    generator: str
    prompt_fingerprint: str
    no_change: bool = False


@dataclass
class CirTriplet:
    """The dataset unit: reference image, modification text, target image."""

    reference_id: str
    target_id: str
    modification_text: str
    reference_caption: str | None = None
    target_caption: str | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.modification_text:
            raise DataError(
                f"triplet {self.reference_id}->{self.target_id}: "
                "modification_text must be non-empty"
            )

    @property
    def triplet_id(self) -> str:
        return f"{self.reference_id}->{self.target_id}"


def _record_dict(record) -> dict:
    out = {}
    for f in dataclasses.fields(record):
        value = getattr(record, f.name)
        if value is None:
            continue
        out[f.name] = value
    return out


def write_jsonl(path: str | Path, records: Iterable) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            payload = _record_dict(record) if dataclasses.is_dataclass(record) else record
            fh.write(json.dumps(payload, ensure_ascii=False))
            fh.write("\n")
    return path


def read_jsonl(path: str | Path) -> list[dict]:
    path = Path(path)
    rows = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON ({exc})") from exc
    return rows


def read_image_manifest(path: str | Path) -> dict[str, ImageRecord]:
    """Load an image manifest, enforcing id uniqueness."""
    records: dict[str, ImageRecord] = {}
    for row in read_jsonl(path):
        record = ImageRecord(**row)
        if record.id in records:
            raise DataError(f"duplicate image id in manifest: {record.id}")
        records[record.id] = record
    return records


def read_triplet_manifest(path: str | Path) -> list[CirTriplet]:
    """Load a triplet manifest; dual-caption records are joined with 'and'."""
    triplets = []
    for row in read_jsonl(path):
        row = dict(row)
        captions = row.pop("captions", None)
        if captions is not None and "modification_text" not in row:
            row["modification_text"] = " and ".join(captions)
        triplets.append(CirTriplet(**row))
    return triplets
