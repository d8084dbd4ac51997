"""Per-category recall evaluation and report rendering.

For each category the candidate gallery holds all unique target-side
images of that category's split, the query set is the category's
triplets, and recall@k is the percentage of queries whose target lands in
the top k. The report's average is the arithmetic mean of every
per-category recall value it contains.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import DataError
from ..training.data import TripletDataset
from .index import build_index
from .retrieval import retrieve

log = logging.getLogger(__name__)

DEFAULT_K_VALUES = (10, 50)


@dataclass
class EvalReport:
    """Recall per category plus run provenance."""

    per_category: dict[str, dict[str, float]]
    average: float
    dataset_tag: str
    checkpoint_fingerprint: str
    triplet_count: int
    k_values: list[int] = field(default_factory=lambda: list(DEFAULT_K_VALUES))
    gallery: str = "category_targets"

    def to_json(self) -> str:
        payload = {
            "per_category": self.per_category,
            "average": self.average,
            "dataset_tag": self.dataset_tag,
            "checkpoint_fingerprint": self.checkpoint_fingerprint,
            "triplet_count": self.triplet_count,
            "k_values": self.k_values,
            "gallery": self.gallery,
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    def render_table(self) -> str:
        """Aligned text table: one row per category, R@k columns, average."""
        headers = ["category"] + [f"R@{k}" for k in self.k_values]
        rows = []
        for category in sorted(self.per_category):
            recalls = self.per_category[category]
            rows.append(
                [category] + [f"{recalls[f'recall_at_{k}']:.2f}" for k in self.k_values]
            )
        rows.append(["average", f"{self.average:.2f}"] + [""] * (len(self.k_values) - 1))
        widths = [
            max(len(str(row[i])) for row in [headers] + rows)
            for i in range(len(headers))
        ]
        lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
        lines.append("  ".join("-" * w for w in widths))
        for row in rows:
            lines.append("  ".join(str(c).ljust(w) for c, w in zip(row, widths)))
        return "\n".join(lines)


@dataclass
class QualitativeEntry:
    """One query's top retrievals for eyeballing, with the true rank."""

    reference_id: str
    modification_text: str
    target_id: str
    top_ids: list[str]
    target_rank: int


def evaluate(
    dataset: TripletDataset,
    model,
    categories: list[str] | None = None,
    k_values: tuple[int, ...] = DEFAULT_K_VALUES,
    dataset_tag: str = "dataset",
    dump_qualitative: int = 0,
) -> tuple[EvalReport, list[QualitativeEntry]]:
    """Recall@k per category over category-restricted galleries.

    Empty categories are excluded with a warning rather than reported as
    zero. Returns the report plus up to ``dump_qualitative`` per-query
    top-3 listings (taken from the first queries of each category).
    """
    if categories is None:
        categories = sorted({dataset.category_of(t) for t in dataset.triplets})
    fingerprint = model.fingerprint()
    per_category: dict[str, dict[str, float]] = {}
    qualitative: list[QualitativeEntry] = []
    total_triplets = 0
    for category in categories:
        triplets = [t for t in dataset.triplets if dataset.category_of(t) == category]
        if not triplets:
            log.warning("category %s has no triplets; excluded from the report", category)
            continue
        gallery_ids = sorted({t.target_id for t in triplets})
        index = build_index(
            [(gid, dataset.image_tensor(gid)) for gid in gallery_ids], model
        )
        ranks: list[int] = []
        for t in triplets:
            ranked = retrieve(
                model, dataset.image_tensor(t.reference_id), t.modification_text,
                index, k=len(index),
            )
            ranked_ids = [cid for cid, _ in ranked]
            try:
                rank = ranked_ids.index(t.target_id) + 1
            except ValueError as exc:
                raise DataError(
                    f"target {t.target_id} missing from its own gallery"
                ) from exc
            ranks.append(rank)
            if len(qualitative) < dump_qualitative:
                qualitative.append(
                    QualitativeEntry(
                        reference_id=t.reference_id,
                        modification_text=t.modification_text,
                        target_id=t.target_id,
                        top_ids=ranked_ids[:3],
                        target_rank=rank,
                    )
                )
        per_category[category] = {
            f"recall_at_{k}": 100.0 * sum(1 for r in ranks if r <= k) / len(ranks)
            for k in k_values
        }
        total_triplets += len(triplets)
    if not per_category:
        raise DataError("no category had any triplets to evaluate")
    values = [v for recalls in per_category.values() for v in recalls.values()]
    report = EvalReport(
        per_category=per_category,
        average=sum(values) / len(values),
        dataset_tag=dataset_tag,
        checkpoint_fingerprint=fingerprint,
        triplet_count=total_triplets,
        k_values=list(k_values),
    )
    return report, qualitative


def write_report(report: EvalReport, qualitative: list[QualitativeEntry],
                 out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "eval_report.json").write_text(report.to_json() + "\n", encoding="utf-8")
    (out_dir / "eval_report.txt").write_text(
        report.render_table() + "\n", encoding="utf-8"
    )
    if qualitative:
        with (out_dir / "qualitative.jsonl").open("w", encoding="utf-8") as fh:
            for entry in qualitative:
                fh.write(json.dumps(entry.__dict__) + "\n")
    return out_dir / "eval_report.json"
