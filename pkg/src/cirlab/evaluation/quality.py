"""Manual quality-audit protocol: stratified sampling and aggregation.

Auditors score each sampled triplet's modification text on three criteria
from 1 (worst) to 5 (best): faithfulness (does it describe the actual
changes), details (does it capture multiple elements), and saliency (does
it focus on discriminative elements). This module emits blank score
sheets for a stratified sample and aggregates filled sheets into
``mean ± std`` summaries.
"""

import logging
import math
from dataclasses import dataclass

from ..errors import DataError
from ..pipeline.records import CirTriplet
from ..seeding import np_rng

log = logging.getLogger(__name__)

CRITERIA = ("faithfulness", "details", "saliency")
DEFAULT_SAMPLE_SIZE = 216


@dataclass
class QualitySheet:
    """One triplet's scores from one annotator (blank until filled)."""

    triplet_id: str
    annotator_id: str = ""
    faithfulness: int | None = None
    details: int | None = None
    saliency: int | None = None
    reference_id: str = ""
    target_id: str = ""
    modification_text: str = ""
    category: str = ""


def stratified_allocation(counts: dict[str, int], n: int) -> dict[str, int]:
    """Proportional quotas by largest remainder; within +-1 of exact."""
    total = sum(counts.values())
    if total <= 0:
        raise DataError("cannot stratify an empty dataset")
    exact = {cat: n * c / total for cat, c in counts.items()}
    quotas = {cat: math.floor(v) for cat, v in exact.items()}
    remaining = n - sum(quotas.values())
    by_remainder = sorted(
        counts, key=lambda cat: (-(exact[cat] - quotas[cat]), cat)
    )
    for cat in by_remainder[:remaining]:
        quotas[cat] += 1
    return quotas


def sample_quality(
    triplets: list[CirTriplet],
    categories: dict[str, str],
    n: int = DEFAULT_SAMPLE_SIZE,
    seed: int = 0,
) -> list[QualitySheet]:
    """Blank score sheets for a seeded, category-stratified sample.

    ``categories`` maps image or triplet ids to category names (the
    target image's category). Datasets smaller than ``n`` are sampled in
    full with a warning.
    """
    if len(triplets) <= n:
        if len(triplets) < n:
            log.warning(
                "dataset has %d triplets (< requested %d); sampling all",
                len(triplets), n,
            )
        chosen = list(triplets)
    else:
        by_category: dict[str, list[CirTriplet]] = {}
        for t in triplets:
            category = categories.get(t.target_id) or categories.get(t.triplet_id, "")
            by_category.setdefault(category, []).append(t)
        quotas = stratified_allocation(
            {cat: len(items) for cat, items in by_category.items()}, n
        )
        rng = np_rng(seed, "quality-sample")
        chosen = []
        for cat in sorted(by_category):
            items = sorted(by_category[cat], key=lambda t: t.triplet_id)
            picks = rng.choice(len(items), size=quotas[cat], replace=False)
            chosen.extend(items[i] for i in sorted(picks))
    return [
        QualitySheet(
            triplet_id=t.triplet_id,
            reference_id=t.reference_id,
            target_id=t.target_id,
            modification_text=t.modification_text,
            category=categories.get(t.target_id, ""),
        )
        for t in chosen
    ]


@dataclass
class CriterionSummary:
    mean: float
    std: float

    def formatted(self) -> str:
        return f"{self.mean:.2f} ± {self.std:.2f}"


def aggregate_quality(sheets: list[QualitySheet]) -> dict[str, CriterionSummary]:
    """Per-criterion mean and population standard deviation.

    Every sheet must carry integer scores in [1, 5] for all three
    criteria; a missing or out-of-range score is a hard error naming the
    offending sheet.
    """
    if not sheets:
        raise DataError("no sheets to aggregate")
    summaries: dict[str, CriterionSummary] = {}
    for criterion in CRITERIA:
        scores: list[int] = []
        for sheet in sheets:
            value = getattr(sheet, criterion)
            if not isinstance(value, int) or isinstance(value, bool) or not 1 <= value <= 5:
                raise DataError(
                    f"sheet {sheet.triplet_id!r} (annotator {sheet.annotator_id!r}): "
                    f"{criterion} score {value!r} is not an integer in [1, 5]"
                )
            scores.append(value)
        mean = sum(scores) / len(scores)
        variance = sum((s - mean) ** 2 for s in scores) / len(scores)
        summaries[criterion] = CriterionSummary(mean=mean, std=math.sqrt(variance))
    return summaries


def render_quality_table(summaries: dict[str, CriterionSummary],
                         dataset_tag: str = "dataset") -> str:
    """Quality table: criteria as columns, one dataset row, mean ± std cells."""
    headers = [""] + [c.capitalize() for c in CRITERIA]
    row = [dataset_tag] + [summaries[c].formatted() for c in CRITERIA]
    widths = [max(len(h), len(r)) for h, r in zip(headers, row)]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(headers, widths)),
        "  ".join("-" * w for w in widths),
        "  ".join(r.ljust(w) for r, w in zip(row, widths)),
    ]
    return "\n".join(lines)
