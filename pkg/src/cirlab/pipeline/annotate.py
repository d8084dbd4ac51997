"""Two-stage annotation: per-image captions, then modification synthesis.

Stage one captions each image with a vision service, prompted with the
category and whatever noisy metadata the source carries. Stage two hands
each pair's two captions to a text service that writes the modification.
Every call is retried on transient failures; permanent failures mark the
record failed and the batch carries on, reporting partial success.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from ..errors import ServiceError
from ..text import truncate_tokens
from .clients import RetryPolicy, ServiceClient, ServiceRequest
from .mocks import NO_CHANGE_SENTINEL
from .prompts import build_caption_prompt, build_modification_prompt, prompt_fingerprint
from .records import CandidatePair, CaptionRecord, ImageRecord, ModificationRecord

log = logging.getLogger(__name__)

CAPTION_MAX_TOKENS = 128


def caption_image(
    record: ImageRecord,
    client: ServiceClient,
    retry: RetryPolicy | None = None,
    max_tokens: int = CAPTION_MAX_TOKENS,
) -> CaptionRecord:
    """Caption one image; raises :class:`ServiceError` on permanent failure."""
    retry = retry or RetryPolicy()
    prompt = build_caption_prompt(record)
    response = retry.call(
        lambda: client.complete(ServiceRequest(prompt=prompt, image_ref=record.path))
    )
    caption = response.text.strip()
    if not caption:
        raise ServiceError(f"service returned an empty caption for {record.id}")
    caption, truncated = truncate_tokens(caption, max_tokens)
    if truncated:
        log.warning(
            "caption for %s exceeded %d tokens and was truncated", record.id, max_tokens
        )
    return CaptionRecord(
        image_id=record.id,
        caption=caption,
        generator=client.name,
        prompt_fingerprint=prompt_fingerprint(prompt),
        truncated=truncated,
    )


def synthesize_modification(
    reference_caption: str,
    target_caption: str,
    client: ServiceClient,
    retry: RetryPolicy | None = None,
    reference_id: str = "",
    target_id: str = "",
) -> ModificationRecord:
    """Write the modification text for one caption pair.

    Degenerate pairs (the service reports no visible difference, or an
    empty answer) come back flagged ``no_change`` so dataset assembly can
    exclude and count them.
    """
    if not reference_caption or not target_caption:
        raise ServiceError("both captions must be non-empty for synthesis")
    retry = retry or RetryPolicy()
    prompt = build_modification_prompt(reference_caption, target_caption)
    response = retry.call(lambda: client.complete(ServiceRequest(prompt=prompt)))
    text = response.text.strip()
    no_change = not text or text.lower() == NO_CHANGE_SENTINEL
    return ModificationRecord(
        reference_id=reference_id,
        target_id=target_id,
        text=text or NO_CHANGE_SENTINEL,
        generator=client.name,
        prompt_fingerprint=prompt_fingerprint(prompt),
        no_change=no_change,
    )


@dataclass
class BatchOutcome:
    """Successes plus structured failure entries for one annotation batch."""

    succeeded: list
    failed: list[dict]

    @property
    def partial(self) -> bool:
        return bool(self.failed)


def caption_batch(
    records: list[ImageRecord],
    client: ServiceClient,
    retry: RetryPolicy | None = None,
    max_tokens: int = CAPTION_MAX_TOKENS,
    workers: int = 1,
) -> BatchOutcome:
    """Caption many images with bounded parallelism; output sorted by id."""

    def run_one(record: ImageRecord):
        try:
            return caption_image(record, client, retry=retry, max_tokens=max_tokens), None
        except ServiceError as exc:
            log.warning("caption failed for %s: %s", record.id, exc)
            return None, {"image_id": record.id, "error": str(exc)}

    ordered = sorted(records, key=lambda r: r.id)
    if workers <= 1:
        results = [run_one(r) for r in ordered]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_one, ordered))
    succeeded = [cap for cap, _ in results if cap is not None]
    failed = [err for _, err in results if err is not None]
    return BatchOutcome(succeeded=succeeded, failed=failed)


def synthesize_batch(
    pairs: list[CandidatePair],
    captions: dict[str, CaptionRecord],
    client: ServiceClient,
    retry: RetryPolicy | None = None,
    workers: int = 1,
) -> BatchOutcome:
    """Synthesize modifications for every pair whose captions both exist."""

    def run_one(pair: CandidatePair):
        key = {"reference_id": pair.reference_id, "target_id": pair.target_id}
        ref = captions.get(pair.reference_id)
        tgt = captions.get(pair.target_id)
        if ref is None or tgt is None:
            missing = pair.reference_id if ref is None else pair.target_id
            return None, {**key, "error": f"missing caption for {missing}"}
        try:
            record = synthesize_modification(
                ref.caption, tgt.caption, client, retry=retry,
                reference_id=pair.reference_id, target_id=pair.target_id,
            )
            return record, None
        except ServiceError as exc:
            log.warning(
                "synthesis failed for %s->%s: %s", pair.reference_id, pair.target_id, exc
            )
            return None, {**key, "error": str(exc)}

    ordered = sorted(pairs, key=lambda p: (p.reference_id, p.target_id))
    if workers <= 1:
        results = [run_one(p) for p in ordered]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_one, ordered))
    succeeded = [rec for rec, _ in results if rec is not None]
    failed = [err for _, err in results if err is not None]
    return BatchOutcome(succeeded=succeeded, failed=failed)
