"""Deterministic local stand-ins for the two annotation services.

The mock captioner actually inspects the image (dominant color of the top
and bottom halves, snapped to the shared palette) so captions reflect
pixels, not metadata alone. The mock modification writer diffs the two
captions token-wise. Both are pure functions of their inputs, which keeps
pipeline runs byte-reproducible.
"""

import re
from pathlib import Path

import numpy as np
from PIL import Image

from ..colors import nearest_color_name
from ..errors import ServiceError, TransientServiceError
from ..text import token_count
from .clients import ServiceRequest, ServiceResponse


def _prompt_field(prompt: str, label: str) -> str | None:
    # last occurrence: the instruction block's in-context examples also
    # contain these labels, the real inputs are appended after them
    matches = re.findall(rf"^{label}: (.*)$", prompt, flags=re.MULTILINE)
    return matches[-1].strip() if matches else None


class MockCaptionService:
    """Describes a color-grid image; falls back to prompt metadata."""

    name = "mock-captioner"

    def __init__(self, root: str | Path = "."):
        self.root = Path(root)

    def _describe_pixels(self, image_ref: str) -> str | None:
        path = Path(image_ref)
        if not path.is_absolute():
            path = self.root / path
        try:
            with Image.open(path) as img:
                pixels = np.asarray(img.convert("RGB"), dtype=np.float64)
        except OSError:
            return None
        half = pixels.shape[0] // 2
        top = nearest_color_name(pixels[:half].reshape(-1, 3).mean(axis=0))
        bottom = nearest_color_name(pixels[half:].reshape(-1, 3).mean(axis=0))
        return f"a {top} top half and a {bottom} bottom half"

    def complete(self, request: ServiceRequest) -> ServiceResponse:
        category = _prompt_field(request.prompt, "Category") or "garment"
        described = None
        if request.image_ref is not None:
            described = self._describe_pixels(request.image_ref)
        if described is not None:
            text = f"a {category} with {described}"
        else:
            web = _prompt_field(request.prompt, "Product description")
            text = f"a {category} described as {web}" if web else f"a plain {category}"
        return ServiceResponse(
            text=text,
            latency_s=0.0,
            prompt_tokens=token_count(request.prompt),
            completion_tokens=token_count(text),
        )


NO_CHANGE_SENTINEL = "no visible difference"


def diff_captions(reference: str, target: str) -> str:
    """Summarize target-vs-reference as token replacements/additions."""
    ref_tokens = reference.lower().split()
    tgt_tokens = target.lower().split()
    if ref_tokens == tgt_tokens:
        return NO_CHANGE_SENTINEL
    removed = [t for t in ref_tokens if t not in tgt_tokens]
    added = [t for t in tgt_tokens if t not in ref_tokens]
    phrases = []
    for old, new in zip(removed, added):
        phrases.append(f"has {new} instead of {old}")
    for new in added[len(removed):]:
        phrases.append(f"adds {new}")
    for old in removed[len(added):]:
        phrases.append(f"drops {old}")
    if not phrases:
        return NO_CHANGE_SENTINEL
    return " and ".join(phrases)


class MockModificationService:
    """Diff-summarizes the two captions embedded in the prompt."""

    name = "mock-synthesizer"

    def complete(self, request: ServiceRequest) -> ServiceResponse:
        reference = _prompt_field(request.prompt, "Reference caption")
        target = _prompt_field(request.prompt, "Target caption")
        if reference is None or target is None:
            raise ServiceError("prompt is missing the caption pair")
        text = diff_captions(reference, target)
        return ServiceResponse(
            text=text,
            latency_s=0.0,
            prompt_tokens=token_count(request.prompt),
            completion_tokens=token_count(text),
        )


class FlakyClient:
    """Test helper: fail specific call indices, transiently or permanently."""

    def __init__(self, inner, fail_calls: set[int], transient: bool = False,
                 empty: bool = False):
        self.inner = inner
        self.name = inner.name
        self.fail_calls = fail_calls
        self.transient = transient
        self.empty = empty
        self.calls = 0

    def complete(self, request: ServiceRequest) -> ServiceResponse:
        call = self.calls
        self.calls += 1
        if call in self.fail_calls:
            if self.empty:
                return ServiceResponse(text="")
            if self.transient:
                raise TransientServiceError(f"injected transient failure on call {call}")
            raise ServiceError(f"injected permanent failure on call {call}")
        return self.inner.complete(request)
