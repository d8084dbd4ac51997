"""Prompt assembly for the two annotation stages.

The instruction blocks ship as versioned data files next to this module;
prompts are assembled deterministically so every annotation can be traced
back to the exact prompt through a fingerprint.
"""

import hashlib
from importlib import resources

from .records import ImageRecord


def _load(name: str) -> str:
    return (
        resources.files("cirlab.pipeline").joinpath("prompts", name).read_text("utf-8")
    ).strip()


def caption_instruction() -> str:
    return _load("caption_instruction.txt")


def modification_instruction() -> str:
    return _load("modification_instruction.txt")


def build_caption_prompt(record: ImageRecord) -> str:
    """Instruction block plus the record's category and noisy metadata."""
    lines = [caption_instruction(), "", f"Category: {record.category}"]
    if record.web_caption:
        lines.append(f"Product description: {record.web_caption}")
    if record.attributes:
        rendered = "; ".join(f"{k}={v}" for k, v in sorted(record.attributes.items()))
        lines.append(f"Attributes: {rendered}")
    lines.append("Caption:")
    return "\n".join(lines)


def build_modification_prompt(reference_caption: str, target_caption: str) -> str:
    """Instruction block (with its in-context examples) plus the pair."""
    return "\n".join(
        [
            modification_instruction(),
            "",
            f"Reference caption: {reference_caption}",
            f"Target caption: {target_caption}",
            "Modification:",
        ]
    )


def prompt_fingerprint(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()
