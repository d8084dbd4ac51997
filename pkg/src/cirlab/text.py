"""Tokenization shared by the model's text pathway and dataset statistics.

One fixed rule everywhere: lowercase, then split on whitespace and
punctuation (tokens are maximal alphanumeric runs). Keeping a single
tokenizer makes vocabulary counts and truncation lengths reproducible.
"""

import hashlib
import re

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Split ``text`` into lowercase alphanumeric tokens."""
    return _TOKEN_RE.findall(text.lower())


def token_count(text: str) -> int:
    return len(tokenize(text))


def truncate_tokens(text: str, max_tokens: int) -> tuple[str, bool]:
    """Rebuild ``text`` from its first ``max_tokens`` tokens.

    Returns the (possibly shortened) text and whether truncation happened.
    """
    tokens = tokenize(text)
    if len(tokens) <= max_tokens:
        return text, False
    return " ".join(tokens[:max_tokens]), True


def vocabulary(texts: list[str]) -> set[str]:
    vocab: set[str] = set()
    for text in texts:
        vocab.update(tokenize(text))
    return vocab


def hash_token_id(token: str, vocab_size: int) -> int:
    """Stable token-to-id mapping (process-independent, unlike ``hash``)."""
    digest = hashlib.sha256(token.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % vocab_size
