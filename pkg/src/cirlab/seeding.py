"""Deterministic named substreams derived from one top-level seed.

Every source of randomness in the package (parameter init, pairing,
shuffling, sampling) draws from its own named substream so that modules
stay independently reproducible: changing how one module consumes
randomness never perturbs another.
"""

import hashlib

import numpy as np
import torch


def substream(seed: int, name: str) -> int:
    """Derive a 63-bit child seed from ``seed`` for the stream ``name``."""
    digest = hashlib.sha256(f"{seed}:{name}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & 0x7FFF_FFFF_FFFF_FFFF


def np_rng(seed: int, name: str) -> np.random.Generator:
    """NumPy generator for the named substream."""
    return np.random.default_rng(substream(seed, name))


def torch_generator(seed: int, name: str) -> torch.Generator:
    """Torch generator for the named substream (CPU)."""
    gen = torch.Generator()
    gen.manual_seed(substream(seed, name))
    return gen
