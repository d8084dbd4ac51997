"""Synthetic desk-scale fixtures: color-grid images with known structure.

Every generated image is a vertical two-block color grid (a top color over
a bottom color from a fixed named palette), so ground truth for pairing,
captioning, and retrieval is known by construction. The planted retrieval
task asks the model to combine a reference image with a text like
"change the top to teal" and retrieve the grid that differs in exactly
that block — solvable only by fusing both modalities.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .colors import PALETTE, color_names
from .errors import ConfigurationError
from .pipeline.records import CirTriplet, ImageRecord, write_jsonl
from .seeding import np_rng


def render_color_grid(top: str, bottom: str, image_size: int = 16) -> np.ndarray:
    """Render an RGB uint8 image: top half ``top``, bottom half ``bottom``."""
    pixels = np.zeros((image_size, image_size, 3), dtype=np.uint8)
    pixels[: image_size // 2, :, :] = PALETTE[top]
    pixels[image_size // 2 :, :, :] = PALETTE[bottom]
    return pixels


def grid_caption(top: str, bottom: str, category: str) -> str:
    return f"a {category} with a {top} top half and a {bottom} bottom half"


def grid_modification(block: str, color: str) -> str:
    return f"change the {block} to {color}"


@dataclass
class GridImage:
    record: ImageRecord
    top: str
    bottom: str


def generate_grid_pool(
    out_dir: str | Path,
    n_images: int,
    categories: tuple[str, ...] = ("dress",),
    image_size: int = 16,
    seed: int = 0,
    source: str = "other",
) -> list[GridImage]:
    """Write ``n_images`` color-grid PNGs plus ``images.jsonl``.

    Color combinations cycle deterministically over the palette product;
    categories are assigned round-robin. Each image gets its own item
    group.
    """
    names = color_names()
    if n_images > len(names) ** 2 * len(categories):
        raise ConfigurationError(
            f"cannot generate {n_images} distinct grids from "
            f"{len(names)}^2 color pairs x {len(categories)} categories"
        )
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    combos = [(t, b) for t in names for b in names]
    grids: list[GridImage] = []
    for i in range(n_images):
        top, bottom = combos[i % len(combos)]
        category = categories[i % len(categories)]
        image_id = f"{category}_{i:04d}"
        rel_path = f"images/{image_id}.png"
        Image.fromarray(render_color_grid(top, bottom, image_size)).save(
            out_dir / rel_path
        )
        record = ImageRecord(
            id=image_id,
            path=rel_path,
            source=source,
            category=category,
            item_group=f"group_{image_id}",
            web_caption=f"{top} over {bottom} {category} studio photo",
        )
        grids.append(GridImage(record=record, top=top, bottom=bottom))
    write_jsonl(out_dir / "images.jsonl", [g.record for g in grids])
    return grids


def planted_triplets(
    grids: list[GridImage],
    n_triplets: int,
    seed: int,
    with_captions: bool = True,
    mod_colors: list[str] | None = None,
) -> list[CirTriplet]:
    """Sample triplets whose target differs from the reference in one block.

    For a reference grid (a, b), a modification "change the top to c"
    points at the grid (c, b) — the target always exists in the pool or
    the draw is rejected and retried. The modification vocabulary defaults
    to the first 8 palette colors so a small triplet budget still covers
    each color several times (references span the full palette).
    """
    by_colors = {(g.top, g.bottom): g for g in grids}
    rng = np_rng(seed, "planted-triplets")
    names = mod_colors if mod_colors is not None else color_names()[:8]
    triplets: list[CirTriplet] = []
    seen: set[tuple[str, str]] = set()
    attempts = 0
    while len(triplets) < n_triplets:
        attempts += 1
        if attempts > 200 * n_triplets:
            raise ConfigurationError(
                "pool too small to plant the requested number of triplets"
            )
        ref = grids[int(rng.integers(len(grids)))]
        block = "top" if rng.integers(2) == 0 else "bottom"
        color = names[int(rng.integers(len(names)))]
        if block == "top":
            key = (color, ref.bottom)
        else:
            key = (ref.top, color)
        target = by_colors.get(key)
        if target is None or target.record.id == ref.record.id:
            continue
        pair_key = (ref.record.id, target.record.id)
        if pair_key in seen:
            continue
        seen.add(pair_key)
        category = ref.record.category
        triplets.append(
            CirTriplet(
                reference_id=ref.record.id,
                target_id=target.record.id,
                modification_text=grid_modification(block, color),
                reference_caption=grid_caption(ref.top, ref.bottom, category)
                if with_captions else None,
                target_caption=grid_caption(target.top, target.bottom, category)
                if with_captions else None,
                provenance={"generator": "planted-grid"},
            )
        )
    return triplets


def generate_planted_dataset(
    out_dir: str | Path,
    n_gallery: int = 200,
    n_train: int = 64,
    n_eval: int = 32,
    image_size: int = 16,
    seed: int = 0,
) -> tuple[Path, Path]:
    """Write a planted train/eval dataset pair sharing one image gallery.

    Returns ``(train_dir, eval_dir)``; both directories hold
    ``images.jsonl`` + ``triplets.jsonl`` and share the image files. Train
    and eval triplets are disjoint as (reference, target) pairs.
    """
    out_dir = Path(out_dir)
    grids = generate_grid_pool(out_dir, n_gallery, image_size=image_size, seed=seed)
    both = planted_triplets(grids, n_train + n_eval, seed=seed)
    train, evaluation = both[:n_train], both[n_train:]
    train_dir = out_dir
    write_jsonl(train_dir / "triplets.jsonl", train)
    eval_dir = out_dir / "eval"
    eval_dir.mkdir(parents=True, exist_ok=True)
    images_abs = [
        ImageRecord(**{**g.record.__dict__, "path": str((out_dir / g.record.path).resolve())})
        for g in grids
    ]
    write_jsonl(eval_dir / "images.jsonl", images_abs)
    write_jsonl(eval_dir / "triplets.jsonl", evaluation)
    return train_dir, eval_dir
