"""Named color palette shared by the synthetic fixtures and the mocks."""

import numpy as np

PALETTE: dict[str, tuple[int, int, int]] = {
    "crimson": (220, 20, 60),
    "coral": (255, 127, 80),
    "amber": (255, 191, 0),
    "olive": (128, 128, 0),
    "lime": (50, 205, 50),
    "emerald": (0, 158, 96),
    "teal": (0, 128, 128),
    "cyan": (0, 204, 204),
    "azure": (0, 127, 255),
    "navy": (0, 0, 128),
    "violet": (143, 0, 255),
    "magenta": (255, 0, 255),
    "rose": (255, 102, 178),
    "chocolate": (123, 63, 0),
    "slate": (112, 128, 144),
}


def color_names() -> list[str]:
    return list(PALETTE)


def nearest_color_name(rgb: np.ndarray) -> str:
    """Closest palette name to an RGB triple (euclidean distance)."""
    best, best_d = None, None
    for name, ref in PALETTE.items():
        d = float(np.sum((np.asarray(ref, dtype=np.float64) - rgb) ** 2))
        if best_d is None or d < best_d:
            best, best_d = name, d
    return best
