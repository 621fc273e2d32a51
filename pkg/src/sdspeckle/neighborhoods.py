"""Window geometry for the two filters.

Offsets are (dr, dc) pairs relative to the filtered pixel, rows growing
downwards. The Nagao-Matsuyama masks, numbered as returned by
``nagao_masks``::

    1 central    2 N          3 E          4 S          5 W
    . . . . .    . x x x .    . . . . .    . . . . .    . . . . .
    . x x x .    . x x x .    . . . x x    . . . . .    x x . . .
    . x x x .    . . x . .    . . x x x    . . x . .    x x x . .
    . x x x .    . . . . .    . . . x x    . x x x .    x x . . .
    . . . . .    . . . . .    . . . . .    . x x x .    . . . . .

    6 NE         7 SE         8 SW         9 NW
    . . . x x    . . . . .    . . . . .    x x . . .
    . . x x x    . . . . .    . . . . .    x x x . .
    . . x x .    . . x x .    . x x . .    . x x . .
    . . . . .    . . x x x    x x x . .    . . . . .
    . . . . .    . . . x x    x x . . .    . . . . .

Masks 3-5 and 7-9 are successive quarter turns of masks 2 and 6.
"""

import enum
from dataclasses import dataclass

import numpy as np

WINDOW_RADIUS = 2


class BorderPolicy(enum.Enum):
    # whole-sample reflection: (c b | a b c d | c b)
    MIRROR = "mirror"
    # pixels whose window leaves the image are copied unfiltered
    SKIP = "skip"


@dataclass(frozen=True)
class RegionMask:
    id: int
    name: str
    offsets: tuple

    @property
    def size(self):
        return len(self.offsets)


def _rotate(offsets):
    # quarter turn clockwise on screen: N -> E -> S -> W
    return tuple(sorted((dc, -dr) for dr, dc in offsets))


_NORTH = ((-2, -1), (-2, 0), (-2, 1), (-1, -1), (-1, 0), (-1, 1), (0, 0))
_NORTH_EAST = ((-2, 1), (-2, 2), (-1, 0), (-1, 1), (-1, 2), (0, 0), (0, 1))


def nagao_masks():
    central = tuple((dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1))
    masks = [RegionMask(1, "central", central)]
    edge, corner = tuple(sorted(_NORTH)), tuple(sorted(_NORTH_EAST))
    for i, (edge_name, corner_name) in enumerate(zip("NESW", ("NE", "SE", "SW", "NW"))):
        masks.append(RegionMask(2 + i, edge_name, edge))
        masks.append(RegionMask(6 + i, corner_name, corner))
        edge, corner = _rotate(edge), _rotate(corner)
    return sorted(masks, key=lambda m: m.id)


@dataclass(frozen=True)
class PatchLayout:
    patch_radius: int = 1
    search_radius: int = WINDOW_RADIUS

    @property
    def center_offsets(self):
        r = self.search_radius
        return tuple(
            (dr, dc) for dr in range(-r, r + 1) for dc in range(-r, r + 1) if (dr, dc) != (0, 0)
        )

    @property
    def patch_offsets(self):
        r = self.patch_radius
        return tuple((dr, dc) for dr in range(-r, r + 1) for dc in range(-r, r + 1))

    @property
    def reach(self):
        return self.patch_radius + self.search_radius


def mirror_index(i, n):
    """Reflect integer indices into [0, n) without repeating the edge sample."""
    i = np.asarray(i)
    if n == 1:
        return np.zeros_like(i)
    period = 2 * (n - 1)
    i = np.mod(i, period)
    return np.where(i < n, i, period - i)


def pad_image(image, width):
    """Mirror-pad an image; valid for any width, including beyond the image size."""
    image = np.asarray(image, dtype=float)
    rows = mirror_index(np.arange(-width, image.shape[0] + width), image.shape[0])
    cols = mirror_index(np.arange(-width, image.shape[1] + width), image.shape[1])
    return image[np.ix_(rows, cols)]


def _gather(image, row, col, offsets, border):
    height, width = image.shape
    if not (0 <= row < height and 0 <= col < width):
        raise IndexError(f"pixel ({row}, {col}) outside a {height}x{width} image")
    rows = np.array([row + dr for dr, _ in offsets])
    cols = np.array([col + dc for _, dc in offsets])
    if border is BorderPolicy.MIRROR:
        return image[mirror_index(rows, height), mirror_index(cols, width)]
    inside = (rows >= 0) & (rows < height) & (cols >= 0) & (cols < width)
    return image[rows[inside], cols[inside]]


def extract_sample(image, row, col, mask, border=BorderPolicy.MIRROR):
    """Pixel values under ``mask`` centred at (row, col), in row-major offset order.

    With SKIP, offsets falling outside the image are dropped.
    """
    return _gather(np.asarray(image, dtype=float), row, col, sorted(mask.offsets), border)


def extract_patches(image, row, col, layout=PatchLayout(), border=BorderPolicy.MIRROR):
    """Central patch and the 24 neighbouring patches around (row, col)."""
    image = np.asarray(image, dtype=float)
    patch = layout.patch_offsets
    central = _gather(image, row, col, patch, border)
    neighbours = []
    for dr, dc in layout.center_offsets:
        shifted = [(dr + pr, dc + pc) for pr, pc in patch]
        neighbours.append(_gather(image, row, col, shifted, border))
    return central, neighbours
