"""Controlled mask corruptions along separate accuracy and consistency axes.

Directional erosion shrinks masks (accuracy damage) while leaving them
temporally coherent; per-frame piecewise-affine jitter wobbles them
(consistency damage) while barely changing their area. The 3x3 grid driver
combines both at three levels each, tagging every cell with quality ranks.
All draws derive from the caller's seed, so outputs are bit-reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .flow import warp_labels
from .types import FlowField, LabelMask, VideoSequence

EROSION_LEVELS = (0, 10, 20)
JITTER_LEVELS = (0.0, 4.0, 8.0)
DEFAULT_GRID_CELLS = 32

_U64 = 0xFFFF_FFFF_FFFF_FFFF


def _rng(*keys: int) -> np.random.Generator:
    return np.random.default_rng([int(k) & _U64 for k in keys])


@dataclass(frozen=True)
class CorruptionSpec:
    erosion_px: int = 0
    jitter_mag: float = 0.0
    seed: int = 0
    grid_cells: int = DEFAULT_GRID_CELLS

    def __post_init__(self):
        if self.erosion_px < 0:
            raise ValueError("erosion_px must be non-negative")
        if self.jitter_mag < 0:
            raise ValueError("jitter_mag must be non-negative")
        if self.grid_cells < 1:
            raise ValueError("grid_cells must be >= 1")


def _translate_region(region: np.ndarray, dx: int, dy: int) -> np.ndarray:
    """Shift a boolean region by (dx, dy), filling with False."""
    h, w = region.shape
    out = np.zeros_like(region)
    if abs(dx) >= w or abs(dy) >= h:
        return out
    dst_x = slice(max(0, dx), min(w, w + dx))
    dst_y = slice(max(0, dy), min(h, h + dy))
    src_x = slice(max(0, -dx), min(w, w - dx))
    src_y = slice(max(0, -dy), min(h, h - dy))
    out[dst_y, dst_x] = region[src_y, src_x]
    return out


def random_direction(seed: int) -> tuple[float, float]:
    theta = _rng(seed).uniform(0.0, 2.0 * np.pi)
    return float(np.cos(theta)), float(np.sin(theta))


def erode_directional(
    mask: LabelMask,
    n: int,
    direction: tuple[float, float] | None = None,
    seed: int = 0,
) -> LabelMask:
    """Erode each non-background class by n pixels along one direction.

    The eroded region is the intersection of the class region with its
    translates by round(k * direction) for k = 1..n; removed pixels become
    background. With ``direction`` unset, a direction is drawn uniformly on
    the circle from ``seed``.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if direction is None:
        direction = random_direction(seed)
    dx, dy = float(direction[0]), float(direction[1])
    norm = np.hypot(dx, dy)
    if abs(norm - 1.0) > 1e-6:
        raise ValueError("direction must have unit norm")
    if n == 0:
        return mask
    out = np.zeros_like(mask.labels)
    for c in range(1, mask.num_classes):
        region = mask.labels == c
        if not region.any():
            continue
        eroded = region.copy()
        for k in range(1, n + 1):
            sx = int(np.floor(k * dx + 0.5))
            sy = int(np.floor(k * dy + 0.5))
            eroded &= _translate_region(region, sx, sy)
        out[eroded] = c
    return LabelMask(out, mask.num_classes)


def _node_positions(extent: int, spacing: int) -> np.ndarray:
    count = int(np.ceil((extent - 1) / spacing)) + 1 if extent > 1 else 2
    return np.arange(count) * spacing


def jitter_field(
    height: int,
    width: int,
    magnitude: float,
    frame_index: int,
    seed: int,
    grid_cells: int = DEFAULT_GRID_CELLS,
) -> FlowField:
    """Dense displacement field of a random local piecewise-affine transform.

    Control points sit on a ``grid_cells``-spaced lattice covering the image;
    each gets an independent displacement of length ``magnitude`` in a random
    direction (keyed by seed and frame), interpolated bilinearly in between.
    """
    xs = _node_positions(width, grid_cells)
    ys = _node_positions(height, grid_cells)
    rng = _rng(seed, frame_index)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=(len(ys), len(xs)))
    node_dx = magnitude * np.cos(theta)
    node_dy = magnitude * np.sin(theta)

    gy, gx = np.mgrid[0:height, 0:width]
    cx = np.minimum(gx // grid_cells, len(xs) - 2)
    cy = np.minimum(gy // grid_cells, len(ys) - 2)
    fx = (gx - cx * grid_cells) / grid_cells
    fy = (gy - cy * grid_cells) / grid_cells

    def interp(nodes: np.ndarray) -> np.ndarray:
        top = nodes[cy, cx] * (1 - fx) + nodes[cy, cx + 1] * fx
        bot = nodes[cy + 1, cx] * (1 - fx) + nodes[cy + 1, cx + 1] * fx
        return top * (1 - fy) + bot * fy

    return FlowField(np.stack([interp(node_dx), interp(node_dy)], axis=-1).astype(np.float32))


def jitter_piecewise_affine(
    mask: LabelMask,
    magnitude: float,
    frame_index: int,
    seed: int,
    grid_cells: int = DEFAULT_GRID_CELLS,
) -> LabelMask:
    """Resample a mask through a random piecewise-affine warp (see jitter_field).

    Nearest-neighbor sampling; pixels whose source falls outside the image
    become background. ``magnitude = 0`` is the identity.
    """
    if magnitude < 0:
        raise ValueError("magnitude must be non-negative")
    if magnitude == 0:
        return mask
    field = jitter_field(mask.height, mask.width, magnitude, frame_index, seed, grid_cells)
    warped, _ = warp_labels(mask, field)
    return warped


@dataclass(frozen=True)
class QualificationCell:
    """One corrupted clip of the 3x3 qualification grid.

    Ranks grow with quality: rank 3 on an axis means that axis is
    uncorrupted, rank 1 the most corrupted.
    """

    erosion_px: int
    jitter_mag: float
    accuracy_rank: int
    consistency_rank: int
    masks: tuple[LabelMask, ...]


def qualification_grid(
    seq: VideoSequence,
    seed: int,
    erosion_levels: tuple[int, ...] = EROSION_LEVELS,
    jitter_levels: tuple[float, ...] = JITTER_LEVELS,
    grid_cells: int = DEFAULT_GRID_CELLS,
) -> list[QualificationCell]:
    """Corrupt a sequence along the accuracy x consistency grid.

    Erosion uses one random direction fixed per cell; jitter is redrawn
    every frame so the corruption is temporal. Returns the Cartesian
    product of the levels, each cell tagged with its rank pair.
    """
    if len(erosion_levels) != 3 or len(jitter_levels) != 3:
        raise ValueError("levels must have exactly 3 entries per axis")
    if sorted(erosion_levels) != list(erosion_levels) or sorted(jitter_levels) != list(jitter_levels):
        raise ValueError("levels must be ascending")
    cells = []
    for ai, n in enumerate(erosion_levels):
        for ci, m in enumerate(jitter_levels):
            cell_seed = int(np.random.SeedSequence([int(seed) & _U64, ai, ci]).generate_state(1, np.uint64)[0])
            direction = random_direction(cell_seed)
            masks = []
            for t, mask in enumerate(seq.masks):
                eroded = erode_directional(mask, n, direction)
                masks.append(jitter_piecewise_affine(eroded, m, t, cell_seed, grid_cells))
            cells.append(
                QualificationCell(
                    erosion_px=int(n),
                    jitter_mag=float(m),
                    accuracy_rank=3 - ai,
                    consistency_rank=3 - ci,
                    masks=tuple(masks),
                )
            )
    return cells
