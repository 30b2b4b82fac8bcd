"""Shared image/mask/flow data model used across the library.

Arrays are row-major numpy arrays indexed ``[row, col]`` (y first). Flow
vectors are stored as ``(dx, dy)`` in pixel units, so a pixel at ``(x, y)``
paired with flow ``(dx, dy)`` refers to position ``(x + dx, y + dy)``.
All containers freeze their arrays after validation and are safe to share
read-only between workers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Image:
    """A single frame with 1 (gray) or 3 (RGB) channels, samples in [0, 1]."""

    data: np.ndarray  # (H, W, C) float32

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float32)
        if data.ndim == 2:
            data = data[:, :, None]
        if data.ndim != 3 or data.shape[2] not in (1, 3):
            raise ValueError(f"image data must be (H, W, 1|3), got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("image contains non-finite samples")
        if data.min() < 0.0 or data.max() > 1.0:
            raise ValueError("image samples must lie in [0, 1]")
        object.__setattr__(self, "data", _freeze(data))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class LabelMask:
    """Per-pixel categorical segmentation; label 0 is background."""

    labels: np.ndarray  # (H, W) integer
    num_classes: int  # L+1 including background

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2:
            raise ValueError(f"labels must be 2-D, got shape {labels.shape}")
        if not np.issubdtype(labels.dtype, np.integer):
            raise ValueError("labels must be integer-typed")
        if self.num_classes < 1:
            raise ValueError("num_classes must be >= 1")
        labels = labels.astype(np.int32, copy=True)
        if labels.size and (labels.min() < 0 or labels.max() >= self.num_classes):
            raise ValueError("labels out of range for num_classes")
        object.__setattr__(self, "labels", _freeze(labels))

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


@dataclass(frozen=True)
class SoftMaskVolume:
    """Per-class confidence maps in [0, 1] over a frame sequence.

    Shape is ``(T, L+1, H, W)``. Construction enforces range and finiteness;
    use :meth:`check_normalized` where the post-softmax contract (class
    confidences summing to 1 per pixel) is required. Filter outputs are valid
    volumes but generally no longer sum to 1.
    """

    values: np.ndarray  # (T, C, H, W) float32

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float32)
        if values.ndim != 4:
            raise ValueError(f"volume must be (T, C, H, W), got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("volume contains non-finite values")
        if values.size and (values.min() < 0.0 or values.max() > 1.0):
            raise ValueError("confidences must lie in [0, 1]")
        object.__setattr__(self, "values", _freeze(values))

    @property
    def num_frames(self) -> int:
        return self.values.shape[0]

    @property
    def num_classes(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[2]

    @property
    def width(self) -> int:
        return self.values.shape[3]

    def check_normalized(self, tol: float = 1e-4) -> None:
        """Raise if per-pixel class confidences do not sum to 1 within tol."""
        sums = self.values.sum(axis=1, dtype=np.float64)
        err = np.abs(sums - 1.0).max() if sums.size else 0.0
        if err > tol:
            raise ValueError(f"confidences sum to 1 +/- {err:.2e}, tolerance {tol:.0e}")


@dataclass(frozen=True)
class FlowField:
    """Dense per-pixel displacement (dx, dy) between two frames, in pixels."""

    vectors: np.ndarray  # (H, W, 2) float32

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=np.float32)
        if vectors.ndim != 3 or vectors.shape[2] != 2:
            raise ValueError(f"flow must be (H, W, 2), got {vectors.shape}")
        if not np.all(np.isfinite(vectors)):
            raise ValueError("flow contains non-finite components")
        object.__setattr__(self, "vectors", _freeze(vectors))

    @property
    def height(self) -> int:
        return self.vectors.shape[0]

    @property
    def width(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class OcclusionMask:
    """Binary validity map: 1 = correspondence valid, 0 = occluded/out of bounds."""

    valid: np.ndarray  # (H, W) uint8 in {0, 1}

    def __post_init__(self):
        valid = np.asarray(self.valid)
        if valid.ndim != 2:
            raise ValueError(f"validity map must be 2-D, got {valid.shape}")
        if valid.dtype == bool:
            valid = valid.astype(np.uint8)
        if not np.issubdtype(valid.dtype, np.integer):
            raise ValueError("validity map must be integer or boolean")
        valid = valid.astype(np.uint8, copy=True)
        if valid.size and not np.isin(valid, (0, 1)).all():
            raise ValueError("validity values must be exactly 0 or 1")
        object.__setattr__(self, "valid", _freeze(valid))

    @property
    def as_bool(self) -> np.ndarray:
        return self.valid.astype(bool)


@dataclass(frozen=True)
class VideoSequence:
    """Ordered frames + masks + pairwise flows.

    ``flows`` maps ordered frame index pairs ``(i, j)`` to the flow computed
    from frame i to frame j; whenever a pair is stored, its reverse must be
    stored too. ``true_occlusions`` optionally carries analytic ground-truth
    visibility per pair (synthetic scenes only): ``true_occlusions[(i, j)]``
    is on frame i's grid, 0 where frame i's content is not visible in frame j.
    """

    frames: tuple[Image, ...]
    masks: tuple[LabelMask, ...]
    flows: dict[tuple[int, int], FlowField]
    fps: float
    num_classes: int
    true_occlusions: Optional[dict[tuple[int, int], OcclusionMask]] = field(default=None)

    def __post_init__(self):
        frames = tuple(self.frames)
        masks = tuple(self.masks)
        if len(frames) < 1 or len(frames) != len(masks):
            raise ValueError("frames and masks must have equal length >= 1")
        h, w = frames[0].height, frames[0].width
        for f in frames:
            if (f.height, f.width) != (h, w):
                raise ValueError("frames have non-uniform dimensions")
        for m in masks:
            if (m.height, m.width) != (h, w):
                raise ValueError("mask dimensions do not match frames")
            if m.num_classes != self.num_classes:
                raise ValueError("mask num_classes does not match sequence")
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        t = len(frames)
        for (i, j), fl in self.flows.items():
            if not (0 <= i < t and 0 <= j < t and i != j):
                raise ValueError(f"flow pair {(i, j)} out of range")
            if (fl.height, fl.width) != (h, w):
                raise ValueError(f"flow {(i, j)} dimensions do not match frames")
            if (j, i) not in self.flows:
                raise ValueError(f"flow pair {(i, j)} stored without its reverse")
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "masks", masks)

    @property
    def num_frames(self) -> int:
        return len(self.frames)

    @property
    def height(self) -> int:
        return self.frames[0].height

    @property
    def width(self) -> int:
        return self.frames[0].width

    def flow(self, i: int, j: int) -> FlowField:
        try:
            return self.flows[(i, j)]
        except KeyError:
            raise ValueError(f"missing flow for frame pair {(i, j)}") from None


def one_hot(mask: LabelMask) -> SoftMaskVolume:
    """One-hot encode a single mask into a 1-frame volume."""
    planes = one_hot_planes(mask.labels, mask.num_classes)
    return SoftMaskVolume(planes[None])


def one_hot_planes(labels: np.ndarray, num_classes: int) -> np.ndarray:
    """One-hot planes (C, H, W) float32 for an integer label map."""
    c = np.arange(num_classes, dtype=labels.dtype)
    return (labels[None] == c[:, None, None]).astype(np.float32)


def one_hot_volume(masks: tuple[LabelMask, ...] | list[LabelMask]) -> SoftMaskVolume:
    """One-hot encode a mask sequence into a (T, C, H, W) volume."""
    if not masks:
        raise ValueError("empty mask sequence")
    num_classes = masks[0].num_classes
    planes = [one_hot_planes(m.labels, num_classes) for m in masks]
    return SoftMaskVolume(np.stack(planes))


def argmax_merge(volume: SoftMaskVolume, frame: int) -> LabelMask:
    """Merge a frame's class confidences into labels; ties go to the smallest index."""
    if not 0 <= frame < volume.num_frames:
        raise ValueError(f"frame {frame} out of range [0, {volume.num_frames})")
    labels = np.argmax(volume.values[frame], axis=0).astype(np.int32)
    return LabelMask(labels, volume.num_classes)
