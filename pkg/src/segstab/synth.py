"""Synthetic sequences with analytically exact flow, masks, and occlusions.

Scenes are built from shapes translating at constant velocity over a
textured plane, so every pairwise flow is known in closed form and the
masks track the motion exactly. Generated sequences carry ground-truth
visibility maps in ``VideoSequence.true_occlusions``.
"""
from __future__ import annotations

import numpy as np

from .types import FlowField, Image, LabelMask, OcclusionMask, VideoSequence

SHAPES = ("square", "disk", "star")


def _point_in_polygon(px: np.ndarray, py: np.ndarray, verts: list[tuple[float, float]]) -> np.ndarray:
    """Vectorized even-odd crossing test."""
    inside = np.zeros(px.shape, dtype=bool)
    n = len(verts)
    for k in range(n):
        x1, y1 = verts[k]
        x2, y2 = verts[(k + 1) % n]
        if y2 == y1:
            continue
        straddles = (y1 > py) != (y2 > py)
        xint = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
        inside ^= straddles & (px < xint)
    return inside


def _star_vertices(radius: float) -> list[tuple[float, float]]:
    """Five-pointed star, one point up, alternating outer/inner radius."""
    verts = []
    inner = 0.4 * radius
    for k in range(10):
        r = radius if k % 2 == 0 else inner
        theta = -np.pi / 2 + k * np.pi / 5
        verts.append((r * np.cos(theta), r * np.sin(theta)))
    return verts


def _shape_indicator(shape: str, size: float, wx: np.ndarray, wy: np.ndarray) -> np.ndarray:
    """Indicator of the shape centered at the origin of (wx, wy)."""
    half = size / 2.0
    if shape == "square":
        return (wx >= -half) & (wx < half) & (wy >= -half) & (wy < half)
    if shape == "disk":
        return wx**2 + wy**2 <= half**2
    if shape == "star":
        return _point_in_polygon(wx, wy, _star_vertices(half))
    raise ValueError(f"unknown shape {shape!r}; choose from {SHAPES}")


def _shape_extent(shape: str, size: float) -> float:
    return size / 2.0


def _background_texture(wx: np.ndarray, wy: np.ndarray) -> np.ndarray:
    checker = (np.floor(wx / 8) + np.floor(wy / 8)) % 2
    rx = (wx % 32) / 32.0
    ry = (wy % 32) / 32.0
    r = 0.15 + 0.30 * checker + 0.15 * rx
    g = 0.20 + 0.25 * checker + 0.15 * ry
    b = 0.25 + 0.20 * checker + 0.10 * (rx + ry) / 2.0
    return np.stack([r, g, b], axis=-1)


def _shape_texture(wx: np.ndarray, wy: np.ndarray, base: tuple[float, float, float]) -> np.ndarray:
    checker = (np.floor(wx / 4) + np.floor(wy / 4)) % 2
    chans = [np.clip(c + 0.12 * checker, 0.0, 1.0) for c in base]
    return np.stack(chans, axis=-1)


def _constant_flow(h: int, w: int, dx: float, dy: float) -> FlowField:
    vec = np.empty((h, w, 2), dtype=np.float32)
    vec[:, :, 0] = dx
    vec[:, :, 1] = dy
    return FlowField(vec)


def make_translating_scene(
    shape: str,
    size: float,
    velocity: tuple[float, float],
    num_frames: int,
    canvas: int,
    fps: float = 30.0,
    window: int = 3,
) -> VideoSequence:
    """A single shape gliding over a textured plane, everything moving together.

    The whole scene translates at ``velocity`` px/frame (a camera pan), so
    the flow between frames i and j is exactly ``(j - i) * velocity``
    everywhere. Masks label shape pixels class 1 and are exact indicator
    rasterizations. Ground-truth occlusion maps mark pixels whose target
    leaves the canvas. Integer velocities keep every warp exact.
    """
    if num_frames < 1:
        raise ValueError("num_frames must be >= 1")
    vx, vy = float(velocity[0]), float(velocity[1])
    h = w = int(canvas)
    extent = _shape_extent(shape, size)
    # Center the trajectory on the canvas.
    cx0 = (w - 1) / 2.0 - vx * (num_frames - 1) / 2.0
    cy0 = (h - 1) / 2.0 - vy * (num_frames - 1) / 2.0
    if vx == int(vx) and vy == int(vy):
        cx0, cy0 = round(cx0), round(cy0)
    for t in range(num_frames):
        cx, cy = cx0 + t * vx, cy0 + t * vy
        if cx - extent < 0 or cx + extent > w - 1 or cy - extent < 0 or cy + extent > h - 1:
            raise ValueError(f"shape exits canvas at frame {t}")

    gy, gx = np.mgrid[0:h, 0:w].astype(np.float64)
    frames, masks = [], []
    for t in range(num_frames):
        cx, cy = cx0 + t * vx, cy0 + t * vy
        inside = _shape_indicator(shape, size, gx - cx, gy - cy)
        bg = _background_texture(gx - t * vx, gy - t * vy)
        fg = _shape_texture(gx - cx, gy - cy, (0.80, 0.75, 0.35))
        frames.append(Image(np.where(inside[:, :, None], fg, bg)))
        masks.append(LabelMask(inside.astype(np.int32), 2))

    flows: dict[tuple[int, int], FlowField] = {}
    occs: dict[tuple[int, int], OcclusionMask] = {}
    for i in range(num_frames):
        for j in range(max(0, i - window), min(num_frames, i + window + 1)):
            if i == j:
                continue
            dx, dy = (j - i) * vx, (j - i) * vy
            flows[(i, j)] = _constant_flow(h, w, dx, dy)
            visible = (gx + dx >= 0) & (gx + dx <= w - 1) & (gy + dy >= 0) & (gy + dy <= h - 1)
            occs[(i, j)] = OcclusionMask(visible)

    return VideoSequence(
        frames=tuple(frames),
        masks=tuple(masks),
        flows=flows,
        fps=fps,
        num_classes=2,
        true_occlusions=occs,
    )


def make_occlusion_scene(
    num_frames: int = 9,
    canvas: int = 96,
    fps: float = 30.0,
    window: int = 3,
) -> VideoSequence:
    """Two squares on crossing paths over a static background.

    The near square (label 1) moves right, the far square (label 2) moves
    left behind it; they overlap fully at frame 4. Flows carry the velocity
    of the visible surface at each pixel, and ``true_occlusions[(i, j)]``
    marks frame-i pixels whose surface point is hidden (or gone) in frame j.
    """
    if not 2 <= num_frames <= 11:
        raise ValueError("num_frames must be in [2, 11] to keep the squares in canvas")
    h = w = int(canvas)
    side = 24
    top = (h - side) // 2
    vel = {0: (0.0, 0.0), 1: (6.0, 0.0), 2: (-6.0, 0.0)}  # surface id -> velocity

    def near_x(t: int) -> int:
        return 12 + 6 * t

    def far_x(t: int) -> int:
        return w - 12 - side - 6 * t

    gy, gx = np.mgrid[0:h, 0:w]

    def square_region(x0: int) -> np.ndarray:
        return (gx >= x0) & (gx < x0 + side) & (gy >= top) & (gy < top + side)

    def surfaces(t: int) -> np.ndarray:
        """Topmost surface id per pixel: 1 near, 2 far, 0 background."""
        surf = np.zeros((h, w), dtype=np.int32)
        surf[square_region(far_x(t))] = 2
        surf[square_region(near_x(t))] = 1
        return surf

    frames, masks = [], []
    bg = _background_texture(gx.astype(np.float64), gy.astype(np.float64))
    for t in range(num_frames):
        surf = surfaces(t)
        img = bg.copy()
        for sid, base in ((2, (0.30, 0.45, 0.85)), (1, (0.85, 0.35, 0.30))):
            region = surf == sid
            ox = near_x(t) if sid == 1 else far_x(t)
            tex = _shape_texture(gx - ox, gy - top, base)
            img[region] = tex[region]
        frames.append(Image(img))
        masks.append(LabelMask(surf, 3))

    flows: dict[tuple[int, int], FlowField] = {}
    occs: dict[tuple[int, int], OcclusionMask] = {}
    surf_cache = [surfaces(t) for t in range(num_frames)]
    for i in range(num_frames):
        for j in range(max(0, i - window), min(num_frames, i + window + 1)):
            if i == j:
                continue
            dt = j - i
            vec = np.zeros((h, w, 2), dtype=np.float32)
            valid = np.zeros((h, w), dtype=bool)
            for sid, (vx, vy) in vel.items():
                region = surf_cache[i] == sid
                vec[region, 0] = vx * dt
                vec[region, 1] = vy * dt
                tx = gx + int(vx * dt)
                ty = gy + int(vy * dt)
                in_canvas = (tx >= 0) & (tx < w) & (ty >= 0) & (ty < h)
                txc = np.clip(tx, 0, w - 1)
                tyc = np.clip(ty, 0, h - 1)
                visible = in_canvas & (surf_cache[j][tyc, txc] == sid)
                valid |= region & visible
            flows[(i, j)] = FlowField(vec)
            occs[(i, j)] = OcclusionMask(valid)

    return VideoSequence(
        frames=tuple(frames),
        masks=tuple(masks),
        flows=flows,
        fps=fps,
        num_classes=3,
        true_occlusions=occs,
    )
