"""File formats and dataset layout.

A sequence directory looks like::

    <seq>/frames/%05d.png     8-bit RGB (or gray) frames
    <seq>/masks/%05d.png      8-bit single-channel or paletted label masks
    <seq>/flow/%05d_%05d.flo  Middlebury flow, one file per ordered pair
    <seq>/meta.json           {"fps": ..., "num_classes": ...}

Mask and flow round trips are lossless; frames are quantized to 8 bits.
Readers reject malformed input with :class:`FormatError` rather than
returning partial data.
"""
from __future__ import annotations

import csv
import json
import re
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .stats import Rating, RatingsTable
from .types import FlowField, Image, LabelMask, SoftMaskVolume, VideoSequence

FLO_MAGIC = 202021.25
_FLOW_NAME = re.compile(r"^(\d{5})_(\d{5})\.flo$")


class FormatError(ValueError):
    """Malformed or unsupported file content."""


# ---------------------------------------------------------------------------
# Middlebury .flo

def write_flo(path: str | Path, flow: FlowField) -> None:
    with open(path, "wb") as f:
        f.write(np.float32(FLO_MAGIC).tobytes())
        f.write(np.array([flow.width, flow.height], dtype="<i4").tobytes())
        f.write(flow.vectors.astype("<f4").tobytes())


def read_flo(path: str | Path) -> FlowField:
    data = Path(path).read_bytes()
    if len(data) < 12:
        raise FormatError(f"{path}: truncated header")
    magic = np.frombuffer(data[:4], dtype="<f4")[0]
    if magic != np.float32(FLO_MAGIC):
        raise FormatError(f"{path}: bad magic {magic!r}")
    w, h = (int(v) for v in np.frombuffer(data[4:12], dtype="<i4"))
    if w <= 0 or h <= 0:
        raise FormatError(f"{path}: invalid dimensions {w}x{h}")
    expected = 12 + 8 * w * h
    if len(data) != expected:
        raise FormatError(f"{path}: payload is {len(data)} bytes, expected {expected}")
    vectors = np.frombuffer(data[12:], dtype="<f4").reshape(h, w, 2)
    return FlowField(vectors.copy())


# ---------------------------------------------------------------------------
# Mask and frame PNGs

def write_mask_png(path: str | Path, mask: LabelMask) -> None:
    if mask.num_classes > 256:
        raise FormatError("PNG masks support at most 256 classes")
    PILImage.fromarray(mask.labels.astype(np.uint8), mode="L").save(path)


def read_mask_png(path: str | Path, num_classes: int | None = None) -> LabelMask:
    with PILImage.open(path) as img:
        if img.mode in ("L", "P"):
            labels = np.asarray(img, dtype=np.int32)
        elif img.mode.startswith("I") or img.mode == "F":
            raise FormatError(f"{path}: unsupported bit depth (mode {img.mode})")
        else:
            raise FormatError(f"{path}: expected single-channel or paletted mask, got mode {img.mode}")
    if num_classes is None:
        num_classes = int(labels.max()) + 1 if labels.size else 1
    return LabelMask(labels, num_classes)


def write_frame_png(path: str | Path, image: Image) -> None:
    data = np.floor(image.data.astype(np.float64) * 255.0 + 0.5).astype(np.uint8)
    if image.channels == 1:
        PILImage.fromarray(data[:, :, 0], mode="L").save(path)
    else:
        PILImage.fromarray(data, mode="RGB").save(path)


def read_frame_png(path: str | Path) -> Image:
    with PILImage.open(path) as img:
        if img.mode == "L":
            arr = np.asarray(img, dtype=np.float32)[:, :, None]
        elif img.mode in ("RGB", "P", "RGBA"):
            arr = np.asarray(img.convert("RGB"), dtype=np.float32)
        else:
            raise FormatError(f"{path}: unsupported frame mode {img.mode}")
    return Image(arr / 255.0)


# ---------------------------------------------------------------------------
# Soft mask volumes (SMV)

def write_volume(path: str | Path, volume: SoftMaskVolume) -> None:
    header = f"SMV1 {volume.num_frames} {volume.num_classes} {volume.height} {volume.width}\n"
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(volume.values.astype("<f4").tobytes())


def read_volume(path: str | Path) -> SoftMaskVolume:
    data = Path(path).read_bytes()
    nl = data.find(b"\n")
    if nl < 0 or nl > 64:
        raise FormatError(f"{path}: missing SMV header")
    tokens = data[:nl].decode("ascii", errors="replace").split()
    if len(tokens) != 5 or tokens[0] != "SMV1":
        raise FormatError(f"{path}: bad SMV header {tokens!r}")
    try:
        t, c, h, w = (int(v) for v in tokens[1:])
    except ValueError:
        raise FormatError(f"{path}: non-integer SMV dimensions") from None
    if min(t, c, h, w) <= 0:
        raise FormatError(f"{path}: invalid SMV dimensions")
    payload = data[nl + 1 :]
    expected = 4 * t * c * h * w
    if len(payload) != expected:
        raise FormatError(f"{path}: payload is {len(payload)} bytes, expected {expected}")
    values = np.frombuffer(payload, dtype="<f4").reshape(t, c, h, w)
    if np.isnan(values).any():
        raise FormatError(f"{path}: NaN in volume payload")
    return SoftMaskVolume(values.copy())


# ---------------------------------------------------------------------------
# Sequence directories

def save_sequence(seq: VideoSequence, root: str | Path) -> None:
    root = Path(root)
    for sub in ("frames", "masks", "flow"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    for t, (frame, mask) in enumerate(zip(seq.frames, seq.masks)):
        write_frame_png(root / "frames" / f"{t:05d}.png", frame)
        write_mask_png(root / "masks" / f"{t:05d}.png", mask)
    for (i, j), flow in sorted(seq.flows.items()):
        write_flo(root / "flow" / f"{i:05d}_{j:05d}.flo", flow)
    meta = {"fps": seq.fps, "num_classes": seq.num_classes}
    (root / "meta.json").write_text(json.dumps(meta, sort_keys=True) + "\n")


def load_sequence(root: str | Path) -> VideoSequence:
    root = Path(root)
    meta_path = root / "meta.json"
    if not meta_path.is_file():
        raise FormatError(f"{root}: missing meta.json")
    meta = json.loads(meta_path.read_text())
    for key in ("fps", "num_classes"):
        if key not in meta:
            raise FormatError(f"{meta_path}: missing key {key!r}")
    fps = float(meta["fps"])
    num_classes = int(meta["num_classes"])

    frame_paths = sorted((root / "frames").glob("*.png"))
    mask_paths = sorted((root / "masks").glob("*.png"))
    if not frame_paths:
        raise FormatError(f"{root}: no frames found")
    if len(frame_paths) != len(mask_paths):
        raise FormatError(f"{root}: frame/mask count mismatch")
    frames = [read_frame_png(p) for p in frame_paths]
    masks = [read_mask_png(p, num_classes) for p in mask_paths]

    flows = {}
    flow_dir = root / "flow"
    if flow_dir.is_dir():
        for p in sorted(flow_dir.iterdir()):
            m = _FLOW_NAME.match(p.name)
            if not m:
                raise FormatError(f"{p}: flow files must be named %05d_%05d.flo")
            i, j = int(m.group(1)), int(m.group(2))
            flows[(i, j)] = read_flo(p)
    return VideoSequence(
        frames=tuple(frames),
        masks=tuple(masks),
        flows=flows,
        fps=fps,
        num_classes=num_classes,
    )


def load_masks(root: str | Path) -> tuple[list[LabelMask], int]:
    """Masks and class count from a sequence directory (frames not required)."""
    root = Path(root)
    meta = json.loads((root / "meta.json").read_text())
    num_classes = int(meta["num_classes"])
    paths = sorted((root / "masks").glob("*.png"))
    if not paths:
        raise FormatError(f"{root}: no masks found")
    return [read_mask_png(p, num_classes) for p in paths], num_classes


# ---------------------------------------------------------------------------
# Study CSVs

def read_ratings_csv(path: str | Path) -> RatingsTable:
    """Ratings CSV with header video_id,worker_id,rating[,accuracy_rank,consistency_rank]."""
    rows = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        required = {"video_id", "worker_id", "rating"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise FormatError(f"{path}: header must contain {sorted(required)}")
        for rec in reader:
            acc = rec.get("accuracy_rank") or None
            cons = rec.get("consistency_rank") or None
            try:
                rows.append(
                    Rating(
                        video_id=rec["video_id"],
                        worker_id=rec["worker_id"],
                        rating=float(rec["rating"]),
                        accuracy_rank=int(acc) if acc is not None else None,
                        consistency_rank=int(cons) if cons is not None else None,
                    )
                )
            except ValueError as e:
                raise FormatError(f"{path}: bad row {rec}: {e}") from None
    return RatingsTable(tuple(rows))


def read_measures_csv(path: str | Path) -> dict[str, dict[str, float]]:
    """Per-video measures CSV with header video_id,<measure>[,<measure>...]."""
    out: dict[str, dict[str, float]] = {}
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or "video_id" not in reader.fieldnames:
            raise FormatError(f"{path}: header must contain video_id")
        names = [c for c in reader.fieldnames if c != "video_id"]
        if not names:
            raise FormatError(f"{path}: no measure columns")
        for rec in reader:
            try:
                out[rec["video_id"]] = {n: float(rec[n]) for n in names}
            except (TypeError, ValueError):
                raise FormatError(f"{path}: bad row {rec}") from None
    return out
