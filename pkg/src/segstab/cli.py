"""Command-line interface.

Subcommands: ``measure``, ``postprocess``, ``corrupt``, ``synth``, ``eval``,
``study``. Exit codes: 0 on success, 1 on usage errors, 2 on data errors.
All outputs are deterministic given identical inputs, seeds, and
SEGSTAB_THREADS.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io as seg_io
from .corruption import CorruptionSpec, qualification_grid
from .measures import ConsistencyConfig, Normalization, e_cons, e_smooth, iou, recall
from .postprocess import WgfConfig, temporal_gaussian_smooth, wgf_3d
from .stats import aggregate_and_correlate, filter_workers
from .synth import SHAPES, make_occlusion_scene, make_translating_scene
from .types import SoftMaskVolume, VideoSequence, argmax_merge, one_hot_volume


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _write_json(path: str | Path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _parse_velocity(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("velocity must be 'vx,vy'")
    return float(parts[0]), float(parts[1])


def _parse_levels(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


# ---------------------------------------------------------------------------
# Subcommands

def _cmd_measure(args) -> None:
    seq = seg_io.load_sequence(args.sequence)
    cfg = ConsistencyConfig(
        window_k=args.window,
        normalization=Normalization(args.norm),
        alpha=args.alpha,
        beta=args.beta,
        literal_d_cat=args.literal_dcat,
    )
    report = e_cons(seq, cfg)
    smooth = e_smooth(seq, args.sigma_sec) if seq.num_frames >= 2 else None
    print(f"e_cons {report.e_cons!r}")
    if smooth is not None:
        print(f"e_smooth {smooth!r}")
    if args.json:
        _write_json(
            args.json,
            {
                "e_cons": report.e_cons,
                "e_smooth": smooth,
                "n_bd_median": report.n_bd_median,
                "n_nbg_total": report.n_nbg_total,
                "normalization": report.normalization.value,
                "window_k": cfg.window_k,
                "sigma_seconds": args.sigma_sec,
                "per_pair_terms": [[i, j, v] for i, j, v in report.per_pair_terms],
            },
        )
    if args.csv:
        lines = ["i,j,e_pair"] + [f"{i},{j},{v!r}" for i, j, v in report.per_pair_terms]
        Path(args.csv).write_text("\n".join(lines) + "\n")


def _load_volume_for(seq: VideoSequence, volume_path: str | None) -> SoftMaskVolume:
    if volume_path:
        volume = seg_io.read_volume(volume_path)
        if (volume.num_frames, volume.height, volume.width) != (seq.num_frames, seq.height, seq.width):
            raise ValueError("volume dimensions do not match sequence")
        return volume
    return one_hot_volume(list(seq.masks))


def _write_argmax_masks(volume: SoftMaskVolume, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for t in range(volume.num_frames):
        seg_io.write_mask_png(out / f"{t:05d}.png", argmax_merge(volume, t))


def _cmd_postprocess(args) -> None:
    seq = seg_io.load_sequence(args.sequence)
    volume = _load_volume_for(seq, args.volume)
    if args.filter == "wgf":
        cfg = WgfConfig(
            radius_x=args.radius_x,
            radius_y=args.radius_y,
            radius_t=args.radius_t,
            epsilon=args.epsilon,
            weight_floor=args.weight_floor,
        )
        result = wgf_3d(list(seq.frames), volume, cfg)
    else:
        result = temporal_gaussian_smooth(volume, args.sigma_frames)
    seg_io.write_volume(args.out, result)
    if args.masks_out:
        _write_argmax_masks(result, args.masks_out)


def _cmd_corrupt(args) -> None:
    seq = seg_io.load_sequence(args.sequence)
    erosion = tuple(int(v) for v in args.erosion_levels)
    jitter = tuple(float(v) for v in args.jitter_levels)
    cells = qualification_grid(seq, args.seed, erosion, jitter, args.grid_cells)
    out_root = Path(args.out)
    out_root.mkdir(parents=True, exist_ok=True)
    manifest = {
        "seed": args.seed,
        "grid_cells": args.grid_cells,
        "erosion_levels": list(erosion),
        "jitter_levels": list(jitter),
        "cells": [],
    }
    for cell in cells:
        name = f"a{cell.accuracy_rank}_c{cell.consistency_rank}"
        cell_seq = VideoSequence(
            frames=seq.frames,
            masks=cell.masks,
            flows=seq.flows,
            fps=seq.fps,
            num_classes=seq.num_classes,
        )
        seg_io.save_sequence(cell_seq, out_root / name)
        spec = CorruptionSpec(cell.erosion_px, cell.jitter_mag, args.seed, args.grid_cells)
        manifest["cells"].append(
            {
                "dir": name,
                "erosion_px": spec.erosion_px,
                "jitter_mag": spec.jitter_mag,
                "accuracy_rank": cell.accuracy_rank,
                "consistency_rank": cell.consistency_rank,
            }
        )
    _write_json(out_root / "manifest.json", manifest)


def _cmd_synth(args) -> None:
    if args.scene == "translating":
        seq = make_translating_scene(
            shape=args.shape,
            size=args.size,
            velocity=args.velocity,
            num_frames=args.frames,
            canvas=args.canvas,
            fps=args.fps,
            window=args.window,
        )
    else:
        seq = make_occlusion_scene(num_frames=args.frames, canvas=args.canvas, fps=args.fps, window=args.window)
    seg_io.save_sequence(seq, args.out)


def _cmd_eval(args) -> None:
    pred_masks, pred_classes = seg_io.load_masks(args.pred)
    gt_masks, gt_classes = seg_io.load_masks(args.gt)
    if len(pred_masks) != len(gt_masks):
        raise ValueError("prediction and ground-truth mask counts differ")
    num_classes = max(pred_classes, gt_classes)
    per_class = {}
    for c in range(1, num_classes):
        ious = [iou(p, g, c) for p, g in zip(pred_masks, gt_masks)]
        recs = [recall(p, g, c) for p, g in zip(pred_masks, gt_masks)]
        per_class[str(c)] = {"iou": float(np.mean(ious)), "recall": float(np.mean(recs))}
    if not per_class:
        raise ValueError("no non-background classes to evaluate")
    mean_iou = float(np.mean([v["iou"] for v in per_class.values()]))
    mean_recall = float(np.mean([v["recall"] for v in per_class.values()]))
    print(f"mean_iou {mean_iou!r}")
    print(f"mean_recall {mean_recall!r}")
    if args.json:
        _write_json(args.json, {"per_class": per_class, "mean_iou": mean_iou, "mean_recall": mean_recall})


def _cmd_study(args) -> None:
    table = seg_io.read_ratings_csv(args.ratings)
    measures = seg_io.read_measures_csv(args.measures)
    if table.qualification_rows():
        kept = filter_workers(table, args.min_qualification)
        table = table.restrict_workers(kept)
        print(f"qualified_workers {len(kept)}")
    report = aggregate_and_correlate(table, measures, args.agreement_cutoff)
    for name in sorted(report.unfiltered):
        u, f = report.unfiltered[name], report.filtered[name]
        print(f"rho_{name} {u.rho!r} filtered {f.rho!r}")
    if args.json:
        _write_json(args.json, report.as_dict())


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="segstab", description="Temporal stability tooling for video segmentation masks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("measure", help="consistency/smoothness measures for a sequence directory")
    p.add_argument("sequence")
    p.add_argument("--K", dest="window", type=int, default=3, help="temporal window size")
    p.add_argument("--norm", choices=[n.value for n in Normalization], default=Normalization.BOUNDARY_MEDIAN.value)
    p.add_argument("--sigma-sec", type=float, default=0.15, help="smoothness blur sigma in seconds")
    p.add_argument("--alpha", type=float, default=0.01, help="occlusion check relative threshold")
    p.add_argument("--beta", type=float, default=0.5, help="occlusion check absolute threshold")
    p.add_argument("--literal-dcat", action="store_true", help="score same-label pixels instead of disagreements")
    p.add_argument("--json", help="write the full report as JSON")
    p.add_argument("--csv", help="write per-pair terms as CSV")
    p.set_defaults(func=_cmd_measure)

    p = sub.add_parser("postprocess", help="filter a soft mask volume")
    psub = p.add_subparsers(dest="filter", required=True)
    for kind in ("wgf", "gauss"):
        q = psub.add_parser(kind)
        q.add_argument("sequence")
        q.add_argument("--volume", help="input SMV volume (default: one-hot of the sequence masks)")
        q.add_argument("--out", required=True, help="output SMV path")
        q.add_argument("--masks-out", help="also write argmax label masks to this directory")
        if kind == "wgf":
            q.add_argument("--radius-x", type=int, default=8)
            q.add_argument("--radius-y", type=int, default=8)
            q.add_argument("--radius-t", type=int, default=2)
            q.add_argument("--epsilon", type=float, default=1e-2)
            q.add_argument("--weight-floor", type=float, default=0.05)
        else:
            q.add_argument("--sigma-frames", type=float, required=True)
        q.set_defaults(func=_cmd_postprocess)

    p = sub.add_parser("corrupt", help="write the 3x3 qualification corruption grid")
    p.add_argument("sequence")
    p.add_argument("out")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid-cells", type=int, default=32)
    p.add_argument("--erosion-levels", type=_parse_levels, default=(0, 10, 20))
    p.add_argument("--jitter-levels", type=_parse_levels, default=(0.0, 4.0, 8.0))
    p.set_defaults(func=_cmd_corrupt)

    p = sub.add_parser("synth", help="generate a synthetic sequence directory")
    p.add_argument("out")
    p.add_argument("--scene", choices=("translating", "occlusion"), default="translating")
    p.add_argument("--shape", choices=SHAPES, default="square")
    p.add_argument("--size", type=float, default=32)
    p.add_argument("--velocity", type=_parse_velocity, default=(3.0, 0.0))
    p.add_argument("--frames", type=int, default=8)
    p.add_argument("--canvas", type=int, default=128)
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--window", type=int, default=3)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("eval", help="IoU/recall of predicted masks against ground truth")
    p.add_argument("pred")
    p.add_argument("gt")
    p.add_argument("--json")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("study", help="correlate human ratings with the measures")
    p.add_argument("--ratings", required=True)
    p.add_argument("--measures", required=True)
    p.add_argument("--agreement-cutoff", type=float, default=1.0)
    p.add_argument("--min-qualification", type=int, default=3)
    p.add_argument("--json")
    p.set_defaults(func=_cmd_study)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    try:
        args.func(args)
    except (ValueError, OSError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
