"""Command line entry point.

Subcommands:
  synth   generate a synthetic clip (ground truth + detections)
  track   link per-frame detections into tracks
  fit     fit an articulation model per track and classify it
  eval    score detections or fits against ground truth
  render  draw per-frame overlay PNGs

Exit codes: 0 success, 1 bad usage, 2 invalid data or config.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections import defaultdict

import numpy as np

from .config import RunConfig, config_from_dict, dump_default_config
from .evaluation import AP_VARIANTS, evaluate_ap, evaluate_auroc
from .fitting import NoFit, fit_track
from .geometry import (
    DegenerateGeometryError,
    Plane,
    default_intrinsics_for,
    project_axis3d,
    transform_for,
)
from .records import (
    DataError,
    axis_to_dict,
    detection_to_record,
    detections_to_instances,
    fit_record_frames_to_instances,
    gt_rows_to_instances,
    gt_to_record,
    load_detections,
    load_fit_records,
    load_gt_records,
    write_bytes,
    write_jsonl,
    write_text,
)
from .render import image_png_bytes, render_frame
from .synth import generate_sequence, scene_config_from_dict, scene_preset
from .tracking import greedy_track, group_by_frame

PRESETS = ("door", "drawer", "static-door")


class _Parser(argparse.ArgumentParser):
    # usage problems are exit code 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _frames_type(spec):
    try:
        if ":" in spec:
            a, b = spec.split(":", 1)
            lo = int(a) if a else None
            hi = int(b) if b else None
        else:
            lo = int(spec)
            hi = lo + 1
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected FRAME or LO:HI, got {spec!r}"
        )
    return (lo, hi)


def _in_frame_range(frame, rng):
    if rng is None:
        return True
    lo, hi = rng
    return (lo is None or frame >= lo) and (hi is None or frame < hi)


def build_parser():
    parser = _Parser(
        prog="artifit",
        description="Detect and measure articulated motion in tracked "
        "planar detections.",
    )
    parser.add_argument(
        "--dump-config",
        action="store_true",
        help="print the default configuration as JSON and exit",
    )
    sub = parser.add_subparsers(dest="cmd")

    p = sub.add_parser("synth", help="generate a synthetic clip")
    p.add_argument("--preset", default="door", choices=PRESETS)
    p.add_argument("--config", help="JSON file of scene overrides")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output directory (default $ARTIFIT_OUT or .)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("track", help="link detections into tracks")
    p.add_argument("--detections", required=True)
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--strict", action="store_true",
                   help="fail on the first malformed input line")
    p.add_argument("--out")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("fit", help="fit articulation models per track")
    p.add_argument("--detections", required=True)
    p.add_argument("--config")
    p.add_argument("--strict", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="score predictions against ground truth")
    p.add_argument("--gt", required=True)
    p.add_argument("--fits", help="fits JSONL (from the fit subcommand)")
    p.add_argument("--detections", help="raw detections JSONL")
    p.add_argument("--config")
    p.add_argument("--strict", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("render", help="write overlay PNGs")
    p.add_argument("--gt")
    p.add_argument("--detections")
    p.add_argument("--fits")
    p.add_argument("--frames", type=_frames_type,
                   help="frame index or LO:HI range (HI exclusive)")
    p.add_argument("--strict", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_render)

    return parser


def _out_dir(args):
    return args.out or os.environ.get("ARTIFIT_OUT") or "."


def _load_run_config(args):
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            return config_from_dict(json.load(fh))
    return RunConfig()


def _report(problems):
    for msg in problems:
        print(f"warning: {msg}", file=sys.stderr)


def _by_clip(detections):
    clips = defaultdict(list)
    for det in detections:
        clips[det.clip_id].append(det)
    return clips


def cmd_synth(args):
    base = scene_preset(args.preset)
    overrides = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            overrides = json.load(fh)
    config = scene_config_from_dict(overrides, base=base)
    gt_frames, det_frames = generate_sequence(config, args.seed)
    out = _out_dir(args)
    write_jsonl(
        os.path.join(out, "gt.jsonl"),
        [gt_to_record(config.clip_id, gt) for gt in gt_frames],
    )
    detections = [d for frame in det_frames for d in frame]
    write_jsonl(
        os.path.join(out, "detections.jsonl"),
        [detection_to_record(d) for d in detections],
    )
    print(
        f"wrote {len(gt_frames)} ground-truth frames and "
        f"{len(detections)} detections to {out}"
    )
    return 0


def cmd_track(args):
    config = _load_run_config(args)
    detections, problems = load_detections(args.detections, strict=args.strict)
    _report(problems)
    records = []
    n_tracks = 0
    for clip_id in sorted(_by_clip(detections)):
        frames = group_by_frame(_by_clip(detections)[clip_id])
        tracks = greedy_track(
            frames, iou_threshold=config.tracking_iou,
            metric=config.tracking_metric,
        )
        n_tracks += len(tracks)
        for track in tracks:
            for det in track.detections:
                rec = detection_to_record(det)
                records.append(
                    {"clip_id": rec.pop("clip_id"), "track_id": track.id, **rec}
                )
    out = _out_dir(args)
    write_jsonl(os.path.join(out, "tracks.jsonl"), records)
    print(f"linked {len(detections)} detections into {n_tracks} tracks")
    return 0


def _raw_frame_entry(det):
    return {
        "frame": int(det.frame),
        "time_s": float(det.time_s),
        "confidence": float(det.score),
        "box": [float(v) for v in det.box],
        "alpha": None,
        "score": None,
        "axis": axis_to_dict(det.axis2d),
        "normal": [float(v) for v in det.plane.normal],
    }


def _model_frame_entries(track, fit, camera):
    hyp = fit.hypothesis
    try:
        axis_rec = axis_to_dict(project_axis3d(camera, hyp.axis3d))
    except DegenerateGeometryError:
        axis_rec = None
    anchor = hyp.plane_segment[0][0]
    entries = []
    for det, ff in zip(track.detections, fit.frame_fits):
        tf = transform_for(hyp.axis3d, ff.alpha)
        normal = tf.rotation @ hyp.plane.normal
        plane = Plane(normal, float(normal @ tf.apply(anchor)))
        entries.append(
            {
                "frame": int(det.frame),
                "time_s": float(det.time_s),
                "confidence": float(det.score),
                "box": [float(v) for v in det.box],
                "alpha": float(ff.alpha),
                "score": float(ff.score),
                "axis": axis_rec,
                "normal": [float(v) for v in plane.normal],
            }
        )
    return entries


def _fit_record(clip_id, track, camera, fit=None, reason=None):
    rec = {
        "clip_id": clip_id,
        "track_id": track.id,
        "category": track.category,
        "articulating": None,
        "reason": reason,
        "reference_frame": None,
        "axis3d": None,
        "plane": None,
        "motion": None,
        "mean_score": None,
        "image": {"width": camera.width, "height": camera.height},
        "frames": [_raw_frame_entry(d) for d in track.detections],
    }
    if fit is not None:
        hyp = fit.hypothesis
        axis = hyp.axis3d
        rec.update(
            articulating=bool(fit.articulating),
            reference_frame=int(hyp.reference_frame),
            axis3d={
                "kind": axis.kind,
                "point": [float(v) for v in axis.point],
                "direction": [float(v) for v in axis.direction],
            },
            plane={
                "normal": [float(v) for v in hyp.plane.normal],
                "offset_m": float(hyp.plane.offset),
            },
            motion={
                "slope_k": float(fit.motion.slope_k),
                "intercept": float(fit.motion.intercept),
                "r_squared": float(fit.motion.r_squared),
            },
            mean_score=float(fit.mean_score),
            frames=_model_frame_entries(track, fit, camera),
        )
    return rec


def cmd_fit(args):
    config = _load_run_config(args)
    detections, problems = load_detections(args.detections, strict=args.strict)
    _report(problems)
    records = []
    clips = _by_clip(detections)
    for clip_id in sorted(clips):
        clip_dets = clips[clip_id]
        if config.camera is not None:
            camera = config.camera
        else:
            h, w = clip_dets[0].mask.shape
            camera = default_intrinsics_for(w, h)
        tracks = greedy_track(
            group_by_frame(clip_dets),
            iou_threshold=config.tracking_iou,
            metric=config.tracking_metric,
        )
        for track in tracks:
            if len(track.detections) < config.min_track_length:
                records.append(
                    _fit_record(clip_id, track, camera, reason="too_short")
                )
                continue
            result = fit_track(
                track,
                camera,
                rotation_grid=config.rotation_grid,
                translation_grid=config.translation_grid,
                thresholds=config.classify_thresholds(),
            )
            if isinstance(result, NoFit):
                records.append(
                    _fit_record(clip_id, track, camera, reason=result.reason)
                )
            else:
                records.append(_fit_record(clip_id, track, camera, fit=result))
    out = _out_dir(args)
    write_jsonl(os.path.join(out, "fits.jsonl"), records)
    n_pos = sum(1 for r in records if r["articulating"] is True)
    print(
        f"fit {len(records)} tracks ({n_pos} articulating) "
        f"from {len(detections)} detections"
    )
    return 0


def cmd_eval(args):
    if (args.fits is None) == (args.detections is None):
        raise DataError("pass exactly one of --fits or --detections")
    config = _load_run_config(args)
    thresholds = config.eval
    gt_rows, problems = load_gt_records(args.gt, strict=args.strict)
    _report(problems)
    if not gt_rows:
        raise DataError("ground truth file has no usable rows")
    gts = gt_rows_to_instances(gt_rows)

    frame_scores = {}
    if args.fits is not None:
        fit_rows, problems = load_fit_records(args.fits, strict=args.strict)
        _report(problems)
        preds = [
            inst
            for rec in fit_rows
            for inst in fit_record_frames_to_instances(rec)
        ]
        for rec in fit_rows:
            if rec.get("articulating") is not True:
                continue
            for fr in rec["frames"]:
                key = (rec["clip_id"], int(fr["frame"]))
                score = float(fr["confidence"])
                frame_scores[key] = max(frame_scores.get(key, 0.0), score)
    else:
        dets, problems = load_detections(args.detections, strict=args.strict)
        _report(problems)
        preds = detections_to_instances(dets)
        for det in dets:
            key = (det.clip_id, int(det.frame))
            frame_scores[key] = max(
                frame_scores.get(key, 0.0), float(det.score)
            )

    # frame-level articulation detection: label per (clip, frame) from GT
    labels_by_key = {}
    for row in gt_rows:
        key = (row["clip_id"], row["frame"])
        labels_by_key[key] = labels_by_key.get(key, False) or row["articulating"]
    keys = sorted(labels_by_key)
    labels = np.array([labels_by_key[k] for k in keys], dtype=bool)
    scores = np.array([frame_scores.get(k, 0.0) for k in keys], dtype=float)
    n_pos = int(labels.sum())
    n_neg = int(labels.size - n_pos)
    auroc = None
    if n_pos > 0 and n_neg > 0:
        auroc = evaluate_auroc(scores, labels)

    ap_table = {}
    for category in ("rotation", "translation"):
        row = {"num_gt": sum(1 for g in gts if g.category == category)}
        for variant in AP_VARIANTS:
            result = evaluate_ap(
                preds, gts, thresholds, variant=variant, category=category
            )
            row[variant] = result.ap
        ap_table[category] = row

    report = {
        "thresholds": {
            "bbox_iou": thresholds.bbox_iou,
            "ea_score": thresholds.ea_score,
            "normal_deg": thresholds.normal_deg,
        },
        "num_frames": {"positive": n_pos, "negative": n_neg},
        "auroc": auroc,
        "ap": ap_table,
    }
    out = _out_dir(args)
    write_text(
        os.path.join(out, "metrics.json"), json.dumps(report, indent=2) + "\n"
    )
    auroc_txt = "undefined" if auroc is None else f"{auroc:.4f}"
    print(f"AUROC {auroc_txt} over {n_pos} positive / {n_neg} negative frames")
    for category, row in ap_table.items():
        cells = " ".join(f"{v}={row[v]:.4f}" for v in AP_VARIANTS)
        print(f"AP {category} (n_gt={row['num_gt']}): {cells}")
    return 0


def cmd_render(args):
    if args.gt is None and args.detections is None and args.fits is None:
        raise DataError("pass at least one of --gt, --detections, --fits")
    gt_by_key = defaultdict(list)
    det_by_key = defaultdict(list)
    overlay_by_key = defaultdict(list)
    sizes = {}

    if args.gt:
        gt_rows, problems = load_gt_records(args.gt, strict=args.strict)
        _report(problems)
        for row in gt_rows:
            key = (row["clip_id"], row["frame"])
            gt_by_key[key].append(row)
            sizes.setdefault(row["clip_id"], (row["width"], row["height"]))
    if args.detections:
        dets, problems = load_detections(args.detections, strict=args.strict)
        _report(problems)
        for det in dets:
            h, w = det.mask.shape
            det_by_key[(det.clip_id, det.frame)].append(det)
            sizes.setdefault(det.clip_id, (w, h))
    if args.fits:
        fit_rows, problems = load_fit_records(args.fits, strict=args.strict)
        _report(problems)
        for rec in fit_rows:
            sizes.setdefault(
                rec["clip_id"],
                (int(rec["image"]["width"]), int(rec["image"]["height"])),
            )
            for fr in rec["frames"]:
                overlay_by_key[(rec["clip_id"], int(fr["frame"]))].append(
                    {
                        "category": rec["category"],
                        "box": fr["box"],
                        "axis": fr.get("axis"),
                    }
                )

    keys = sorted(set(gt_by_key) | set(det_by_key) | set(overlay_by_key))
    keys = [k for k in keys if _in_frame_range(k[1], args.frames)]
    if not keys:
        raise DataError("no frames matched the inputs and --frames selection")
    out = _out_dir(args)
    for clip_id, frame in keys:
        width, height = sizes[clip_id]
        img = render_frame(
            width,
            height,
            gt_rows=gt_by_key.get((clip_id, frame), ()),
            dets=det_by_key.get((clip_id, frame), ()),
            fit_overlays=overlay_by_key.get((clip_id, frame), ()),
        )
        safe_clip = clip_id.replace(os.sep, "_") or "clip"
        path = os.path.join(out, f"{safe_clip}_{frame:04d}.png")
        write_bytes(path, image_png_bytes(img))
    print(f"rendered {len(keys)} frames to {out}")
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.dump_config:
        sys.stdout.write(dump_default_config())
        return 0
    if args.cmd is None:
        parser.error("a subcommand is required (synth, track, fit, eval, render)")
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
