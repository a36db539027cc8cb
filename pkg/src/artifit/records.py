"""JSONL wire formats for detections, ground truth, and fit results, plus
atomic file IO. Keys are emitted in a fixed documented order and floats are
written at full precision, so identical inputs produce identical bytes.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .evaluation import GTInstance, PredInstance
from .geometry import Plane, ProjectedAxis, clip_line_to_image
from .raster import rle_decode, rle_encode
from .tracking import Detection


class DataError(Exception):
    """Input data invalid in a way the caller should surface (exit code 2)."""


def _atomic_write_bytes(path, payload):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.chmod(tmp, 0o644)  # mkstemp defaults to 0600
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_bytes(path, payload):
    _atomic_write_bytes(path, payload)


def write_text(path, text):
    _atomic_write_bytes(path, text.encode("utf-8"))


def write_jsonl(path, records):
    lines = [json.dumps(rec, separators=(",", ":")) for rec in records]
    payload = ("\n".join(lines) + "\n") if lines else ""
    _atomic_write_bytes(path, payload.encode("utf-8"))


def read_jsonl(path):
    """Yield (line_number, parsed) pairs; raises DataError on unreadable
    files, returns parse problems inline as (line_number, DataError)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    out = []
    for lineno, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            out.append((lineno, json.loads(line)))
        except json.JSONDecodeError as exc:
            out.append((lineno, DataError(f"line {lineno}: invalid JSON: {exc}")))
    return out


def mask_to_rle_dict(mask):
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    return {"width": w, "height": h, "counts": rle_encode(mask)}


def rle_dict_to_mask(d):
    return rle_decode(d["counts"], d["width"], d["height"])


def axis_to_dict(axis):
    if axis is None:
        return None
    return {"theta": float(axis.theta), "p": float(axis.p)}


def axis_from_dict(d):
    if d is None:
        return None
    return ProjectedAxis(theta=float(d["theta"]), p=float(d["p"]))


def detection_to_record(det):
    return {
        "clip_id": det.clip_id,
        "frame": int(det.frame),
        "time_s": float(det.time_s),
        "category": det.category,
        "score": float(det.score),
        "box": [float(v) for v in det.box],
        "mask_rle": mask_to_rle_dict(det.mask),
        "normal": [float(v) for v in det.plane.normal],
        "offset_m": float(det.plane.offset),
        "axis": axis_to_dict(det.axis2d),
    }


def detection_from_record(rec):
    try:
        mask = rle_dict_to_mask(rec["mask_rle"])
        return Detection(
            frame=int(rec["frame"]),
            time_s=float(rec["time_s"]),
            category=rec["category"],
            score=float(rec["score"]),
            mask=mask,
            box=tuple(float(v) for v in rec["box"]),
            plane=Plane(rec["normal"], float(rec["offset_m"])),
            axis2d=axis_from_dict(rec.get("axis")),
            clip_id=rec.get("clip_id", ""),
        )
    except DataError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(str(exc)) from exc


def load_detections(path, strict=False):
    """Decode a detections JSONL file.

    Returns (detections, diagnostics). In strict mode the first bad line
    raises DataError instead of being skipped.
    """
    dets = []
    problems = []
    for lineno, item in read_jsonl(path):
        if isinstance(item, DataError):
            problems.append(str(item))
        else:
            try:
                dets.append(detection_from_record(item))
            except DataError as exc:
                problems.append(f"line {lineno}: {exc}")
    if strict and problems:
        raise DataError("; ".join(problems))
    return dets, problems


def gt_to_record(clip_id, gt):
    return {
        "clip_id": clip_id,
        "frame": int(gt.frame),
        "articulating": bool(gt.articulating),
        "category": gt.category,
        "box": [float(v) for v in gt.box],
        "mask_rle": mask_to_rle_dict(gt.mask),
        "normal": [float(v) for v in gt.normal],
        "axis": axis_to_dict(gt.axis2d),
        "alpha": float(gt.alpha),
    }


def load_gt_records(path, strict=False):
    """Decode a ground-truth JSONL file into plain dicts with the mask
    expanded; invalid lines are reported like load_detections."""
    rows = []
    problems = []
    for lineno, item in read_jsonl(path):
        if isinstance(item, DataError):
            problems.append(str(item))
            continue
        try:
            rows.append(
                {
                    "clip_id": item["clip_id"],
                    "frame": int(item["frame"]),
                    "articulating": bool(item["articulating"]),
                    "category": item["category"],
                    "box": tuple(float(v) for v in item["box"]),
                    "mask": rle_dict_to_mask(item["mask_rle"]),
                    "width": int(item["mask_rle"]["width"]),
                    "height": int(item["mask_rle"]["height"]),
                    "normal": np.asarray(item["normal"], dtype=float),
                    "axis2d": axis_from_dict(item.get("axis")),
                    "alpha": float(item["alpha"]),
                }
            )
        except (KeyError, TypeError, ValueError) as exc:
            problems.append(f"line {lineno}: {exc}")
    if strict and problems:
        raise DataError("; ".join(problems))
    return rows, problems


def _axis_segment(axis, width, height):
    if axis is None:
        return None
    return clip_line_to_image(axis, width, height)


def gt_rows_to_instances(rows):
    out = []
    for r in rows:
        out.append(
            GTInstance(
                clip_id=r["clip_id"],
                frame=r["frame"],
                category=r["category"],
                box=r["box"],
                width=r["width"],
                height=r["height"],
                axis_segment=_axis_segment(r["axis2d"], r["width"], r["height"]),
                normal=r["normal"],
            )
        )
    return out


def detections_to_instances(detections):
    out = []
    for d in detections:
        h, w = d.mask.shape
        out.append(
            PredInstance(
                clip_id=d.clip_id,
                frame=d.frame,
                category=d.category,
                confidence=d.score,
                box=d.box,
                width=w,
                height=h,
                axis_segment=_axis_segment(d.axis2d, w, h),
                normal=d.plane.normal,
            )
        )
    return out


def fit_record_frames_to_instances(rec):
    """PredInstances for every per-frame entry of one fits record."""
    out = []
    w = int(rec["image"]["width"])
    h = int(rec["image"]["height"])
    for fr in rec["frames"]:
        axis = axis_from_dict(fr.get("axis"))
        normal = fr.get("normal")
        out.append(
            PredInstance(
                clip_id=rec["clip_id"],
                frame=int(fr["frame"]),
                category=rec["category"],
                confidence=float(fr["confidence"]),
                box=tuple(float(v) for v in fr["box"]),
                width=w,
                height=h,
                axis_segment=_axis_segment(axis, w, h),
                normal=None if normal is None else np.asarray(normal, dtype=float),
            )
        )
    return out


def load_fit_records(path, strict=False):
    rows = []
    problems = []
    for lineno, item in read_jsonl(path):
        if isinstance(item, DataError):
            problems.append(str(item))
            continue
        if not isinstance(item, dict) or "frames" not in item:
            problems.append(f"line {lineno}: not a fit record")
            continue
        rows.append(item)
    if strict and problems:
        raise DataError("; ".join(problems))
    return rows, problems
