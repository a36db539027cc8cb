"""Detection-quality metrics: AUROC for per-frame articulation recognition,
AP under combined box/axis/normal criteria, and the EA line-similarity score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .raster import bbox_iou

AP_VARIANTS = ("bbox", "bbox+axis", "bbox+axis+normal")


@dataclass(frozen=True)
class EvalThresholds:
    bbox_iou: float = 0.5
    ea_score: float = 0.5
    normal_deg: float = 30.0

    def __post_init__(self):
        if not (0.0 < self.bbox_iou <= 1.0 and 0.0 < self.ea_score <= 1.0):
            raise ValueError("IoU and EA thresholds must be in (0, 1]")
        if not 0.0 < self.normal_deg <= 180.0:
            raise ValueError("normal threshold must be in (0, 180] degrees")


@dataclass(frozen=True)
class PredInstance:
    """One scored prediction for AP: a per-frame box with optional axis
    segment (pixels, already clipped to the image) and plane normal."""

    clip_id: str
    frame: int
    category: str
    confidence: float
    box: tuple
    width: int
    height: int
    axis_segment: np.ndarray | None = None
    normal: np.ndarray | None = None


@dataclass(frozen=True)
class GTInstance:
    clip_id: str
    frame: int
    category: str
    box: tuple
    width: int
    height: int
    axis_segment: np.ndarray | None = None
    normal: np.ndarray | None = None


@dataclass(frozen=True)
class APResult:
    variant: str
    category: str
    ap: float
    precision: np.ndarray
    recall: np.ndarray
    num_gt: int


def ea_score(seg_a, seg_b, width, height):
    """Line agreement of two segments in the unit-normalized image:
    the acute-angle term times the midpoint-distance term, squared.
    1 when the segments coincide, 0 when perpendicular or a full diagonal
    apart."""
    a = np.asarray(seg_a, dtype=float) / [width, height]
    b = np.asarray(seg_b, dtype=float) / [width, height]
    da = a[1] - a[0]
    db = b[1] - b[0]
    la = np.linalg.norm(da)
    lb = np.linalg.norm(db)
    if la < 1e-12 or lb < 1e-12:
        raise ValueError("zero-length segment")
    cosang = min(1.0, abs(float(da @ db)) / (la * lb))
    dtheta = math.acos(cosang)
    d = float(np.linalg.norm((a[0] + a[1]) / 2 - (b[0] + b[1]) / 2))
    s_theta = max(0.0, 1.0 - dtheta / (math.pi / 2.0))
    s_dist = max(0.0, 1.0 - d / math.sqrt(2.0))
    return (s_theta * s_dist) ** 2


def normal_angle_error(n_pred, n_gt):
    """Angle between plane normals in degrees, sign-insensitive (planes are
    canonicalized, so n and -n describe the same surface)."""
    a = np.asarray(n_pred, dtype=float)
    b = np.asarray(n_gt, dtype=float)
    if abs(np.linalg.norm(a) - 1.0) > 1e-6 or abs(np.linalg.norm(b) - 1.0) > 1e-6:
        raise ValueError("normals must be unit vectors")
    return math.degrees(math.acos(min(1.0, abs(float(a @ b)))))


def _matches(det, gt, thresholds, variant):
    iou = bbox_iou(det.box, gt.box)
    if iou < thresholds.bbox_iou:
        return None
    if variant in ("bbox+axis", "bbox+axis+normal") and gt.axis_segment is not None:
        # GT without a visible axis waives only this criterion
        if det.axis_segment is None:
            return None
        if ea_score(det.axis_segment, gt.axis_segment, gt.width, gt.height) < (
            thresholds.ea_score
        ):
            return None
    if variant == "bbox+axis+normal":
        if det.normal is None or gt.normal is None:
            return None
        if normal_angle_error(det.normal, gt.normal) > thresholds.normal_deg:
            return None
    return iou


def evaluate_ap(detections, ground_truths, thresholds, variant, category):
    """Average precision for one criteria variant and category.

    Detections are consumed in descending confidence; each may claim one
    unclaimed ground truth in its clip/frame/category that passes every
    criterion of the variant (claiming the highest-box-IoU candidate).
    AP integrates the precision envelope over all recall points.
    """
    if variant not in AP_VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    gts = [g for g in ground_truths if g.category == category]
    dets = [d for d in detections if d.category == category]
    dets = sorted(dets, key=lambda d: -d.confidence)  # stable: ties keep input order

    by_frame = {}
    for gi, g in enumerate(gts):
        by_frame.setdefault((g.clip_id, g.frame), []).append(gi)

    claimed = set()
    tp = np.zeros(len(dets))
    for di, det in enumerate(dets):
        best_gi = -1
        best_iou = -1.0
        for gi in by_frame.get((det.clip_id, det.frame), ()):
            if gi in claimed:
                continue
            iou = _matches(det, gts[gi], thresholds, variant)
            if iou is not None and iou > best_iou:
                best_iou = iou
                best_gi = gi
        if best_gi >= 0:
            claimed.add(best_gi)
            tp[di] = 1.0

    num_gt = len(gts)
    tp_cum = np.cumsum(tp)
    fp_cum = np.cumsum(1.0 - tp)
    denom = tp_cum + fp_cum
    precision = np.divide(tp_cum, denom, out=np.zeros_like(tp_cum), where=denom > 0)
    recall = tp_cum / num_gt if num_gt > 0 else np.zeros_like(tp_cum)

    mrec = np.concatenate([[0.0], recall])
    mpre = np.concatenate([[0.0], precision])
    for i in range(len(mpre) - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    ap = float(np.sum((mrec[1:] - mrec[:-1]) * mpre[1:])) if num_gt > 0 else 0.0
    return APResult(
        variant=variant,
        category=category,
        ap=ap,
        precision=precision,
        recall=recall,
        num_gt=num_gt,
    )


def evaluate_auroc(frame_scores, frame_labels):
    """Area under the ROC curve via the rank statistic; ties count half."""
    scores = np.asarray(frame_scores, dtype=float)
    labels = np.asarray(frame_labels, dtype=bool)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be aligned 1-D sequences")
    npos = int(labels.sum())
    nneg = int((~labels).sum())
    if npos == 0 or nneg == 0:
        raise ValueError("AUROC needs at least one positive and one negative")
    ranks = rankdata(scores)
    u = float(ranks[labels].sum()) - npos * (npos + 1) / 2.0
    return u / (npos * nneg)
