"""Temporal articulation fitting: hypothesize a 3D plane segment and axis
from a reference frame, grid-search the per-frame articulation degree that
maximizes reprojection IoU, fit a linear motion model, and classify.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    Axis3D,
    DegenerateGeometryError,
    Plane,
    backproject_to_plane,
    lift_rotation_axis,
    lift_translation_axis,
    project_points,
    transform_for,
)
from .raster import mask_to_boundary_polygon, rings_mask_iou

NEAR_PLANE_M = 0.01


@dataclass(frozen=True)
class GridSpec:
    """Signed search grid: every integer multiple of `step` inside [lo, hi],
    which always includes 0."""

    lo: float
    hi: float
    step: float

    def __post_init__(self):
        if not (self.step > 0 and self.lo <= 0.0 <= self.hi):
            raise ValueError("grid must have positive step and straddle 0")

    def values(self):
        k0 = math.ceil(self.lo / self.step - 1e-9)
        k1 = math.floor(self.hi / self.step + 1e-9)
        return np.arange(k0, k1 + 1) * self.step

    def search_order(self):
        """Grid values ordered by increasing |alpha| so a first-strict-max
        scan lands on the smallest magnitude among tied scores."""
        vals = self.values()
        return vals[np.lexsort((vals, np.abs(vals)))]


ROTATION_GRID = GridSpec(lo=-2.618, hi=2.618, step=math.pi / 180.0)
TRANSLATION_GRID = GridSpec(lo=-1.0, hi=1.0, step=0.01)


@dataclass(frozen=True)
class ClassifyThresholds:
    r_squared: float = 0.4
    slope: float = 0.1
    score_floor: float = 0.5


@dataclass(frozen=True)
class ArticulationHypothesis:
    """A 3D explanation anchored at one reference frame: the plane segment
    polygons (meters, on the reference plane) and the articulation axis."""

    reference_frame: int
    plane_segment: list  # list of (N, 3) vertex arrays
    axis3d: Axis3D
    category: str
    plane: Plane

    def __post_init__(self):
        kind = self.axis3d.kind
        if kind != self.category:
            raise ValueError(f"axis kind {kind!r} does not match category")


@dataclass(frozen=True)
class FrameFit:
    frame: int
    alpha: float
    score: float


@dataclass(frozen=True)
class MotionModel:
    slope_k: float
    intercept: float
    r_squared: float


@dataclass(frozen=True)
class ArticulationFit:
    hypothesis: ArticulationHypothesis
    frame_fits: list
    motion: MotionModel
    articulating: bool
    mean_score: float


@dataclass(frozen=True)
class NoFit:
    """Returned when every hypothesis is degenerate (no liftable axis or
    segment at any reference frame)."""

    reason: str = "degenerate"


def clip_polygon_near(vertices, znear=NEAR_PLANE_M):
    """Sutherland-Hodgman clip of a 3D polygon against z >= znear."""
    pts = np.asarray(vertices, dtype=float)
    n = len(pts)
    out = []
    for i in range(n):
        a = pts[i]
        b = pts[(i + 1) % n]
        da = a[2] - znear
        db = b[2] - znear
        if da >= 0:
            out.append(a)
            if db < 0:
                out.append(a + (b - a) * (da / (da - db)))
        elif db >= 0:
            out.append(a + (b - a) * (da / (da - db)))
    return np.asarray(out, dtype=float)


def _segment_rings(K, transform, segment):
    """Transformed, near-clipped, projected 2D rings of a hypothesis segment."""
    rings = []
    for poly in segment:
        moved = transform.apply(poly)
        clipped = clip_polygon_near(moved)
        if len(clipped) >= 3:
            rings.append(project_points(K, clipped))
    return rings


def _score(mask_t, mask_area, K, transform, segment):
    rings = _segment_rings(K, transform, segment)
    if not rings:
        return 0.0
    return rings_mask_iou(rings, mask_t, target_area=mask_area)


def reprojection_score(mask_t, K, transform, segment):
    """IoU between an observed mask and the hypothesis segment pushed
    through a rigid transform and the camera. Segments entirely behind the
    near plane score 0."""
    mask_t = np.asarray(mask_t, dtype=bool)
    return _score(mask_t, int(mask_t.sum()), K, transform, segment)


def _argmax_alpha(mask_t, area, K, hypothesis, order):
    best_alpha = 0.0
    best_score = -1.0
    for alpha in order:
        tf = transform_for(hypothesis.axis3d, float(alpha))
        s = _score(mask_t, area, K, tf, hypothesis.plane_segment)
        if s > best_score:
            best_score = s
            best_alpha = float(alpha)
    return best_alpha, best_score


def fit_frame_alpha(mask_t, K, hypothesis, grid, frame=0):
    """Grid-search argmax of the reprojection score for one frame; exact
    ties resolve to the smallest |alpha| (negative before positive)."""
    mask_t = np.asarray(mask_t, dtype=bool)
    alpha, score = _argmax_alpha(
        mask_t, int(mask_t.sum()), K, hypothesis, grid.search_order()
    )
    return FrameFit(frame=frame, alpha=alpha, score=score)


def fit_motion_model(alphas, times):
    """Ordinary least squares alpha = k*t + b with R^2; a constant series
    has R^2 = 0 by convention."""
    a = np.asarray(alphas, dtype=float)
    t = np.asarray(times, dtype=float)
    if a.shape != t.shape or a.ndim != 1 or len(a) < 2:
        raise ValueError("need at least 2 aligned samples")
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    k, b = np.polyfit(t, a, 1)
    pred = k * t + b
    ss_res = float(np.sum((a - pred) ** 2))
    ss_tot = float(np.sum((a - a.mean()) ** 2))
    if ss_tot < 1e-12:
        r2 = 0.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return MotionModel(slope_k=float(k), intercept=float(b), r_squared=r2)


def classify_articulation(frame_fits, motion, thresholds=ClassifyThresholds()):
    """True iff the motion is linear enough, fast enough, and at least one
    frame's reprojection actually matched the observation."""
    if motion.r_squared < thresholds.r_squared:
        return False
    if abs(motion.slope_k) <= thresholds.slope:
        return False
    return any(ff.score >= thresholds.score_floor for ff in frame_fits)


def _mask_centroid(mask):
    ys, xs = np.nonzero(mask)
    return np.array([xs.mean() + 0.5, ys.mean() + 0.5])


def _reference_hypotheses(track, K, category):
    """Candidate hypotheses from the first, middle, and last detections."""
    dets = track.detections
    n = len(dets)
    hyps = []
    for r in sorted(set([0, n // 2, n - 1])):
        d = dets[r]
        if d.axis2d is None:
            continue
        try:
            rings = mask_to_boundary_polygon(d.mask, simplify_tol=1.0)
            segment = []
            for ring in rings:
                if len(ring) < 3:
                    continue
                pts3 = np.stack(
                    [backproject_to_plane(K, v, d.plane) for v in ring]
                )
                segment.append(pts3)
            if not segment:
                continue
            if category == "rotation":
                axis = lift_rotation_axis(K, d.axis2d, d.plane)
                hyps.append(
                    ArticulationHypothesis(
                        reference_frame=d.frame,
                        plane_segment=segment,
                        axis3d=axis,
                        category=category,
                        plane=d.plane,
                    )
                )
            else:
                anchor = _mask_centroid(d.mask)
                point = backproject_to_plane(K, anchor, d.plane)
                for direction in lift_translation_axis(K, d.axis2d, d.plane, anchor):
                    hyps.append(
                        ArticulationHypothesis(
                            reference_frame=d.frame,
                            plane_segment=segment,
                            axis3d=Axis3D("translation", point, direction),
                            category=category,
                            plane=d.plane,
                        )
                    )
        except DegenerateGeometryError:
            continue
    return hyps


def fit_track(
    track,
    K,
    rotation_grid=ROTATION_GRID,
    translation_grid=TRANSLATION_GRID,
    thresholds=ClassifyThresholds(),
):
    """Fit one articulation model to a track.

    Every hypothesis (3 reference frames; x2 direction candidates for
    translation) is scored on every frame; the one with the highest mean
    reprojection score wins and its motion fit decides the verdict.
    Returns NoFit when no reference frame yields a liftable hypothesis.
    """
    dets = track.detections
    if len(dets) < 2:
        raise ValueError("track too short to fit")
    category = track.category
    grid = rotation_grid if category == "rotation" else translation_grid
    hyps = _reference_hypotheses(track, K, category)
    if not hyps:
        return NoFit()

    best = None
    areas = [int(d.mask.sum()) for d in dets]
    order = grid.search_order()
    for hyp in hyps:
        fits = []
        for d, area in zip(dets, areas):
            alpha, score = _argmax_alpha(d.mask, area, K, hyp, order)
            fits.append(FrameFit(frame=d.frame, alpha=alpha, score=score))
        mean_score = float(np.mean([f.score for f in fits]))
        if best is None or mean_score > best[0]:
            best = (mean_score, hyp, fits)

    mean_score, hyp, fits = best
    motion = fit_motion_model(
        [f.alpha for f in fits], [d.time_s for d in dets]
    )
    verdict = classify_articulation(fits, motion, thresholds)
    return ArticulationFit(
        hypothesis=hyp,
        frame_fits=fits,
        motion=motion,
        articulating=verdict,
        mean_score=mean_score,
    )
