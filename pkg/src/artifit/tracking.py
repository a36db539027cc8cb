"""Greedy association of per-frame detections into temporal tracks.

A detection at frame t links to its argmax-IoU detection at frame t+1 when
that IoU clears the threshold and the target has not been claimed by a
higher-confidence detection. There is no gap bridging: a frame with no
detections ends every live track.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Plane, ProjectedAxis
from .raster import bbox_iou, mask_bbox, mask_iou

CATEGORIES = ("rotation", "translation")


@dataclass
class Detection:
    """One frame's articulation observation."""

    frame: int
    time_s: float
    category: str
    score: float
    mask: np.ndarray
    box: tuple
    plane: Plane
    axis2d: ProjectedAxis | None = None
    clip_id: str = ""

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category {self.category!r}")
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score {self.score} outside [0, 1]")
        self.mask = np.asarray(self.mask, dtype=bool)
        if not self.mask.any():
            raise ValueError("detection mask is empty")
        if self.box is None:
            self.box = mask_bbox(self.mask)
        self.box = tuple(float(v) for v in self.box)
        tight = mask_bbox(self.mask)
        if max(abs(a - b) for a, b in zip(self.box, tight)) > 2.0:
            raise ValueError("box strays more than 2 px from the mask bounds")


@dataclass
class Track:
    """Time-ordered chain of detections linked by IoU."""

    id: int
    detections: list = field(default_factory=list)

    @property
    def category(self):
        """Confidence-weighted majority category; ties go to the first
        detection's label."""
        weight = {}
        for d in self.detections:
            weight[d.category] = weight.get(d.category, 0.0) + d.score
        first = self.detections[0].category
        best = first
        for cat, wsum in weight.items():
            if wsum > weight[best] + 1e-12:
                best = cat
        return best

    @property
    def frames(self):
        return [d.frame for d in self.detections]


def _pair_iou(a, b, metric):
    if metric == "mask":
        return mask_iou(a.mask, b.mask)
    if metric == "box":
        return bbox_iou(a.box, b.box)
    raise ValueError(f"unknown tracking metric {metric!r}")


def group_by_frame(detections):
    """Detections bucketed over the full [min_frame, max_frame] range, so
    frames with no detections appear as empty buckets and break chains."""
    if not detections:
        return []
    lo = min(d.frame for d in detections)
    hi = max(d.frame for d in detections)
    frames = [[] for _ in range(hi - lo + 1)]
    for d in detections:
        frames[d.frame - lo].append(d)
    return frames


def greedy_track(frames, iou_threshold=0.5, metric="mask"):
    """Link per-frame detection lists into tracks.

    frames: lists of Detection for consecutive frame indices (use
    group_by_frame to build them). Within a frame, detections compete for
    next-frame targets in descending confidence order; exact IoU ties go
    to the lower-index target. Every detection lands in exactly one track.
    """
    tracks = []
    track_of = {}  # id(detection) -> track index
    for t, dets in enumerate(frames):
        for d in dets:
            if id(d) not in track_of:
                track_of[id(d)] = len(tracks)
                tracks.append(Track(id=len(tracks), detections=[d]))
        if t + 1 >= len(frames):
            break
        nxt = frames[t + 1]
        if not nxt:
            continue
        claimed = [False] * len(nxt)
        order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
        for i in order:
            d = dets[i]
            best_j = -1
            best_iou = 0.0
            for j, cand in enumerate(nxt):
                iou = _pair_iou(d, cand, metric)
                if iou > best_iou:
                    best_iou = iou
                    best_j = j
            if best_j < 0 or best_iou < iou_threshold or claimed[best_j]:
                continue
            claimed[best_j] = True
            ti = track_of[id(d)]
            track_of[id(nxt[best_j])] = ti
            tracks[ti].detections.append(nxt[best_j])
    return tracks
