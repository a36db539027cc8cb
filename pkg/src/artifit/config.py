"""Run configuration: every pipeline threshold with its default, JSON
round-tripping, and the canonical --dump-config rendering.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .evaluation import EvalThresholds
from .fitting import (
    ClassifyThresholds,
    GridSpec,
    ROTATION_GRID,
    TRANSLATION_GRID,
)
from .geometry import CameraIntrinsics


@dataclass(frozen=True)
class RunConfig:
    camera: CameraIntrinsics | None = None
    tracking_iou: float = 0.5
    tracking_metric: str = "mask"  # or "box"
    min_track_length: int = 5
    rotation_grid: GridSpec = ROTATION_GRID
    translation_grid: GridSpec = TRANSLATION_GRID
    r2_threshold: float = 0.4
    slope_threshold: float = 0.1
    score_floor: float = 0.5
    eval: EvalThresholds = field(default_factory=EvalThresholds)
    out_dir: str | None = None

    def __post_init__(self):
        if not 0.0 < self.tracking_iou <= 1.0:
            raise ValueError("tracking IoU must be in (0, 1]")
        if self.tracking_metric not in ("mask", "box"):
            raise ValueError(f"unknown tracking metric {self.tracking_metric!r}")
        if self.min_track_length < 2:
            raise ValueError("min track length must be at least 2")
        if not 0.0 <= self.r2_threshold <= 1.0:
            raise ValueError("R^2 threshold must be in [0, 1]")
        if self.slope_threshold < 0 or not 0.0 <= self.score_floor <= 1.0:
            raise ValueError("slope threshold and score floor must be valid")

    def classify_thresholds(self):
        return ClassifyThresholds(
            r_squared=self.r2_threshold,
            slope=self.slope_threshold,
            score_floor=self.score_floor,
        )

    def to_dict(self):
        cam = None
        if self.camera is not None:
            c = self.camera
            cam = {
                "fx": c.fx,
                "fy": c.fy,
                "cx": c.cx,
                "cy": c.cy,
                "width": c.width,
                "height": c.height,
            }
        return {
            "camera": cam,
            "tracking": {
                "iou": self.tracking_iou,
                "metric": self.tracking_metric,
                "min_track_length": self.min_track_length,
            },
            "grids": {
                "rotation": {
                    "lo": self.rotation_grid.lo,
                    "hi": self.rotation_grid.hi,
                    "step": self.rotation_grid.step,
                },
                "translation": {
                    "lo": self.translation_grid.lo,
                    "hi": self.translation_grid.hi,
                    "step": self.translation_grid.step,
                },
            },
            "classify": {
                "r_squared": self.r2_threshold,
                "slope": self.slope_threshold,
                "score_floor": self.score_floor,
            },
            "eval": {
                "bbox_iou": self.eval.bbox_iou,
                "ea_score": self.eval.ea_score,
                "normal_deg": self.eval.normal_deg,
            },
            "out_dir": self.out_dir,
        }


def _grid_from_dict(d, fallback):
    if d is None:
        return fallback
    return GridSpec(
        lo=float(d.get("lo", fallback.lo)),
        hi=float(d.get("hi", fallback.hi)),
        step=float(d.get("step", fallback.step)),
    )


def config_from_dict(data):
    """Build a RunConfig from a (possibly partial) parsed JSON dict."""
    data = data or {}
    cam = None
    if data.get("camera") is not None:
        c = data["camera"]
        cam = CameraIntrinsics(
            fx=float(c["fx"]),
            fy=float(c["fy"]),
            cx=float(c["cx"]),
            cy=float(c["cy"]),
            width=int(c["width"]),
            height=int(c["height"]),
        )
    tr = data.get("tracking") or {}
    grids = data.get("grids") or {}
    cl = data.get("classify") or {}
    ev = data.get("eval") or {}
    defaults = RunConfig()
    return RunConfig(
        camera=cam,
        tracking_iou=float(tr.get("iou", defaults.tracking_iou)),
        tracking_metric=tr.get("metric", defaults.tracking_metric),
        min_track_length=int(
            tr.get("min_track_length", defaults.min_track_length)
        ),
        rotation_grid=_grid_from_dict(grids.get("rotation"), ROTATION_GRID),
        translation_grid=_grid_from_dict(
            grids.get("translation"), TRANSLATION_GRID
        ),
        r2_threshold=float(cl.get("r_squared", defaults.r2_threshold)),
        slope_threshold=float(cl.get("slope", defaults.slope_threshold)),
        score_floor=float(cl.get("score_floor", defaults.score_floor)),
        eval=EvalThresholds(
            bbox_iou=float(ev.get("bbox_iou", 0.5)),
            ea_score=float(ev.get("ea_score", 0.5)),
            normal_deg=float(ev.get("normal_deg", 30.0)),
        ),
        out_dir=data.get("out_dir"),
    )


def load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))


def dump_default_config():
    """The canonical defaults as pretty JSON, one source of truth for
    --dump-config."""
    return json.dumps(RunConfig().to_dict(), indent=2) + "\n"
