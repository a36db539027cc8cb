"""Seeded analytic generator of articulating planar scenes with exact ground
truth: a rectangular panel on a plane, hinged on an edge or sliding along a
direction, imaged by a pinhole camera, optionally occluded and noised.

Randomness comes from numpy's default_rng (the PCG64 generator), so a fixed
(config, seed) pair reproduces identical output on any platform. Per frame
the draw order is: detection drop, mask vertex jitter, axis angle, axis
offset, normal direction (two draws), plane offset, confidence score; draws
for a noise term are skipped entirely when that term is disabled, and the
zero-noise path reuses the ground-truth arrays unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import (
    CameraIntrinsics,
    DegenerateGeometryError,
    Plane,
    ProjectedAxis,
    Axis3D,
    axis_from_endpoints,
    clip_line_to_image,
    default_intrinsics_for,
    project_axis3d,
    project_points,
    transform_for,
)
from .fitting import clip_polygon_near
from .raster import (
    mask_bbox,
    mask_to_boundary_polygon,
    rasterize_rings,
)
from .tracking import Detection


@dataclass(frozen=True)
class NoiseSpec:
    """Detector stress model; every term is off at its default."""

    mask_vertex_jitter_sigma: float = 0.0  # pixels
    axis_angle_sigma: float = 0.0  # radians
    axis_offset_sigma: float = 0.0  # pixels
    normal_angle_sigma: float = 0.0  # radians
    offset_sigma: float = 0.0  # meters
    detection_drop_prob: float = 0.0
    score_range: tuple = (1.0, 1.0)

    def __post_init__(self):
        sigmas = (
            self.mask_vertex_jitter_sigma,
            self.axis_angle_sigma,
            self.axis_offset_sigma,
            self.normal_angle_sigma,
            self.offset_sigma,
        )
        if any(s < 0 for s in sigmas):
            raise ValueError("noise sigmas must be >= 0")
        if not 0.0 <= self.detection_drop_prob <= 1.0:
            raise ValueError("drop probability outside [0, 1]")
        lo, hi = self.score_range
        if not (0.0 <= lo <= hi <= 1.0):
            raise ValueError("score range must satisfy 0 <= min <= max <= 1")


@dataclass(frozen=True)
class OccluderSpec:
    """Ellipse swept linearly across the image over the clip, removed from
    detection masks but never from ground truth."""

    fraction: float = 0.18  # ellipse diameter as a fraction of image size
    start: tuple = (0.35, 0.3)  # image-fraction coordinates
    end: tuple = (0.65, 0.75)

    def __post_init__(self):
        if not 0.0 < self.fraction < 1.0:
            raise ValueError("occluder fraction must be in (0, 1)")


@dataclass(frozen=True)
class SceneConfig:
    camera: CameraIntrinsics
    category: str  # rotation | translation
    panel_width: float  # meters
    panel_height: float
    center: tuple  # panel center at alpha = 0 (camera frame, meters)
    normal: tuple  # panel plane normal (sign-insensitive)
    up_hint: tuple = (0.0, -1.0, 0.0)
    hinge: str = "left"  # rotation: left | right | top | bottom
    translation_dir: str = "normal"  # translation: normal | u | v
    slope: float = 0.0  # alpha units per second
    intercept: float = 0.0
    frames: int = 30
    fps: float = 10.0
    occluder: OccluderSpec | None = None
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    clip_id: str = "scene"

    def __post_init__(self):
        if self.category not in ("rotation", "translation"):
            raise ValueError(f"unknown category {self.category!r}")
        if self.frames < 1:
            raise ValueError("need at least one frame")
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        if self.panel_width <= 0 or self.panel_height <= 0:
            raise ValueError("panel must have positive area")
        if self.category == "rotation" and self.hinge not in (
            "left",
            "right",
            "top",
            "bottom",
        ):
            raise ValueError(f"unknown hinge {self.hinge!r}")
        if self.category == "translation" and self.translation_dir not in (
            "normal",
            "u",
            "v",
        ):
            raise ValueError(f"unknown translation_dir {self.translation_dir!r}")


@dataclass(frozen=True)
class GroundTruthFrame:
    frame: int
    articulating: bool
    category: str
    box: tuple
    mask: np.ndarray
    axis2d: ProjectedAxis | None
    normal: np.ndarray
    alpha: float


def _panel_frame(config):
    """Reference geometry: plane, in-plane axes (u right-ish, v up-ish),
    corner ring, and the scene's articulation axis."""
    c = np.asarray(config.center, dtype=float)
    n = np.asarray(config.normal, dtype=float)
    n = n / np.linalg.norm(n)
    plane = Plane(n, float(n @ c))
    n = plane.normal  # canonical sign
    up = np.asarray(config.up_hint, dtype=float)
    v = up - (up @ n) * n
    nv = np.linalg.norm(v)
    if nv < 1e-9:
        raise ValueError("up_hint is parallel to the panel normal")
    v = v / nv
    u = np.cross(n, v)

    hw = config.panel_width / 2.0
    hh = config.panel_height / 2.0
    corners = np.stack(
        [
            c + hw * u + hh * v,
            c - hw * u + hh * v,
            c - hw * u - hh * v,
            c + hw * u - hh * v,
        ]
    )

    if config.category == "rotation":
        edges = {
            "left": (c - hw * u, v),
            "right": (c + hw * u, v),
            "top": (c + hh * v, u),
            "bottom": (c - hh * v, u),
        }
        point, direction = edges[config.hinge]
        axis = Axis3D("rotation", point, direction)
    else:
        dirs = {"normal": n, "u": u, "v": v}
        axis = Axis3D("translation", c, dirs[config.translation_dir])
    return plane, corners, axis, c


def _occluder_mask(K, spec, frame, frames):
    f = frame / (frames - 1) if frames > 1 else 0.0
    cx = (spec.start[0] + f * (spec.end[0] - spec.start[0])) * K.width
    cy = (spec.start[1] + f * (spec.end[1] - spec.start[1])) * K.height
    rx = spec.fraction * K.width / 2.0
    ry = spec.fraction * K.height / 2.0
    ys, xs = np.mgrid[0 : K.height, 0 : K.width]
    return ((xs + 0.5 - cx) / rx) ** 2 + ((ys + 0.5 - cy) / ry) ** 2 <= 1.0


def _rotate2(points, center, angle):
    ca, sa = math.cos(angle), math.sin(angle)
    rel = points - center
    return np.stack(
        [ca * rel[:, 0] - sa * rel[:, 1], sa * rel[:, 0] + ca * rel[:, 1]], axis=1
    ) + center


def _tilt_normal(n, phi, tilt):
    """Rotate unit n by `tilt` about an in-plane axis at angle phi."""
    aux = np.array([0.0, 0.0, 1.0]) if abs(n[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = np.cross(n, aux)
    e1 = e1 / np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    axis = math.cos(phi) * e1 + math.sin(phi) * e2
    return n * math.cos(tilt) + np.cross(axis, n) * math.sin(tilt)


def generate_sequence(config, seed):
    """Render a scene analytically.

    Returns (gt_frames, detections) where detections is a per-frame list of
    0-or-1 Detection objects derived from ground truth and perturbed per
    the config's NoiseSpec.
    """
    rng = np.random.default_rng(seed)
    K = config.camera
    plane0, corners, axis3d, center = _panel_frame(config)

    try:
        proj = project_axis3d(K, axis3d)
        gt_axis2d = (
            proj if clip_line_to_image(proj, K.width, K.height) is not None else None
        )
    except DegenerateGeometryError:
        gt_axis2d = None

    gt_frames = []
    detections = []
    for i in range(config.frames):
        t_s = i / config.fps
        alpha = config.intercept + config.slope * t_s
        tf = transform_for(axis3d, alpha)
        moved = tf.apply(corners)
        clipped = clip_polygon_near(moved)
        if len(clipped) < 3:
            raise ValueError(f"panel fully behind the camera at frame {i}")
        ring = project_points(K, clipped)
        gt_mask = rasterize_rings([ring], K.width, K.height)

        n_t = tf.rotation @ plane0.normal
        plane_t = Plane(n_t, float(n_t @ tf.apply(center)))

        box = mask_bbox(gt_mask) or (0.0, 0.0, 0.0, 0.0)
        gt_frames.append(
            GroundTruthFrame(
                frame=i,
                articulating=config.slope != 0.0,
                category=config.category,
                box=box,
                mask=gt_mask,
                axis2d=gt_axis2d,
                normal=plane_t.normal,
                alpha=float(alpha),
            )
        )
        detections.append(
            _detect(K, config, rng, i, t_s, gt_mask, gt_axis2d, plane_t)
        )
    return gt_frames, detections


def _detect(K, config, rng, frame, t_s, gt_mask, gt_axis2d, plane_t):
    """The simulated detector's output for one frame: [] or [Detection]."""
    noise = config.noise

    if noise.detection_drop_prob > 0 and rng.uniform() < noise.detection_drop_prob:
        return []

    det_mask = gt_mask
    if noise.mask_vertex_jitter_sigma > 0 and gt_mask.any():
        rings = mask_to_boundary_polygon(gt_mask, simplify_tol=1.0)
        rings = [
            r + rng.normal(0.0, noise.mask_vertex_jitter_sigma, r.shape)
            for r in rings
        ]
        det_mask = rasterize_rings(rings, K.width, K.height)
    if config.occluder is not None:
        det_mask = det_mask & ~_occluder_mask(
            K, config.occluder, frame, config.frames
        )
    if not det_mask.any():
        return []

    axis_det = gt_axis2d
    if axis_det is not None and (
        noise.axis_angle_sigma > 0 or noise.axis_offset_sigma > 0
    ):
        seg = clip_line_to_image(axis_det, K.width, K.height)
        ang = rng.normal(0.0, noise.axis_angle_sigma) if noise.axis_angle_sigma > 0 else 0.0
        off = (
            rng.normal(0.0, noise.axis_offset_sigma)
            if noise.axis_offset_sigma > 0
            else 0.0
        )
        pts = _rotate2(seg, seg.mean(axis=0), ang)
        ca, sa = math.cos(ang), math.sin(ang)
        nx, ny = axis_det.normal2d()
        pts = pts + off * np.array([ca * nx - sa * ny, sa * nx + ca * ny])
        jittered = axis_from_endpoints(pts[0], pts[1])
        if config.category == "translation":
            jittered = ProjectedAxis(jittered.theta, 0.0)
        axis_det = jittered

    n_det = plane_t.normal
    o_det = plane_t.offset
    noisy_plane = False
    if noise.normal_angle_sigma > 0:
        phi = rng.uniform(0.0, 2.0 * math.pi)
        tilt = rng.normal(0.0, noise.normal_angle_sigma)
        n_det = _tilt_normal(n_det, phi, tilt)
        noisy_plane = True
    if noise.offset_sigma > 0:
        o_det = o_det + rng.normal(0.0, noise.offset_sigma)
        noisy_plane = True
    det_plane = Plane(n_det, o_det) if noisy_plane else plane_t

    lo, hi = noise.score_range
    score = float(lo) if hi <= lo else float(rng.uniform(lo, hi))

    return [
        Detection(
            frame=frame,
            time_s=t_s,
            category=config.category,
            score=score,
            mask=det_mask,
            box=mask_bbox(det_mask),
            plane=det_plane,
            axis2d=axis_det,
            clip_id=config.clip_id,
        )
    ]


def make_static_negative(config, seed):
    """Same scene with the articulation frozen (slope forced to 0); any
    occluder keeps moving, mimicking touching without opening."""
    return generate_sequence(replace(config, slope=0.0), seed)


def door_scene(**overrides):
    """Door-like default: 0.9 x 2.0 m panel, vertical hinge on the left
    edge, swinging 1.5 degrees per frame at 10 fps."""
    base = dict(
        camera=default_intrinsics_for(320, 240),
        category="rotation",
        panel_width=0.9,
        panel_height=2.0,
        center=(0.3, 0.1, 3.2),
        normal=(0.0, 0.0, 1.0),
        hinge="left",
        slope=math.radians(15.0),
        frames=30,
        fps=10.0,
        clip_id="door",
    )
    base.update(overrides)
    return SceneConfig(**base)


def drawer_scene(**overrides):
    """Drawer-like default: 0.6 x 0.4 m front panel pulled along the plane
    normal toward the camera at 1 cm per frame at 15 fps."""
    base = dict(
        camera=default_intrinsics_for(320, 240),
        category="translation",
        panel_width=0.6,
        panel_height=0.4,
        center=(0.45, 0.25, 2.0),
        normal=(0.0, 0.0, 1.0),
        translation_dir="normal",
        slope=-0.15,
        frames=30,
        fps=15.0,
        clip_id="drawer",
    )
    base.update(overrides)
    return SceneConfig(**base)


def scene_preset(name):
    if name == "door":
        return door_scene()
    if name == "drawer":
        return drawer_scene()
    if name == "static-door":
        return door_scene(slope=0.0, occluder=OccluderSpec(), clip_id="static-door")
    raise ValueError(f"unknown scene preset {name!r}")


def scene_config_from_dict(data, base=None):
    """Apply a parsed JSON dict of overrides onto a base SceneConfig."""
    base = base if base is not None else door_scene()
    data = data or {}

    camera = base.camera
    if data.get("camera") is not None:
        c = data["camera"]
        camera = CameraIntrinsics(
            fx=float(c["fx"]),
            fy=float(c["fy"]),
            cx=float(c["cx"]),
            cy=float(c["cy"]),
            width=int(c["width"]),
            height=int(c["height"]),
        )

    occluder = base.occluder
    if "occluder" in data:
        o = data["occluder"]
        if o is None:
            occluder = None
        else:
            occluder = OccluderSpec(
                fraction=float(o.get("fraction", OccluderSpec.fraction)),
                start=tuple(o.get("start", OccluderSpec.start)),
                end=tuple(o.get("end", OccluderSpec.end)),
            )

    noise = base.noise
    if data.get("noise") is not None:
        nd = dict(data["noise"])
        score_range = nd.pop("score_range", noise.score_range)
        kwargs = {
            name: float(nd.pop(name, getattr(noise, name)))
            for name in (
                "mask_vertex_jitter_sigma",
                "axis_angle_sigma",
                "axis_offset_sigma",
                "normal_angle_sigma",
                "offset_sigma",
                "detection_drop_prob",
            )
        }
        if nd:
            raise ValueError(f"unknown noise fields: {sorted(nd)}")
        noise = NoiseSpec(score_range=tuple(score_range), **kwargs)

    return SceneConfig(
        camera=camera,
        category=data.get("category", base.category),
        panel_width=float(data.get("panel_width", base.panel_width)),
        panel_height=float(data.get("panel_height", base.panel_height)),
        center=tuple(data.get("center", base.center)),
        normal=tuple(data.get("normal", base.normal)),
        up_hint=tuple(data.get("up_hint", base.up_hint)),
        hinge=data.get("hinge", base.hinge),
        translation_dir=data.get("translation_dir", base.translation_dir),
        slope=float(data.get("slope", base.slope)),
        intercept=float(data.get("intercept", base.intercept)),
        frames=int(data.get("frames", base.frames)),
        fps=float(data.get("fps", base.fps)),
        occluder=occluder,
        noise=noise,
        clip_id=data.get("clip_id", base.clip_id),
    )
