"""Overlay rendering: one PNG per frame with ground truth in green and
detections or fitted models color-coded by category (rotation orange,
translation blue)."""

from __future__ import annotations

import io

import numpy as np
from PIL import Image, ImageDraw

from .geometry import ProjectedAxis, clip_line_to_image
from .raster import mask_to_boundary_polygon

GT_COLOR = (80, 200, 90)
CATEGORY_COLORS = {
    "rotation": (255, 150, 40),
    "translation": (70, 160, 255),
}
BACKGROUND = (16, 16, 16)


def _draw_mask_outline(draw, mask, color):
    if not np.asarray(mask, dtype=bool).any():
        return
    for ring in mask_to_boundary_polygon(mask, simplify_tol=0.0):
        if len(ring) >= 2:
            pts = [tuple(p) for p in ring] + [tuple(ring[0])]
            draw.line(pts, fill=color, width=1)


def _draw_box(draw, box, color):
    x0, y0, x1, y1 = box
    if x1 > x0 and y1 > y0:
        draw.rectangle([x0, y0, x1 - 1, y1 - 1], outline=color, width=1)


def _draw_axis(draw, axis, width, height, color):
    if axis is None:
        return
    seg = clip_line_to_image(axis, width, height)
    if seg is None:
        return
    draw.line([tuple(seg[0]), tuple(seg[1])], fill=color, width=2)


def render_frame(width, height, gt_rows=(), dets=(), fit_overlays=()):
    """Compose one overlay image.

    gt_rows: decoded ground-truth dicts (see records.load_gt_records).
    dets: Detection objects.
    fit_overlays: dicts with category, box, axis (ProjectedAxis, dict, None).
    """
    img = Image.new("RGB", (int(width), int(height)), BACKGROUND)
    draw = ImageDraw.Draw(img)
    for gt_row in gt_rows:
        _draw_mask_outline(draw, gt_row["mask"], GT_COLOR)
        _draw_box(draw, gt_row["box"], GT_COLOR)
        _draw_axis(draw, gt_row["axis2d"], width, height, GT_COLOR)
    for det in dets:
        color = CATEGORY_COLORS[det.category]
        _draw_mask_outline(draw, det.mask, color)
        _draw_box(draw, det.box, color)
        _draw_axis(draw, det.axis2d, width, height, color)
    for overlay in fit_overlays:
        color = CATEGORY_COLORS[overlay["category"]]
        _draw_box(draw, overlay["box"], color)
        axis = overlay.get("axis")
        if isinstance(axis, dict):
            axis = ProjectedAxis(axis["theta"], axis["p"])
        _draw_axis(draw, axis, width, height, color)
    return img


def image_png_bytes(img):
    """Deterministic PNG serialization of a PIL image."""
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()
