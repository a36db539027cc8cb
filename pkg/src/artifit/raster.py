"""Pixel-space polygon and mask operations: even-odd scanline rasterization,
boundary tracing back to polygons, simplification, run-length coding, IoU.

A pixel (px, py) covers the unit square [px, px+1] x [py, py+1]; its sampling
point is the center (px + 0.5, py + 0.5). Polygon vertices live in the same
coordinate frame, so integer-corner rings from trace_boundaries rasterize back
to exactly the pixels they were traced from.
"""

from __future__ import annotations

import math

import numpy as np

DIRS = ((1, 0), (0, 1), (-1, 0), (0, -1))  # E, S, W, N


def _as_rings(rings):
    if isinstance(rings, np.ndarray) and rings.ndim == 2:
        rings = [rings]
    out = []
    for r in rings:
        r = np.asarray(r, dtype=float)
        if r.ndim != 2 or r.shape[1] != 2:
            raise ValueError("ring must be an (N, 2) array")
        out.append(r)
    return out


def _accumulate_ring(acc, ring, ox, oy):
    """Add scanline crossing counts of one closed ring into acc.

    acc has one spare column; crossings right of the window land there.
    Pixel centers are evaluated in full-frame coordinates so a windowed
    raster is bit-identical to the matching slice of a full raster.
    """
    h, w1 = acc.shape
    w = w1 - 1
    n = len(ring)
    if n < 2:
        return
    for k in range(n):
        x0, y0 = ring[k]
        x1, y1 = ring[(k + 1) % n]
        if y0 == y1:
            continue
        ylo, yhi = (y0, y1) if y0 < y1 else (y1, y0)
        j0 = max(0, math.ceil(ylo - 0.5) - oy)
        j1 = min(h, math.ceil(yhi - 0.5) - oy)
        if j0 >= j1:
            continue
        js = np.arange(j0, j1)
        yc = (js + oy) + 0.5
        xint = x0 + (yc - y0) * (x1 - x0) / (y1 - y0)
        cols = np.ceil(xint - 0.5).astype(np.int64) - ox
        np.clip(cols, 0, w, out=cols)
        np.add.at(acc, (js, cols), 1)


def rasterize_rings(rings, width, height, origin=(0, 0)):
    """Even-odd rasterization of closed rings onto a pixel grid.

    A pixel is inside when its center has odd crossing parity over all
    rings together, so hole rings and disjoint blobs need no special
    handling. origin = (ox, oy) shifts the grid: output pixel (i, j)
    is full-frame pixel (i + ox, j + oy).
    """
    ox, oy = int(origin[0]), int(origin[1])
    acc = np.zeros((int(height), int(width) + 1), dtype=np.int64)
    for ring in _as_rings(rings):
        _accumulate_ring(acc, ring, ox, oy)
    return (np.cumsum(acc[:, :-1], axis=1) % 2).astype(bool)


def rasterize_polygon(vertices, width, height):
    return rasterize_rings([vertices], width, height)


def rings_bounds(rings):
    """(xmin, ymin, xmax, ymax) over all ring vertices."""
    pts = np.vstack(_as_rings(rings))
    if len(pts) == 0:
        raise ValueError("no vertices")
    return (
        float(pts[:, 0].min()),
        float(pts[:, 1].min()),
        float(pts[:, 0].max()),
        float(pts[:, 1].max()),
    )


def rasterize_rings_window(rings, width, height):
    """Rasterize only the image region the rings can touch.

    Returns (window_mask, ox, oy) with window pixel (i, j) equal to
    full-frame pixel (i + ox, j + oy), or None when the rings cannot
    cover any pixel center inside the image.
    """
    rings = _as_rings(rings)
    if not rings or all(len(r) < 3 for r in rings):
        return None
    xmin, ymin, xmax, ymax = rings_bounds(rings)
    c0 = max(0, math.ceil(xmin - 0.5))
    c1 = min(int(width), math.ceil(xmax - 0.5))
    r0 = max(0, math.ceil(ymin - 0.5))
    r1 = min(int(height), math.ceil(ymax - 0.5))
    if c0 >= c1 or r0 >= r1:
        return None
    sub = rasterize_rings(rings, c1 - c0, r1 - r0, origin=(c0, r0))
    return sub, c0, r0


def mask_iou(a, b):
    """Intersection over union of two boolean masks; two empty masks give 0."""
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise ValueError("mask shapes differ")
    inter = int(np.logical_and(a, b).sum())
    union = int(a.sum()) + int(b.sum()) - inter
    return inter / union if union > 0 else 0.0


def rings_mask_iou(rings, target, target_area=None):
    """IoU between the raster of rings and a full-frame boolean mask.

    Equivalent to mask_iou(rasterize_rings(rings, W, H), target) but only
    rasterizes the window the rings can reach.
    """
    target = np.asarray(target, dtype=bool)
    h, w = target.shape
    tarea = int(target.sum()) if target_area is None else int(target_area)
    win = rasterize_rings_window(rings, w, h)
    if win is None:
        return 0.0
    sub, ox, oy = win
    sh, sw = sub.shape
    inter = int(np.logical_and(sub, target[oy : oy + sh, ox : ox + sw]).sum())
    area = int(sub.sum())
    union = area + tarea - inter
    return inter / union if union > 0 else 0.0


def mask_bbox(mask):
    """Tight [x0, y0, x1, y1] around the true pixels (x1/y1 exclusive), or
    None for an empty mask."""
    mask = np.asarray(mask, dtype=bool)
    ys, xs = np.nonzero(mask)
    if xs.size == 0:
        return None
    return (
        float(xs.min()),
        float(ys.min()),
        float(xs.max()) + 1.0,
        float(ys.max()) + 1.0,
    )


def bbox_iou(a, b):
    """IoU of two [x0, y0, x1, y1] boxes."""
    ix0 = max(a[0], b[0])
    iy0 = max(a[1], b[1])
    ix1 = min(a[2], b[2])
    iy1 = min(a[3], b[3])
    inter = max(0.0, ix1 - ix0) * max(0.0, iy1 - iy0)
    area_a = max(0.0, a[2] - a[0]) * max(0.0, a[3] - a[1])
    area_b = max(0.0, b[2] - b[0]) * max(0.0, b[3] - b[1])
    union = area_a + area_b - inter
    return inter / union if union > 0 else 0.0


def rle_encode(mask):
    """Row-major run-length counts, alternating zero runs and one runs,
    starting with the zero run (which may be empty)."""
    flat = np.asarray(mask, dtype=bool).ravel()
    if flat.size == 0:
        return []
    edges = np.flatnonzero(np.diff(flat.view(np.int8))) + 1
    bounds = np.concatenate([[0], edges, [flat.size]])
    runs = np.diff(bounds).tolist()
    if flat[0]:
        runs = [0] + runs
    return [int(r) for r in runs]


def rle_decode(counts, width, height):
    """Inverse of rle_encode, back to an (height, width) boolean mask."""
    counts = [int(c) for c in counts]
    if any(c < 0 for c in counts):
        raise ValueError("negative run length")
    total = sum(counts)
    if total != int(width) * int(height):
        raise ValueError(
            f"run lengths sum to {total}, expected {int(width) * int(height)}"
        )
    values = np.arange(len(counts)) % 2
    flat = np.repeat(values.astype(bool), counts)
    return flat.reshape(int(height), int(width))


def _valid_dirs(p, x, y):
    """Outgoing boundary directions at corner (x, y), inside kept on the left.

    p is the mask padded by one pixel of background on every side, so the
    four pixels around any corner of the original grid can be read directly.
    """
    a = p[y, x]  # pixel (x-1, y-1)
    b = p[y, x + 1]  # pixel (x,   y-1)
    c = p[y + 1, x]  # pixel (x-1, y)
    d = p[y + 1, x + 1]  # pixel (x,   y)
    return (
        b and not d,  # E
        d and not c,  # S
        c and not a,  # W
        a and not b,  # N
    )


def trace_boundaries(mask):
    """All boundary rings of a mask as corner-lattice polygons.

    Walks the cracks between inside and outside pixels keeping the inside
    on the left, so outer rings and hole rings both come out closed and
    even-odd rasterization reproduces the mask exactly. At a saddle corner
    (two diagonal inside pixels) the walk turns right, which keeps
    8-connected blobs on a single ring. Vertices are emitted only where the
    walk turns.
    """
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    p = np.zeros((h + 2, w + 2), dtype=bool)
    p[1:-1, 1:-1] = mask

    # seed edges: every southward crack, scanned in row-major corner order
    used = set()
    rings = []
    south = np.argwhere(p[1:, 1:] & ~p[1:, :-1])  # S valid at corner (x, y)
    for y, x in south:
        x = int(x)
        y = int(y)
        if (x, y, 1) in used:
            continue
        rings.append(_walk(p, used, x, y, 1))
    return rings


def _walk(p, used, x0, y0, d0):
    """Trace one closed ring starting with the directed edge (x0, y0, d0)."""
    xs = []
    ys = []
    ds = []
    x, y, d = x0, y0, d0
    limit = 4 * p.size + 4
    while True:
        if len(xs) > limit:
            raise RuntimeError("boundary walk failed to close")
        xs.append(x)
        ys.append(y)
        ds.append(d)
        used.add((x, y, d))
        dx, dy = DIRS[d]
        x += dx
        y += dy
        valid = _valid_dirs(p, x, y)
        # prefer right turn, then straight, then left; reversing only when
        # the corner offers nothing else (an isolated crack cannot occur)
        for turn in (1, 0, 3, 2):
            nd = (d + turn) % 4
            if valid[nd]:
                break
        else:
            raise RuntimeError("boundary walk left the mask edge")
        if (x, y, nd) == (x0, y0, d0):
            break
        d = nd
    # a corner is a vertex when the outgoing direction differs from the
    # incoming one; the seed corner's incoming edge is the cycle's last
    pts = [
        (float(xs[k]), float(ys[k]))
        for k in range(len(xs))
        if ds[k] != ds[k - 1]
    ]
    return np.asarray(pts, dtype=float)


def _chain_keep(pts, tol):
    """Douglas-Peucker keep flags for an open chain, distances measured to
    the chord segment (endpoints clamped)."""
    n = len(pts)
    keep = np.zeros(n, dtype=bool)
    keep[0] = keep[-1] = True
    stack = [(0, n - 1)]
    while stack:
        i, j = stack.pop()
        if j <= i + 1:
            continue
        a = pts[i]
        seg = pts[j] - a
        L2 = float(seg @ seg)
        mid = pts[i + 1 : j]
        if L2 <= 1e-24:
            dist = np.linalg.norm(mid - a, axis=1)
        else:
            t = np.clip((mid - a) @ seg / L2, 0.0, 1.0)
            dist = np.linalg.norm(mid - a - t[:, None] * seg, axis=1)
        k = int(np.argmax(dist))
        if dist[k] > tol:
            k += i + 1
            keep[k] = True
            stack.append((i, k))
            stack.append((k, j))
    return keep


def simplify_ring(ring, tol):
    """Simplify a closed ring, splitting at the vertex farthest from the
    first so both half-chains have stable anchors. A ring that collapses
    below the tolerance can come back with fewer than 3 vertices; such
    rings rasterize to nothing."""
    pts = np.asarray(ring, dtype=float)
    if len(pts) <= 3 or tol <= 0:
        return pts.copy()
    far = int(np.argmax(np.linalg.norm(pts - pts[0], axis=1)))
    if far == 0:
        return pts[:1].copy()
    ka = _chain_keep(pts[: far + 1], tol)
    kb = _chain_keep(np.vstack([pts[far:], pts[:1]]), tol)
    out = np.vstack([pts[: far + 1][ka][:-1], np.vstack([pts[far:], pts[:1]])[kb][:-1]])
    return out


def ring_signed_area(ring):
    """Shoelace area with sign; outer rings from trace_boundaries come out
    negative (their winding is clockwise in image coordinates), holes
    positive."""
    pts = np.asarray(ring, dtype=float)
    if len(pts) < 3:
        return 0.0
    x = pts[:, 0]
    y = pts[:, 1]
    return float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))) / 2.0


def mask_to_boundary_polygon(mask, simplify_tol=1.0):
    """Outer boundary polygons of a mask's connected components.

    Hole rings are discarded, so re-rasterizing fills any enclosed holes.
    With simplify_tol = 0 the outer shapes are kept exactly; the default
    1.0 px drops staircase detail and collapses features about a pixel
    across.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("empty mask has no boundary")
    rings = [r for r in trace_boundaries(mask) if ring_signed_area(r) < 0]
    if simplify_tol > 0:
        rings = [simplify_ring(r, simplify_tol) for r in rings]
    return rings


def polygon_area(ring):
    """Unsigned shoelace area of one ring."""
    return abs(ring_signed_area(ring))


def polygon_perimeter(ring):
    pts = np.asarray(ring, dtype=float)
    if len(pts) < 2:
        return 0.0
    return float(np.linalg.norm(np.diff(np.vstack([pts, pts[:1]]), axis=0), axis=1).sum())
