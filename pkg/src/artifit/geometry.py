"""Pinhole camera math, plane/axis parameterizations, 2D<->3D lifting, and
rigid transforms about an axis.

Conventions: camera frame is +z forward, +x right, +y down; pixel origin at
the top-left corner. A plane is n.x = o with unit normal n and offset o >= 0.
An image line is stored in normal form x*cos(theta) + y*sin(theta) = p with
theta in [0, pi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

PARALLEL_EPS = 1e-9


class DegenerateGeometryError(ValueError):
    """A geometrically degenerate input (parallel planes, zero vectors, ...)."""


def _vec(x, n):
    v = np.asarray(x, dtype=float)
    if v.shape != (n,):
        raise ValueError(f"expected {n}-vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite vector")
    return v


def _unit(v):
    norm = float(np.linalg.norm(v))
    if norm <= PARALLEL_EPS:
        raise DegenerateGeometryError("cannot normalize near-zero vector")
    # skip the division when already unit so renormalizing is bit-exact
    if abs(norm - 1.0) > 1e-12:
        v = v / norm
    return v


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole parameters: focal lengths, principal point, image size (pixels)."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if self.width < 1 or self.height < 1:
            raise ValueError("image size must be at least 1x1")

    def matrix(self):
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )

    def scaled_to(self, width, height):
        """Proportionally rescaled intrinsics for a different image size."""
        sx = width / self.width
        sy = height / self.height
        return CameraIntrinsics(
            fx=self.fx * sx,
            fy=self.fy * sy,
            cx=self.cx * sx,
            cy=self.cy * sy,
            width=width,
            height=height,
        )


# ScanNet-style defaults, used when the input carries no calibration.
DEFAULT_INTRINSICS = CameraIntrinsics(
    fx=577.87, fy=577.87, cx=319.5, cy=239.5, width=640, height=480
)


def default_intrinsics_for(width, height):
    return DEFAULT_INTRINSICS.scaled_to(width, height)


@dataclass(frozen=True, eq=False)
class Plane:
    """Plane n.x = o, canonicalized to a unit normal and o >= 0."""

    normal: np.ndarray
    offset: float

    def __init__(self, normal, offset):
        n = _unit(_vec(normal, 3))
        o = float(offset)
        if not math.isfinite(o):
            raise ValueError("non-finite plane offset")
        if o < 0:
            n = -n
            o = -o
        n.setflags(write=False)
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", o + 0.0)

    def signed_distance(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return pts @ self.normal - self.offset

    def __eq__(self, other):
        return (
            isinstance(other, Plane)
            and np.array_equal(self.normal, other.normal)
            and self.offset == other.offset
        )


@dataclass(frozen=True)
class ProjectedAxis:
    """Image line x*cos(theta) + y*sin(theta) = p, theta canonicalized to [0, pi).

    p is a signed offset in pixels; it is >= 0 whenever the line admits that
    with theta in [0, pi). Translation axes carry p = 0 by convention (only
    the direction of the line is meaningful).
    """

    theta: float
    p: float = 0.0

    def __post_init__(self):
        theta = float(self.theta)
        p = float(self.p)
        if not (math.isfinite(theta) and math.isfinite(p)):
            raise ValueError("non-finite line parameters")
        k = math.floor(theta / math.pi)
        theta = theta - k * math.pi
        if theta >= math.pi:  # guard float fold-down at the boundary
            theta -= math.pi
            k += 1
        if k % 2 != 0:
            p = -p
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "p", p + 0.0)

    def normal2d(self):
        return np.array([math.cos(self.theta), math.sin(self.theta)])

    def direction2d(self):
        return np.array([-math.sin(self.theta), math.cos(self.theta)])

    def foot(self):
        """Point on the line closest to the pixel origin."""
        return self.p * self.normal2d()

    def residual(self, points):
        """x*cos(theta) + y*sin(theta) - p for each point; 0 on the line."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return pts @ self.normal2d() - self.p


@dataclass(frozen=True, eq=False)
class Axis3D:
    """3D articulation axis: a line (rotation) or a direction (translation)."""

    kind: str
    point: np.ndarray = field(default_factory=lambda: np.zeros(3))
    direction: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __init__(self, kind, point, direction):
        if kind not in ("rotation", "translation"):
            raise ValueError(f"unknown axis kind {kind!r}")
        p = _vec(point, 3)
        d = _unit(_vec(direction, 3))
        p.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "point", p)
        object.__setattr__(self, "direction", d)


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """x' = R x + t with R orthonormal, det +1."""

    rotation: np.ndarray
    translation: np.ndarray

    def __init__(self, rotation, translation):
        R = np.asarray(rotation, dtype=float)
        t = _vec(translation, 3)
        if R.shape != (3, 3):
            raise ValueError("rotation must be 3x3")
        if np.max(np.abs(R.T @ R - np.eye(3))) > 1e-9:
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise ValueError("rotation must have det +1")
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    def apply(self, points):
        pts = np.asarray(points, dtype=float)
        return pts @ self.rotation.T + self.translation


def encode_axis_angle(theta):
    """Lift a 180-degree-ambiguous line angle to the unit circle: [sin 2t, cos 2t]."""
    theta = float(theta)
    if not math.isfinite(theta):
        raise ValueError("non-finite angle")
    return np.array([math.sin(2.0 * theta), math.cos(2.0 * theta)])


def decode_axis_angle(v):
    """Inverse of encode_axis_angle, returning theta in [0, pi)."""
    v = _vec(v, 2)
    if np.linalg.norm(v) <= 1e-9:
        raise DegenerateGeometryError("near-zero angle encoding")
    theta = 0.5 * math.atan2(v[0], v[1])
    if theta < 0:
        theta += math.pi
    if theta >= math.pi:
        theta -= math.pi
    return theta


def axis_from_endpoints(p1, p2):
    """Normal-form line through two pixel points."""
    p1 = _vec(p1, 2)
    p2 = _vec(p2, 2)
    d = p2 - p1
    if np.linalg.norm(d) <= 1e-6:
        raise DegenerateGeometryError("coincident endpoints")
    n = np.array([-d[1], d[0]])
    n = n / np.linalg.norm(n)
    theta = math.atan2(n[1], n[0])
    return ProjectedAxis(theta=theta, p=float(n @ p1))


def backproject_to_plane(K, pixel, plane):
    """Intersect the viewing ray of a pixel with a plane; returns a 3D point."""
    pixel = _vec(pixel, 2)
    ray = np.array(
        [(pixel[0] - K.cx) / K.fx, (pixel[1] - K.cy) / K.fy, 1.0]
    )
    ray = ray / np.linalg.norm(ray)
    denom = float(plane.normal @ ray)
    if abs(denom) <= PARALLEL_EPS:
        raise DegenerateGeometryError("viewing ray is parallel to the plane")
    s = plane.offset / denom
    if s <= 0:
        raise DegenerateGeometryError("plane intersection behind the camera")
    return s * ray


def project_points(K, points):
    """Pinhole projection of 3D points with positive depth to pixels."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    z = pts[:, 2]
    if np.any(z <= PARALLEL_EPS):
        bad = int(np.sum(z <= PARALLEL_EPS))
        raise DegenerateGeometryError(f"{bad} point(s) at non-positive depth")
    u = K.fx * pts[:, 0] / z + K.cx
    v = K.fy * pts[:, 1] / z + K.cy
    return np.stack([u, v], axis=1)


def _canonical_direction(d):
    """Flip the sign so the largest-magnitude component is positive."""
    i = int(np.argmax(np.abs(d)))
    return -d if d[i] < 0 else d


def lift_rotation_axis(K, axis, plane):
    """Lift an image line to the 3D line where its back-projection plane meets
    the object plane."""
    # homogeneous image line (cos t, sin t, -p); back-projection plane normal K^T l
    l = np.array([math.cos(axis.theta), math.sin(axis.theta), -axis.p])
    m = K.matrix().T @ l
    m = m / np.linalg.norm(m)
    d = np.cross(m, plane.normal)
    if np.linalg.norm(d) <= 1e-9:
        raise DegenerateGeometryError(
            "image line back-projects parallel to the object plane"
        )
    d = _canonical_direction(d / np.linalg.norm(d))
    # minimum-norm point on both planes: m.x = 0, n.x = o
    A = np.stack([m, plane.normal])
    b = np.array([0.0, plane.offset])
    point, *_ = np.linalg.lstsq(A, b, rcond=None)
    if np.max(np.abs(A @ point - b)) > 1e-8:
        raise DegenerateGeometryError("ill-conditioned plane intersection")
    return Axis3D("rotation", point, d)


def lift_translation_axis(K, axis, plane, anchor):
    """Candidate 3D directions for a translation whose image direction is the
    given line: the in-plane direction that projects onto it, and the plane
    normal. Returns a list of two unit vectors."""
    anchor = _vec(anchor, 2)
    d_img = axis.direction2d()
    x0 = backproject_to_plane(K, anchor, plane)
    x1 = backproject_to_plane(K, anchor + d_img, plane)
    chord = x1 - x0
    norm = np.linalg.norm(chord)
    if norm <= PARALLEL_EPS:
        raise DegenerateGeometryError("degenerate in-plane chord")
    return [chord / norm, plane.normal.copy()]


def rotation_transform(axis, alpha):
    """Rodrigues rotation by alpha about the axis line; fixes every axis point."""
    if axis.kind != "rotation":
        raise ValueError("rotation_transform requires a rotation axis")
    d = axis.direction
    c, s = math.cos(alpha), math.sin(alpha)
    Kd = np.array(
        [[0.0, -d[2], d[1]], [d[2], 0.0, -d[0]], [-d[1], d[0], 0.0]]
    )
    R = np.eye(3) + s * Kd + (1.0 - c) * (Kd @ Kd)
    t = axis.point - R @ axis.point
    return RigidTransform(R, t)


def translation_transform(direction, alpha):
    """Pure translation by alpha meters along a unit direction."""
    d = _unit(_vec(direction, 3))
    return RigidTransform(np.eye(3), alpha * d)


def transform_for(axis, alpha):
    """Rigid step of articulation degree alpha along/about a 3D axis."""
    if axis.kind == "rotation":
        return rotation_transform(axis, alpha)
    return translation_transform(axis.direction, alpha)


def project_axis3d(K, axis):
    """Normal-form image line of a 3D axis. Translation axes get p = 0."""
    pz = float(axis.point[2])
    dz = float(axis.direction[2])
    if abs(dz) > PARALLEL_EPS:
        # pick two points at fixed positive depths
        ts = [(1.0 - pz) / dz, (2.0 - pz) / dz]
    else:
        if pz <= PARALLEL_EPS:
            raise DegenerateGeometryError("3D line entirely behind the camera")
        ts = [0.0, 1.0]
    pts = np.stack([axis.point + t * axis.direction for t in ts])
    pix = project_points(K, pts)
    if np.linalg.norm(pix[1] - pix[0]) <= 1e-9:
        raise DegenerateGeometryError("3D line projects to a single point")
    line = axis_from_endpoints(pix[0], pix[1])
    if axis.kind == "translation":
        return ProjectedAxis(theta=line.theta, p=0.0)
    return line


def clip_line_to_image(axis, width, height):
    """Segment of an infinite image line inside [0,width]x[0,height], or None."""
    p0 = axis.foot()
    d = axis.direction2d()
    tmin, tmax = -math.inf, math.inf
    for coord, lo, hi in ((0, 0.0, float(width)), (1, 0.0, float(height))):
        if abs(d[coord]) <= 1e-12:
            if not (lo - 1e-9 <= p0[coord] <= hi + 1e-9):
                return None
            continue
        t0 = (lo - p0[coord]) / d[coord]
        t1 = (hi - p0[coord]) / d[coord]
        if t0 > t1:
            t0, t1 = t1, t0
        tmin = max(tmin, t0)
        tmax = min(tmax, t1)
    if not (tmin < tmax):
        return None
    return np.stack([p0 + tmin * d, p0 + tmax * d])


def line_difference(a, b):
    """(acute theta difference, offset difference) between two lines,
    comparing b against a in a's half-turn representation."""
    dt = b.theta - a.theta
    pb = b.p
    if dt > math.pi / 2:
        dt -= math.pi
        pb = -pb
    elif dt < -math.pi / 2:
        dt += math.pi
        pb = -pb
    return abs(dt), abs(pb - a.p)
