"""artifit: fit 3D planar articulation models (hinges and sliders) to
per-frame plane detections, plus the synthetic scenes and metrics used to
validate the fits."""

__version__ = "0.1.0"

from .geometry import (
    Axis3D,
    CameraIntrinsics,
    DEFAULT_INTRINSICS,
    DegenerateGeometryError,
    Plane,
    ProjectedAxis,
    RigidTransform,
)

__all__ = [
    "Axis3D",
    "CameraIntrinsics",
    "DEFAULT_INTRINSICS",
    "DegenerateGeometryError",
    "Plane",
    "ProjectedAxis",
    "RigidTransform",
    "__version__",
]
