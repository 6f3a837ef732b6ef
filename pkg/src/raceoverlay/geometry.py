"""Pinhole camera model, extrinsic-Euler rotations, cuboid hulls, projection.

Conventions (fixed; golden tests depend on them):

* World frame is right-handed, z up.  Angles are extrinsic Z-Y-X Euler:
  ``R = Rz(yaw) @ Ry(pitch) @ Rx(roll)`` about fixed world axes.
* The camera looks along its local +x axis, +y is left, +z is up.  Image u
  grows rightward, v grows downward:
  ``u = cu - f * (y_cam / x_cam)``, ``v = cv - f * (z_cam / x_cam)``.
* Angle wrapping is ``theta - 2*pi*floor((theta + pi) / (2*pi))``, which maps
  onto [-pi, pi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import kernels
from .errors import BehindCamera, DegenerateGeometry

Matrix3 = tuple[
    tuple[float, float, float],
    tuple[float, float, float],
    tuple[float, float, float],
]

_HALF_PI = math.pi / 2.0


def wrap_angle(theta: float) -> float:
    """Wrap an angle to [-pi, pi)."""
    return kernels.wrap_angle(theta)


@dataclass(frozen=True)
class EulerAngles:
    """Extrinsic Z-Y-X Euler angles; yaw/roll in [-pi, pi), pitch in [-pi/2, pi/2]."""

    yaw: float = 0.0
    pitch: float = 0.0
    roll: float = 0.0

    def __post_init__(self) -> None:
        if not (-math.pi <= self.yaw < math.pi):
            raise ValueError(f"yaw {self.yaw} outside [-pi, pi)")
        if not (-_HALF_PI <= self.pitch <= _HALF_PI):
            raise ValueError(f"pitch {self.pitch} outside [-pi/2, pi/2]")
        if not (-math.pi <= self.roll < math.pi):
            raise ValueError(f"roll {self.roll} outside [-pi, pi)")


@dataclass(frozen=True)
class Pose3:
    """A rigid pose: world position in meters plus orientation."""

    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    orientation: EulerAngles = field(default_factory=EulerAngles)


@dataclass(frozen=True)
class CuboidHull:
    """Axis-aligned box in its local frame, placed in the world by ``pose``.

    The pose position is the hull center; corners sit at (+-length/2,
    +-width/2, +-height/2) in the local frame.
    """

    length: float
    width: float
    height: float
    pose: Pose3 = field(default_factory=Pose3)

    def __post_init__(self) -> None:
        if self.length <= 0 or self.width <= 0 or self.height <= 0:
            raise ValueError("hull dimensions must be positive")


@dataclass(frozen=True)
class CameraModel:
    """Pinhole camera: world pose, focal length and principal point in pixels."""

    pose: Pose3
    focal_length: float
    principal_point: tuple[float, float]
    image_size: tuple[int, int]

    def __post_init__(self) -> None:
        if self.focal_length <= 0:
            raise ValueError("focal_length must be positive")
        if self.image_size[0] <= 0 or self.image_size[1] <= 0:
            raise ValueError("image_size components must be positive")


@dataclass(frozen=True)
class BBox:
    """Axis-aligned pixel box with x_min <= x_max and y_min <= y_max."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(f"degenerate bbox {self}")

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min


@dataclass(frozen=True)
class CuboidProjection:
    """Projected hull: 8 corner pixels in fixed order plus their enclosing box."""

    corners: tuple[tuple[float, float], ...]
    bbox: BBox


def euler_to_rotation(angles: EulerAngles) -> Matrix3:
    """Rotation matrix Rz(yaw) @ Ry(pitch) @ Rx(roll) about fixed world axes."""
    r = kernels.rotation_matrix(angles.yaw, angles.pitch, angles.roll)
    return ((r[0], r[1], r[2]), (r[3], r[4], r[5]), (r[6], r[7], r[8]))


def _flat_rotation(angles: EulerAngles) -> tuple:
    return kernels.rotation_matrix(angles.yaw, angles.pitch, angles.roll)


def project_point(camera: CameraModel, point: tuple[float, float, float]) -> tuple[float, float]:
    """Project a world point; raises BehindCamera when camera-frame depth <= 0."""
    cx, cy, cz = camera.pose.position
    u, v, depth = kernels.project_point_k(
        _flat_rotation(camera.pose.orientation),
        cx,
        cy,
        cz,
        camera.focal_length,
        camera.principal_point[0],
        camera.principal_point[1],
        point[0],
        point[1],
        point[2],
    )
    if depth <= 0.0:
        raise BehindCamera(f"point {point} has camera-frame depth {depth}")
    return (u, v)


def project_cuboid(camera: CameraModel, hull: CuboidHull) -> CuboidProjection:
    """Project all 8 hull corners; raises BehindCamera if any is at depth <= 0.

    Corner order follows the local-frame sign pattern ---, +--, ++-, -+-,
    --+, +-+, +++, -++ over (length/2, width/2, height/2).  The box is the
    tight min/max over the projected corners.
    """
    cx, cy, cz = camera.pose.position
    ox, oy, oz = hull.pose.position
    uv, box, min_depth = kernels.project_cuboid_k(
        _flat_rotation(camera.pose.orientation),
        cx,
        cy,
        cz,
        camera.focal_length,
        camera.principal_point[0],
        camera.principal_point[1],
        _flat_rotation(hull.pose.orientation),
        ox,
        oy,
        oz,
        hull.length / 2.0,
        hull.width / 2.0,
        hull.height / 2.0,
    )
    if min_depth <= 0.0:
        raise BehindCamera(f"hull corner at camera-frame depth {min_depth}")
    corners = tuple((uv[2 * i], uv[2 * i + 1]) for i in range(8))
    return CuboidProjection(corners=corners, bbox=BBox(box[0], box[1], box[2], box[3]))


def observation_yaw(camera: CameraModel, pose: Pose3) -> float:
    """Viewpoint-relative yaw: the object's heading minus the camera-to-object bearing.

    This is the allocentric angle the prior bins discretize.  Raises
    DegenerateGeometry when object and camera share a ground-plane position.
    """
    dx = pose.position[0] - camera.pose.position[0]
    dy = pose.position[1] - camera.pose.position[1]
    if dx == 0.0 and dy == 0.0:
        raise DegenerateGeometry("object is at the camera's ground position")
    bearing = math.atan2(dy, dx)
    return wrap_angle(pose.orientation.yaw - bearing)
