"""18-bin orientation priors: nearest-6 soft assignment and its inverse.

The default prior set has 18 yaw bins at 20 degree spacing.  An observation
yaw is expressed as normalized triangular-kernel weights (half-width three
bin spacings) over the 6 circularly nearest bins; with that kernel the
nonzero-weight set and the nearest-6 support coincide for generic angles,
and the weighted mean reproduces the angle exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import kernels
from .errors import InvalidBinCount, ZeroVector
from .geometry import CameraModel, CuboidHull, observation_yaw, project_cuboid, wrap_angle


@dataclass(frozen=True)
class PriorSet:
    """Equally spaced yaw bins; center k sits at wrap(k * 2*pi / bin_count)."""

    bin_count: int
    centers: tuple[float, ...]

    @property
    def spacing(self) -> float:
        return math.tau / self.bin_count


@dataclass(frozen=True)
class PriorAssignment:
    """Nearest-6 support: (bin index, weight) pairs by increasing circular distance.

    Weights are nonnegative and sum to 1; ``nearest_index`` is the support
    bin circularly closest to the assigned angle.
    """

    nearest_index: int
    support: tuple[tuple[int, float], ...]


# Region ids: the four vertical faces, plus the front and rear faces split
# by the vertical longitudinal mid-plane.  The paired angle is the outward
# normal's direction in the object's local ground plane (0 = forward).
FACE_REGIONS: tuple[tuple[str, float], ...] = (
    ("front", 0.0),
    ("rear", math.pi),
    ("left", math.pi / 2.0),
    ("right", -math.pi / 2.0),
    ("front_left", 0.0),
    ("front_right", 0.0),
    ("rear_left", math.pi),
    ("rear_right", math.pi),
)


@dataclass(frozen=True)
class FaceRegionMap:
    """Region id -> prior bin index; every value comes from one assignment's support."""

    regions: dict[str, int]


def make_prior_set(bin_count: int = 18) -> PriorSet:
    """Build an equally spaced prior set; bin_count below 6 is rejected.

    Center k is wrap(k * 2*pi / bin_count), evaluated as (k - bin_count) *
    spacing on the upper half so that mirrored centers are exact negations
    and equidistant ties resolve exactly.
    """
    if bin_count < 6:
        raise InvalidBinCount(f"bin_count {bin_count} < 6: nearest-6 support undefined")
    spacing = math.tau / bin_count
    centers = tuple(
        (k - bin_count) * spacing if 2 * k >= bin_count else k * spacing
        for k in range(bin_count)
    )
    return PriorSet(bin_count=bin_count, centers=centers)


def assign_priors(prior_set: PriorSet, angle: float) -> PriorAssignment:
    """Soft-assign an angle to its 6 nearest bins.

    Raw weight per bin is max(0, 1 - d / (3 * spacing)) with d the circular
    distance; renormalized to sum 1.  Distance ties break toward the lower
    bin index.
    """
    indices, weights = kernels.prior_support(prior_set.bin_count, angle)
    support = tuple(zip(indices, weights))
    return PriorAssignment(nearest_index=indices[0], support=support)


def reconstruct_angle(prior_set: PriorSet, assignment: PriorAssignment) -> float:
    """Invert assign_priors: the weighted mean of the support centers.

    The mean is taken in the local chart around the nearest bin (all support
    offsets are unwrapped relative to it), which reproduces the assigned
    angle exactly for triangular weights on an equally spaced grid.  Raises
    ZeroVector when the weighted sine/cosine sums are both below 1e-15 in
    magnitude (no usable direction).
    """
    sin_sum = 0.0
    cos_sum = 0.0
    for index, weight in assignment.support:
        sin_sum += weight * math.sin(prior_set.centers[index])
        cos_sum += weight * math.cos(prior_set.centers[index])
    if abs(sin_sum) < 1e-15 and abs(cos_sum) < 1e-15:
        raise ZeroVector("support weights cancel; no reconstructable angle")
    reference = prior_set.centers[assignment.nearest_index]
    offset = 0.0
    for index, weight in assignment.support:
        offset += weight * wrap_angle(prior_set.centers[index] - reference)
    return wrap_angle(reference + offset)


def assign_face_regions(
    prior_set: PriorSet,
    assignment: PriorAssignment,
    hull: CuboidHull,
    camera: CameraModel,
) -> FaceRegionMap:
    """Map each cuboid face region to the support prior facing it most directly.

    Region normals are rotated into the camera-relative frame by the hull's
    observation yaw; each region takes the support prior whose direction
    maximizes the dot product with its outward normal (ties toward the lower
    bin index).  Raises BehindCamera when the hull is not projectable.
    """
    project_cuboid(camera, hull)  # validates projectability
    obs = observation_yaw(camera, hull.pose)
    regions: dict[str, int] = {}
    for region_id, normal_angle in FACE_REGIONS:
        direction = wrap_angle(obs + normal_angle)
        best_index = -1
        best_dot = -math.inf
        for index, _weight in assignment.support:
            dot = math.cos(direction - prior_set.centers[index])
            if dot > best_dot or (dot == best_dot and index < best_index):
                best_index = index
                best_dot = dot
        regions[region_id] = best_index
    return FaceRegionMap(regions=regions)


__all__ = [
    "FACE_REGIONS",
    "FaceRegionMap",
    "PriorAssignment",
    "PriorSet",
    "assign_face_regions",
    "assign_priors",
    "make_prior_set",
    "reconstruct_angle",
]
