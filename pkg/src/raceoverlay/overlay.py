"""Overlay anchors: where infographic elements attach, per track and template.

The back-end only computes anchor pixels; drawing is the console's job.  Part
anchors project a point on the car's hull, so they need the hull pose and the
camera; box-relative anchors need neither.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

from .errors import BehindCamera, MissingPose
from .geometry import CameraModel, CuboidHull, euler_to_rotation, project_point
from .tracker import Track, TrackState


class AnchorKind(str, enum.Enum):
    CENTER = "center"
    ABOVE_BOX = "above_box"
    PART = "part"


# part id -> local coordinates as fractions of (length/2, width/2, height),
# measured from the hull center; z grows upward from the center plane.
DEFAULT_PARTS: dict[str, tuple[float, float, float]] = {
    "front_left_tire": (0.8, 1.0, 0.0),
    "front_right_tire": (0.8, -1.0, 0.0),
    "rear_left_tire": (-0.8, 1.0, 0.0),
    "rear_right_tire": (-0.8, -1.0, 0.0),
    "driver": (0.0, 0.0, 0.75),
    "rear": (-1.0, 0.0, 0.4),
}


def validate_part_catalog(parts: Mapping[str, tuple[float, float, float]]) -> None:
    """Fractional part coordinates must lie in [-1, 1] x [-1, 1] x [0, 1]."""
    for part_id, (fx, fy, fz) in parts.items():
        if not (-1.0 <= fx <= 1.0 and -1.0 <= fy <= 1.0 and 0.0 <= fz <= 1.0):
            raise ValueError(f"part {part_id!r} coordinates out of range")


validate_part_catalog(DEFAULT_PARTS)


@dataclass(frozen=True)
class OverlayTemplate:
    """Operator-configured infographic element for one driver."""

    template_id: int
    driver_id: int
    anchor_kind: AnchorKind
    part_id: str | None = None
    offset: tuple[float, float] = (0.0, 0.0)
    label: str = ""
    color: tuple[int, int, int] = (255, 255, 255)
    enabled: bool = True

    def __post_init__(self) -> None:
        if self.anchor_kind is AnchorKind.PART:
            if self.part_id is None or self.part_id not in DEFAULT_PARTS:
                raise ValueError(f"unknown part_id {self.part_id!r}")
        elif self.part_id is not None:
            raise ValueError("part_id only applies to part anchors")


@dataclass(frozen=True)
class RenderItem:
    """One drawable anchor: where a template attaches this frame."""

    driver_id: int
    anchor: tuple[float, float]
    template: OverlayTemplate
    track_state: TrackState


def part_world_point(
    hull: CuboidHull, part_id: str, parts: Mapping[str, tuple[float, float, float]] = DEFAULT_PARTS
) -> tuple[float, float, float]:
    """A part's world position: fractional local coordinates through the hull pose."""
    fx, fy, fz = parts[part_id]
    lx = fx * hull.length / 2.0
    ly = fy * hull.width / 2.0
    lz = fz * hull.height
    r = euler_to_rotation(hull.pose.orientation)
    px, py, pz = hull.pose.position
    return (
        r[0][0] * lx + r[0][1] * ly + r[0][2] * lz + px,
        r[1][0] * lx + r[1][1] * ly + r[1][2] * lz + py,
        r[2][0] * lx + r[2][1] * ly + r[2][2] * lz + pz,
    )


def compute_anchor(
    track: Track,
    template: OverlayTemplate,
    hull: CuboidHull | None = None,
    camera: CameraModel | None = None,
) -> tuple[float, float]:
    """Anchor pixel for a template on a track.

    Center and AboveBox work from the smoothed track box alone; Part anchors
    project the hull part and raise MissingPose without hull and camera.
    BehindCamera propagates from the projection.
    """
    dx, dy = template.offset
    if template.anchor_kind is AnchorKind.CENTER:
        cx, cy = track.bbox.center
        return (cx + dx, cy + dy)
    if template.anchor_kind is AnchorKind.ABOVE_BOX:
        cx, _ = track.bbox.center
        return (cx + dx, track.bbox.y_min + dy)
    if hull is None or camera is None:
        raise MissingPose(f"part anchor {template.part_id!r} needs hull and camera")
    u, v = project_point(camera, part_world_point(hull, template.part_id))
    return (u + dx, v + dy)


def resolve_visible(
    templates: Sequence[OverlayTemplate],
    tracks: Sequence[Track],
    hulls: Mapping[int, CuboidHull] | None = None,
    camera: CameraModel | None = None,
    skip_unprojectable: bool = False,
) -> list[RenderItem]:
    """RenderItems for every enabled template whose driver has a live track.

    Output order is driver_id, then template list order, so the result is a
    deterministic function of its inputs.  With ``skip_unprojectable`` the
    pipeline drops part anchors it cannot compute this frame (missing pose,
    hull behind the camera) instead of propagating the error.
    """
    by_driver: dict[int, Track] = {track.driver_id: track for track in tracks}
    items: list[RenderItem] = []
    for driver_id in sorted(by_driver):
        track = by_driver[driver_id]
        for template in templates:
            if not template.enabled or template.driver_id != driver_id:
                continue
            hull = hulls.get(driver_id) if hulls else None
            try:
                anchor = compute_anchor(track, template, hull=hull, camera=camera)
            except (MissingPose, BehindCamera):
                if skip_unprojectable:
                    continue
                raise
            items.append(
                RenderItem(
                    driver_id=driver_id,
                    anchor=anchor,
                    template=template,
                    track_state=track.state,
                )
            )
    return items


def stack_collisions(items: Sequence[RenderItem], min_vertical_gap: float) -> list[RenderItem]:
    """Shift colliding labels upward until every near pair has vertical clearance.

    Two items collide when their anchors are closer than ``min_vertical_gap``
    vertically and ``2 * min_vertical_gap`` horizontally.  Later items (in
    driver order, which is list order) move above earlier ones; iteration
    stops at a fixed point, bounded by len(items)^2 passes.
    """
    result = list(items)
    if min_vertical_gap <= 0:
        return result
    for _pass in range(max(1, len(result)) ** 2):
        moved = False
        for j in range(len(result)):
            for i in range(j):
                ui, vi = result[i].anchor
                uj, vj = result[j].anchor
                if abs(ui - uj) < 2.0 * min_vertical_gap and abs(vi - vj) < min_vertical_gap:
                    result[j] = replace(result[j], anchor=(uj, vi - min_vertical_gap))
                    moved = True
        if not moved:
            break
    return result
