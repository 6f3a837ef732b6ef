"""Deterministic synthetic race scenes: ground truth, detector noise, dataset export.

Cars run a planar ellipse with closed-form poses, so every frame's ground
truth is exact and automatically tagged.  A seeded noise model corrupts the
projected boxes into Detections, standing in for a neural detector.

Noise draw order, per car in driver_id order (one shared SplitMix64 stream,
seeded from the scenario seed; see :mod:`raceoverlay.rng` for the generator
and Gaussian definitions):

1. one unit draw for the dropout Bernoulli (dropped when u < dropout_prob);
   dropped cars consume nothing further;
2. one polar Gaussian pair jittering the box center (first value u-axis,
   second v-axis, sigma = center_jitter_sigma);
3. one polar Gaussian pair for the size factor 1 + g * size_jitter_sigma
   applied to width and height (second value of the pair discarded), each
   clamped to at least 1 px;
4. one unit draw mapped to [confidence_floor, 1) for the confidence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import rng
from .errors import BehindCamera, DegenerateGeometry
from .geometry import BBox, CameraModel, CuboidHull, EulerAngles, Pose3, observation_yaw, project_cuboid, wrap_angle


@dataclass(frozen=True)
class NoiseConfig:
    """Detector noise parameters (defaults are placeholders, not measurements)."""

    center_jitter_sigma: float = 2.0
    size_jitter_sigma: float = 0.05
    dropout_prob: float = 0.05
    confidence_floor: float = 0.5

    def __post_init__(self) -> None:
        if self.center_jitter_sigma < 0 or self.size_jitter_sigma < 0:
            raise ValueError("jitter sigmas must be nonnegative")
        if not 0.0 <= self.dropout_prob <= 1.0:
            raise ValueError("dropout_prob must lie in [0, 1]")
        if not 0.0 <= self.confidence_floor < 1.0:
            raise ValueError("confidence_floor must lie in [0, 1)")


@dataclass(frozen=True)
class CarSpec:
    """One car: identity, hull dimensions, and its motion along the ellipse."""

    driver_id: int
    length: float = 4.5
    width: float = 1.8
    height: float = 1.2
    angular_speed: float = 0.1
    phase: float = 0.0


@dataclass(frozen=True)
class ScenarioConfig:
    """A full synthetic scenario: track, cars, camera, frame rate, noise, seed."""

    track_a: float
    track_b: float
    cars: tuple[CarSpec, ...]
    camera: CameraModel
    fps: float = 25.0
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.track_a <= 0 or self.track_b <= 0:
            raise ValueError("track semi-axes must be positive")
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        ids = [car.driver_id for car in self.cars]
        if len(ids) != len(set(ids)):
            raise ValueError("driver_ids must be unique")
        for car in self.cars:
            if not math.isfinite(car.angular_speed):
                raise ValueError(f"angular_speed for driver {car.driver_id} must be finite")


@dataclass(frozen=True)
class GroundTruthCar:
    """One car's exact state in one frame."""

    driver_id: int
    pose: Pose3
    hull: CuboidHull
    bbox: BBox
    observation_yaw: float


@dataclass(frozen=True)
class GroundTruthFrame:
    """All visible cars of one frame, sorted by driver_id."""

    frame_id: int
    cars: tuple[GroundTruthCar, ...]


@dataclass(frozen=True)
class Detection:
    """One detector observation: identity, box, confidence."""

    driver_id: int
    bbox: BBox
    confidence: float
    frame_id: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must lie in [0, 1]")


def car_pose_at(config: ScenarioConfig, car_index: int, time_s: float) -> Pose3:
    """Closed-form pose on the ellipse at a given time.

    Position is (a cos(wt + phi), b sin(wt + phi), 0); yaw is the velocity
    tangent heading (reversed for negative angular speed), pitch and roll 0.
    """
    car = config.cars[car_index]
    theta = car.angular_speed * time_s + car.phase
    x = config.track_a * math.cos(theta)
    y = config.track_b * math.sin(theta)
    sign = -1.0 if car.angular_speed < 0 else 1.0
    yaw = math.atan2(sign * config.track_b * math.cos(theta), -sign * config.track_a * math.sin(theta))
    return Pose3(position=(x, y, 0.0), orientation=EulerAngles(yaw=wrap_angle(yaw)))


def _car_hull(config: ScenarioConfig, car_index: int, pose: Pose3) -> CuboidHull:
    car = config.cars[car_index]
    return CuboidHull(length=car.length, width=car.width, height=car.height, pose=pose)


def _fully_outside(bbox: BBox, image_size: tuple[int, int]) -> bool:
    width, height = image_size
    return bbox.x_max < 0 or bbox.y_max < 0 or bbox.x_min > width or bbox.y_min > height


def ground_truth_frame(config: ScenarioConfig, frame_id: int) -> GroundTruthFrame:
    """Ground truth for frame ``frame_id`` at time frame_id / fps.

    Cars that project behind the camera or land fully outside the image are
    omitted (tagged absent).
    """
    time_s = frame_id / config.fps
    cars = []
    for index in range(len(config.cars)):
        pose = car_pose_at(config, index, time_s)
        hull = _car_hull(config, index, pose)
        try:
            projection = project_cuboid(config.camera, hull)
            obs_yaw = observation_yaw(config.camera, pose)
        except (BehindCamera, DegenerateGeometry):
            continue
        if _fully_outside(projection.bbox, config.camera.image_size):
            continue
        cars.append(
            GroundTruthCar(
                driver_id=config.cars[index].driver_id,
                pose=pose,
                hull=hull,
                bbox=projection.bbox,
                observation_yaw=obs_yaw,
            )
        )
    cars.sort(key=lambda car: car.driver_id)
    return GroundTruthFrame(frame_id=frame_id, cars=tuple(cars))


def ground_truth_sequence(config: ScenarioConfig, frame_count: int) -> list[GroundTruthFrame]:
    """Frames 0 .. frame_count-1 with strictly increasing frame ids."""
    return [ground_truth_frame(config, frame_id) for frame_id in range(frame_count)]


def corrupt_detections(
    frame: GroundTruthFrame,
    noise: NoiseConfig,
    rng_state: int,
) -> tuple[list[Detection], int]:
    """Apply the seeded noise model to one frame of ground truth.

    Returns the surviving detections (driver_id order) and the advanced RNG
    state.  The draw order per car is documented in the module docstring.
    """
    detections: list[Detection] = []
    for car in frame.cars:
        rng_state, u_drop = rng.next_unit(rng_state)
        if u_drop < noise.dropout_prob:
            continue
        rng_state, g_cu, g_cv = rng.next_gaussian_pair(rng_state)
        rng_state, g_size, _unused = rng.next_gaussian_pair(rng_state)
        rng_state, u_conf = rng.next_unit(rng_state)

        cx, cy = car.bbox.center
        cx += g_cu * noise.center_jitter_sigma
        cy += g_cv * noise.center_jitter_sigma
        scale = 1.0 + g_size * noise.size_jitter_sigma
        new_w = max(1.0, car.bbox.width * scale)
        new_h = max(1.0, car.bbox.height * scale)
        confidence = noise.confidence_floor + u_conf * (1.0 - noise.confidence_floor)
        detections.append(
            Detection(
                driver_id=car.driver_id,
                bbox=BBox(cx - new_w / 2.0, cy - new_h / 2.0, cx + new_w / 2.0, cy + new_h / 2.0),
                confidence=confidence,
                frame_id=frame.frame_id,
            )
        )
    return detections, rng_state


def export_dataset(
    sequence: list[GroundTruthFrame],
    detections_per_frame: list[list[Detection]],
    path,
    prior_set=None,
) -> int:
    """Write one canonical JSON record per (frame, car) to ``path``.

    Records carry the ground-truth box, the noisy box when the detector kept
    the car, the observation yaw, and the nearest prior index.  Returns the
    record count; I/O failures surface as OSError.
    """
    from .priors import assign_priors, make_prior_set
    from .protocol import DatasetRecord, encode

    if prior_set is None:
        prior_set = make_prior_set(18)
    count = 0
    with open(path, "wb") as handle:
        for frame, detections in zip(sequence, detections_per_frame):
            by_driver = {det.driver_id: det for det in detections}
            for car in frame.cars:
                detection = by_driver.get(car.driver_id)
                record = DatasetRecord(
                    frame_id=frame.frame_id,
                    driver_id=car.driver_id,
                    gt_bbox=car.bbox,
                    det_bbox=detection.bbox if detection is not None else None,
                    observation_yaw=car.observation_yaw,
                    prior_index=assign_priors(prior_set, car.observation_yaw).nearest_index,
                )
                handle.write(encode(record))
                count += 1
    return count
