import math

import pytest

from raceoverlay.geometry import CameraModel, EulerAngles, Pose3
from raceoverlay.scenesim import CarSpec, NoiseConfig, ScenarioConfig


@pytest.fixture
def camera0() -> CameraModel:
    """Camera at the origin looking along +x; focal 1000, 1280x720 image."""
    return CameraModel(
        pose=Pose3(position=(0.0, 0.0, 0.0), orientation=EulerAngles()),
        focal_length=1000.0,
        principal_point=(640.0, 360.0),
        image_size=(1280, 720),
    )


@pytest.fixture
def trackside_camera() -> CameraModel:
    """Elevated camera south of the track, looking north over the whole ellipse."""
    return CameraModel(
        pose=Pose3(position=(0.0, -260.0, 40.0), orientation=EulerAngles(yaw=math.pi / 2, pitch=0.1)),
        focal_length=600.0,
        principal_point=(640.0, 360.0),
        image_size=(1280, 720),
    )


def make_scenario(camera: CameraModel, car_count: int = 2, seed: int = 42, **kwargs) -> ScenarioConfig:
    cars = tuple(
        CarSpec(
            driver_id=i + 1,
            angular_speed=0.06 + 0.004 * i,
            phase=i * math.tau / max(car_count, 1),
        )
        for i in range(car_count)
    )
    defaults = dict(track_a=120.0, track_b=80.0, cars=cars, camera=camera, fps=25.0, seed=seed)
    defaults.update(kwargs)
    return ScenarioConfig(**defaults)


@pytest.fixture
def scenario(trackside_camera) -> ScenarioConfig:
    return make_scenario(trackside_camera)


@pytest.fixture
def quiet_scenario(trackside_camera) -> ScenarioConfig:
    """No dropout, no jitter: detections equal ground truth boxes."""
    return make_scenario(
        trackside_camera,
        noise=NoiseConfig(
            center_jitter_sigma=0.0,
            size_jitter_sigma=0.0,
            dropout_prob=0.0,
            confidence_floor=0.5,
        ),
    )
