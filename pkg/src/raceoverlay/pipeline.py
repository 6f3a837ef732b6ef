"""Per-frame orchestration: simulate, corrupt, track, bin, anchor, publish.

The frame loop is single-threaded and owns the tracker state; subscriber
handling runs concurrently behind the latest-wins publication point, so the
loop never blocks on consumers.  A fixed-clock test mode replaces wall-clock
timestamps with frame_id * 10^6 / fps microseconds and skips pacing so that
recordings of the same seeded config are byte-comparable.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Sequence

from . import kernels
from .errors import ConfigError, Malformed, OverlayError
from .geometry import CameraModel, CuboidHull, EulerAngles, Pose3
from .overlay import AnchorKind, OverlayTemplate, resolve_visible, stack_collisions
from .priors import PriorSet, assign_priors, make_prior_set
from .protocol import (
    AnchorRecord,
    ConfigUpdate,
    FrameMessage,
    TrackRecord,
    canonical_line,
    decode,
    encode,
)
from .scenesim import (
    CarSpec,
    Detection,
    GroundTruthFrame,
    NoiseConfig,
    ScenarioConfig,
    corrupt_detections,
    ground_truth_frame,
    ground_truth_sequence,
)
from .server import ConfigStore, FrameBus, serve
from .tracker import TrackerParams, TrackerState, step

logger = logging.getLogger(__name__)

DEFAULT_LISTEN = "127.0.0.1:7878"
LABEL_STACK_GAP = 20.0


@dataclass(frozen=True)
class FrameClock:
    """Target frame rate and the per-frame deadline it implies."""

    fps: float

    def __post_init__(self) -> None:
        if self.fps <= 0:
            raise ValueError("fps must be positive")

    @property
    def deadline_s(self) -> float:
        return 1.0 / self.fps


@dataclass(frozen=True)
class PipelineConfig:
    scenario: ScenarioConfig
    tracker: TrackerParams = field(default_factory=TrackerParams)
    listen: str = DEFAULT_LISTEN
    fps: float = 25.0
    record: str | None = None
    replay: str | None = None
    templates: tuple[OverlayTemplate, ...] = ()
    fixed_clock: bool = False

    def __post_init__(self) -> None:
        if self.record is not None and self.replay is not None:
            raise ConfigError("record and replay are mutually exclusive")
        if self.fps <= 0:
            raise ConfigError("fps: must be positive")


# --- config file parsing -----------------------------------------------------
#
# The config file is a single JSON document mirroring PipelineConfig field
# names; see README.md for the full schema.  Validation errors name the
# offending path, e.g. "scenario.cars[1].driver_id: expected an integer".


def _cfg_get(obj: dict, key: str, path: str, default: Any = ...) -> Any:
    if key not in obj:
        if default is ...:
            raise ConfigError(f"{_p(path, key)}: missing required field")
        return default
    return obj[key]


def _p(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _cfg_number(obj: dict, key: str, path: str, default: Any = ...) -> float:
    value = _cfg_get(obj, key, path, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{_p(path, key)}: expected a number")
    return float(value)


def _cfg_int(obj: dict, key: str, path: str, default: Any = ...) -> int:
    value = _cfg_get(obj, key, path, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{_p(path, key)}: expected an integer")
    return value


def _cfg_str(obj: dict, key: str, path: str, default: Any = ...) -> str:
    value = _cfg_get(obj, key, path, default)
    if not isinstance(value, str):
        raise ConfigError(f"{_p(path, key)}: expected a string")
    return value


def _cfg_dict(obj: dict, key: str, path: str, default: Any = ...) -> dict:
    value = _cfg_get(obj, key, path, default)
    if not isinstance(value, dict):
        raise ConfigError(f"{_p(path, key)}: expected an object")
    return value


def _cfg_list(obj: dict, key: str, path: str, default: Any = ...) -> list:
    value = _cfg_get(obj, key, path, default)
    if not isinstance(value, list):
        raise ConfigError(f"{_p(path, key)}: expected an array")
    return value


def _cfg_vec(obj: dict, key: str, path: str, length: int) -> tuple[float, ...]:
    value = _cfg_get(obj, key, path)
    if not isinstance(value, list) or len(value) != length:
        raise ConfigError(f"{_p(path, key)}: expected an array of {length} numbers")
    for item in value:
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise ConfigError(f"{_p(path, key)}: expected an array of {length} numbers")
    return tuple(float(item) for item in value)


def _parse_camera(obj: dict, path: str) -> CameraModel:
    orientation = _cfg_dict(obj, "orientation", path, {})
    opath = _p(path, "orientation")
    angles = EulerAngles(
        yaw=_cfg_number(orientation, "yaw", opath, 0.0),
        pitch=_cfg_number(orientation, "pitch", opath, 0.0),
        roll=_cfg_number(orientation, "roll", opath, 0.0),
    )
    image_size = _cfg_get(obj, "image_size", path)
    if (
        not isinstance(image_size, list)
        or len(image_size) != 2
        or any(isinstance(v, bool) or not isinstance(v, int) for v in image_size)
    ):
        raise ConfigError(f"{_p(path, 'image_size')}: expected an array of 2 integers")
    try:
        return CameraModel(
            pose=Pose3(position=_cfg_vec(obj, "position", path, 3), orientation=angles),
            focal_length=_cfg_number(obj, "focal_length", path),
            principal_point=_cfg_vec(obj, "principal_point", path, 2),
            image_size=(image_size[0], image_size[1]),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_scenario(obj: dict, path: str) -> ScenarioConfig:
    track = _cfg_dict(obj, "track", path)
    cars_raw = _cfg_list(obj, "cars", path)
    cars = []
    for i, car in enumerate(cars_raw):
        cpath = f"{_p(path, 'cars')}[{i}]"
        if not isinstance(car, dict):
            raise ConfigError(f"{cpath}: expected an object")
        cars.append(
            CarSpec(
                driver_id=_cfg_int(car, "driver_id", cpath),
                length=_cfg_number(car, "length", cpath, 4.5),
                width=_cfg_number(car, "width", cpath, 1.8),
                height=_cfg_number(car, "height", cpath, 1.2),
                angular_speed=_cfg_number(car, "angular_speed", cpath, 0.1),
                phase=_cfg_number(car, "phase", cpath, 0.0),
            )
        )
    noise_raw = _cfg_dict(obj, "noise", path, {})
    npath = _p(path, "noise")
    try:
        noise = NoiseConfig(
            center_jitter_sigma=_cfg_number(noise_raw, "center_jitter_sigma", npath, 2.0),
            size_jitter_sigma=_cfg_number(noise_raw, "size_jitter_sigma", npath, 0.05),
            dropout_prob=_cfg_number(noise_raw, "dropout_prob", npath, 0.05),
            confidence_floor=_cfg_number(noise_raw, "confidence_floor", npath, 0.5),
        )
        return ScenarioConfig(
            track_a=_cfg_number(track, "a", _p(path, "track")),
            track_b=_cfg_number(track, "b", _p(path, "track")),
            cars=tuple(cars),
            camera=_parse_camera(_cfg_dict(obj, "camera", path), _p(path, "camera")),
            fps=_cfg_number(obj, "fps", path, 25.0),
            noise=noise,
            seed=_cfg_int(obj, "seed", path, 0),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_tracker(obj: dict, path: str) -> TrackerParams:
    try:
        return TrackerParams(
            confirm_hits=_cfg_int(obj, "confirm_hits", path, 3),
            max_misses=_cfg_int(obj, "max_misses", path, 5),
            smoothing_alpha=_cfg_number(obj, "smoothing_alpha", path, 0.6),
            gate_distance=_cfg_number(obj, "gate_distance", path, 150.0),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_template(obj: Any, path: str) -> OverlayTemplate:
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object")
    kind_text = _cfg_str(obj, "anchor_kind", path, "center")
    try:
        kind = AnchorKind(kind_text)
    except ValueError as exc:
        raise ConfigError(f"{_p(path, 'anchor_kind')}: unknown anchor kind {kind_text!r}") from exc
    offset = obj.get("offset", [0.0, 0.0])
    if (
        not isinstance(offset, list)
        or len(offset) != 2
        or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in offset)
    ):
        raise ConfigError(f"{_p(path, 'offset')}: expected an array of 2 numbers")
    color = obj.get("color", [255, 255, 255])
    if (
        not isinstance(color, list)
        or len(color) != 3
        or any(isinstance(v, bool) or not isinstance(v, int) for v in color)
    ):
        raise ConfigError(f"{_p(path, 'color')}: expected an array of 3 integers")
    enabled = obj.get("enabled", True)
    if not isinstance(enabled, bool):
        raise ConfigError(f"{_p(path, 'enabled')}: expected a boolean")
    try:
        return OverlayTemplate(
            template_id=_cfg_int(obj, "template_id", path),
            driver_id=_cfg_int(obj, "driver_id", path),
            anchor_kind=kind,
            part_id=_cfg_str(obj, "part_id", path) if "part_id" in obj else None,
            offset=(float(offset[0]), float(offset[1])),
            label=_cfg_str(obj, "label", path, ""),
            color=(color[0], color[1], color[2]),
            enabled=enabled,
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def default_templates(scenario: ScenarioConfig) -> tuple[OverlayTemplate, ...]:
    """One above-box label per driver, used when the config defines none."""
    return tuple(
        OverlayTemplate(
            template_id=car.driver_id,
            driver_id=car.driver_id,
            anchor_kind=AnchorKind.ABOVE_BOX,
            offset=(0.0, -12.0),
            label=f"#{car.driver_id}",
        )
        for car in scenario.cars
    )


def parse_config(raw: dict) -> PipelineConfig:
    """Build a PipelineConfig from a parsed JSON document."""
    if not isinstance(raw, dict):
        raise ConfigError("config root: expected an object")
    scenario = _parse_scenario(_cfg_dict(raw, "scenario", ""), "scenario")
    tracker = _parse_tracker(_cfg_dict(raw, "tracker", "", {}), "tracker")
    if "templates" in raw:
        templates_raw = _cfg_list(raw, "templates", "")
        templates = tuple(
            _parse_template(t, f"templates[{i}]") for i, t in enumerate(templates_raw)
        )
    else:
        templates = default_templates(scenario)
    record = raw.get("record")
    replay_path = raw.get("replay")
    if record is not None and not isinstance(record, str):
        raise ConfigError("record: expected a string path")
    if replay_path is not None and not isinstance(replay_path, str):
        raise ConfigError("replay: expected a string path")
    return PipelineConfig(
        scenario=scenario,
        tracker=tracker,
        listen=_cfg_str(raw, "listen", "", DEFAULT_LISTEN),
        fps=_cfg_number(raw, "fps", "", scenario.fps),
        record=record,
        replay=replay_path,
        templates=templates,
    )


def load_config(path: str | Path) -> PipelineConfig:
    """Load and validate a pipeline config file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(raw)


# --- the frame loop ----------------------------------------------------------


class FrameProcessor:
    """Owns per-frame state: tracker, RNG, prior set, and the pose cache.

    The detection source defaults to the synthetic corruptor but anything
    with the same (frame -> detections) contract can replace it.
    """

    def __init__(
        self,
        config: PipelineConfig,
        detection_source: Callable[[GroundTruthFrame], Sequence[Detection]] | None = None,
    ) -> None:
        self.config = config
        self.scenario = config.scenario
        self.prior_set: PriorSet = make_prior_set(18)
        self.tracker_state = TrackerState(params=config.tracker)
        self._rng_state = config.scenario.seed
        self._pose_cache: dict[int, tuple[float, CuboidHull]] = {}
        self._detection_source = detection_source

    def _detections(self, gt: GroundTruthFrame) -> Sequence[Detection]:
        if self._detection_source is not None:
            return self._detection_source(gt)
        detections, self._rng_state = corrupt_detections(
            gt, self.scenario.noise, self._rng_state
        )
        return detections

    def process(self, frame_id: int, timestamp_us: int, templates: Sequence[OverlayTemplate]) -> FrameMessage:
        gt = ground_truth_frame(self.scenario, frame_id)
        detections = self._detections(gt)
        self.tracker_state, snapshot = step(self.tracker_state, detections, frame_id)
        for car in gt.cars:
            self._pose_cache[car.driver_id] = (car.observation_yaw, car.hull)

        hulls = {driver: hull for driver, (_, hull) in self._pose_cache.items()}
        items = resolve_visible(
            templates,
            snapshot,
            hulls=hulls,
            camera=self.scenario.camera,
            skip_unprojectable=True,
        )
        items = stack_collisions(items, LABEL_STACK_GAP)
        anchors_by_driver: dict[int, list[AnchorRecord]] = {}
        for item in items:
            anchors_by_driver.setdefault(item.driver_id, []).append(
                AnchorRecord(
                    template_id=item.template.template_id,
                    u=item.anchor[0],
                    v=item.anchor[1],
                )
            )

        records = []
        for track in snapshot:
            cached = self._pose_cache.get(track.driver_id)
            obs_yaw = cached[0] if cached else 0.0
            assignment = assign_priors(self.prior_set, obs_yaw)
            records.append(
                TrackRecord(
                    driver_id=track.driver_id,
                    track_id=track.track_id,
                    state=track.state.value,
                    bbox=track.bbox,
                    confidence=track.last_confidence,
                    prior_index=assignment.nearest_index,
                    observation_yaw=obs_yaw,
                    anchors=tuple(anchors_by_driver.get(track.driver_id, ())),
                )
            )
        return FrameMessage(frame_id=frame_id, timestamp_us=timestamp_us, tracks=tuple(records))


def _timestamp_us(frame_id: int, fps: float, fixed_clock: bool) -> int:
    if fixed_clock:
        return int(round(frame_id * 1_000_000.0 / fps))
    return time.time_ns() // 1000


def run(config: PipelineConfig, max_frames: int | None = None) -> int:
    """Run the live pipeline until interrupted (or max_frames, when given)."""
    if config.replay is not None:
        raise ConfigError("run does not accept a replay path; use the replay command")
    store = ConfigStore(ConfigUpdate(revision=0, templates=config.templates))
    bus = FrameBus()
    handle = serve(config.listen, bus, store)
    clock = FrameClock(fps=config.fps)
    processor = FrameProcessor(config)
    record_handle = None
    exit_code = 0
    try:
        if config.record is not None:
            record_handle = open(config.record, "wb")
        logger.info(
            "pipeline running: %d cars, %.1f fps, kernels=%s, port=%d",
            len(config.scenario.cars),
            config.fps,
            kernels.BACKEND,
            handle.port,
        )
        frame_id = 0
        next_deadline = time.monotonic() + clock.deadline_s
        while max_frames is None or frame_id < max_frames:
            message = processor.process(
                frame_id,
                _timestamp_us(frame_id, config.fps, config.fixed_clock),
                store.get().templates,
            )
            bus.publish(message)
            if record_handle is not None:
                record_handle.write(encode(message))
            frame_id += 1
            if not config.fixed_clock:
                now = time.monotonic()
                if now < next_deadline:
                    time.sleep(next_deadline - now)
                next_deadline = max(next_deadline + clock.deadline_s, now)
    except KeyboardInterrupt:
        logger.info("interrupted; shutting down")
    finally:
        if record_handle is not None:
            record_handle.close()
        handle.stop()
    return exit_code


def replay(path: str | Path, listen: str, fps: float) -> int:
    """Re-publish a recording at the given rate, rewriting timestamps.

    Frame ids are preserved.  A malformed line aborts with an error naming
    the line number.
    """
    clock = FrameClock(fps=fps)
    frames: list[FrameMessage] = []
    with open(path, "rb") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                message = decode(line)
            except OverlayError as exc:
                raise Malformed(f"line {line_no}: {exc}") from exc
            if not isinstance(message, FrameMessage):
                raise Malformed(f"line {line_no}: expected a frame message")
            frames.append(message)

    store = ConfigStore(ConfigUpdate(revision=0, templates=()))
    bus = FrameBus()
    handle_ = serve(listen, bus, store)
    try:
        next_deadline = time.monotonic() + clock.deadline_s
        for message in frames:
            bus.publish(replace(message, timestamp_us=time.time_ns() // 1000))
            now = time.monotonic()
            if now < next_deadline:
                time.sleep(next_deadline - now)
            next_deadline = max(next_deadline + clock.deadline_s, now)
    except KeyboardInterrupt:
        logger.info("replay interrupted")
    finally:
        handle_.stop()
    return 0


def bench(config: PipelineConfig, frame_count: int) -> dict:
    """Time the full per-frame computation with no sleeping and no network.

    Returns the report dict and prints it as one canonical JSON line:
    frames/s plus p50/p99 per-frame latency in microseconds.
    """
    if frame_count < 1:
        raise ConfigError("frames: must be >= 1")
    processor = FrameProcessor(config)
    templates = config.templates
    latencies_ns = []
    started = time.perf_counter_ns()
    for frame_id in range(frame_count):
        frame_start = time.perf_counter_ns()
        message = processor.process(
            frame_id, int(round(frame_id * 1_000_000.0 / config.fps)), templates
        )
        encode(message)
        latencies_ns.append(time.perf_counter_ns() - frame_start)
    total_ns = time.perf_counter_ns() - started

    ordered = sorted(latencies_ns)

    def percentile(p: float) -> float:
        rank = max(1, math.ceil(p / 100.0 * len(ordered)))
        return ordered[rank - 1] / 1000.0

    report = {
        "type": "bench",
        "backend": kernels.BACKEND,
        "frames": frame_count,
        "fps": frame_count / (total_ns / 1e9),
        "p50_us": percentile(50.0),
        "p99_us": percentile(99.0),
    }
    print(canonical_line(report).decode("utf-8"), end="")
    return report


def export_dataset_run(config: PipelineConfig, frame_count: int, out_path: str | Path) -> int:
    """Generate ground truth + noisy detections and export the tagged dataset."""
    from .scenesim import export_dataset

    sequence = ground_truth_sequence(config.scenario, frame_count)
    rng_state = config.scenario.seed
    detections_per_frame = []
    for frame in sequence:
        detections, rng_state = corrupt_detections(frame, config.scenario.noise, rng_state)
        detections_per_frame.append(detections)
    return export_dataset(sequence, detections_per_frame, out_path)
