"""Wire protocol: canonical message encoding and the message model.

One message per line.  Canonical form: UTF-8 JSON with keys sorted
lexicographically at every nesting level, no insignificant whitespace,
integers rendered as-is, float-typed fields rendered with exactly four
decimal places (round-half-even, negative zero normalized to "0.0000"),
terminated by a single newline.  Encoding is strict and injective on the
message model; decoding tolerates arbitrary key order and whitespace.

Boxes travel as arrays [x_min, y_min, x_max, y_max]; colors as [r, g, b];
offsets as [dx, dy].  Optional fields (a part id, a dropped detection's box)
are omitted entirely rather than sent as null.

Protocol version: "overlay/1".  Default port: 7878.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any

from .errors import Malformed, MissingField, NonFinite
from .errors import UnknownType as UnknownTypeError
from .geometry import BBox
from .overlay import AnchorKind, OverlayTemplate

PROTOCOL_VERSION = "overlay/1"
DEFAULT_PORT = 7878

ROLE_PRODUCER = "producer"
ROLE_CONSOLE = "console"

_TRACK_STATES = ("tentative", "confirmed", "coasting")
_ANCHOR_KINDS = tuple(kind.value for kind in AnchorKind)


@dataclass(frozen=True)
class AnchorRecord:
    template_id: int
    u: float
    v: float


@dataclass(frozen=True)
class TrackRecord:
    driver_id: int
    track_id: int
    state: str
    bbox: BBox
    confidence: float
    prior_index: int
    observation_yaw: float
    anchors: tuple[AnchorRecord, ...] = ()


@dataclass(frozen=True)
class FrameMessage:
    frame_id: int
    timestamp_us: int
    tracks: tuple[TrackRecord, ...] = ()


@dataclass(frozen=True)
class ConfigUpdate:
    revision: int
    templates: tuple[OverlayTemplate, ...] = ()


@dataclass(frozen=True)
class Hello:
    role: str
    protocol_version: str = PROTOCOL_VERSION


@dataclass(frozen=True)
class Ack:
    revision: int


@dataclass(frozen=True)
class DatasetRecord:
    frame_id: int
    driver_id: int
    gt_bbox: BBox
    det_bbox: BBox | None
    observation_yaw: float
    prior_index: int


Message = FrameMessage | ConfigUpdate | Hello | Ack | DatasetRecord


class _Float:
    """Marks a value as float-typed for canonical formatting."""

    __slots__ = ("value",)

    def __init__(self, value: float) -> None:
        self.value = value


def _fmt_float(value: float) -> str:
    if not math.isfinite(value):
        raise NonFinite(f"cannot encode non-finite value {value!r}")
    text = format(value, ".4f")
    if text == "-0.0000":
        return "0.0000"
    return text


def _write_canonical(value: Any, out: list[str]) -> None:
    if isinstance(value, _Float):
        out.append(_fmt_float(value.value))
    elif isinstance(value, bool):
        out.append("true" if value else "false")
    elif isinstance(value, int):
        out.append(str(value))
    elif isinstance(value, float):
        out.append(_fmt_float(value))
    elif isinstance(value, str):
        out.append(json.dumps(value, ensure_ascii=False))
    elif isinstance(value, dict):
        out.append("{")
        for i, key in enumerate(sorted(value)):
            if i:
                out.append(",")
            out.append(json.dumps(key, ensure_ascii=False))
            out.append(":")
            _write_canonical(value[key], out)
        out.append("}")
    elif isinstance(value, (list, tuple)):
        out.append("[")
        for i, item in enumerate(value):
            if i:
                out.append(",")
            _write_canonical(item, out)
        out.append("]")
    else:
        raise TypeError(f"cannot canonically encode {type(value).__name__}")


def canonical_line(value: dict) -> bytes:
    """Serialize an already-typed wire dict to one canonical line."""
    out: list[str] = []
    _write_canonical(value, out)
    out.append("\n")
    return "".join(out).encode("utf-8")


def _bbox_wire(bbox: BBox) -> list[_Float]:
    return [_Float(bbox.x_min), _Float(bbox.y_min), _Float(bbox.x_max), _Float(bbox.y_max)]


def _template_wire(template: OverlayTemplate) -> dict:
    wire: dict[str, Any] = {
        "template_id": template.template_id,
        "driver_id": template.driver_id,
        "anchor_kind": template.anchor_kind.value,
        "offset": [_Float(template.offset[0]), _Float(template.offset[1])],
        "label": template.label,
        "color": [int(c) for c in template.color],
        "enabled": template.enabled,
    }
    if template.part_id is not None:
        wire["part_id"] = template.part_id
    return wire


def to_wire(message: Message) -> dict:
    """The wire dict for a message; float-typed fields are tagged for formatting."""
    if isinstance(message, FrameMessage):
        return {
            "type": "frame",
            "frame_id": message.frame_id,
            "timestamp_us": message.timestamp_us,
            "tracks": [
                {
                    "driver_id": track.driver_id,
                    "track_id": track.track_id,
                    "state": track.state,
                    "bbox": _bbox_wire(track.bbox),
                    "confidence": _Float(track.confidence),
                    "prior_index": track.prior_index,
                    "observation_yaw": _Float(track.observation_yaw),
                    "anchors": [
                        {
                            "template_id": anchor.template_id,
                            "u": _Float(anchor.u),
                            "v": _Float(anchor.v),
                        }
                        for anchor in track.anchors
                    ],
                }
                for track in message.tracks
            ],
        }
    if isinstance(message, ConfigUpdate):
        return {
            "type": "config",
            "revision": message.revision,
            "templates": [_template_wire(t) for t in message.templates],
        }
    if isinstance(message, Hello):
        return {
            "type": "hello",
            "protocol_version": message.protocol_version,
            "role": message.role,
        }
    if isinstance(message, Ack):
        return {"type": "ack", "revision": message.revision}
    if isinstance(message, DatasetRecord):
        wire: dict[str, Any] = {
            "type": "record",
            "frame_id": message.frame_id,
            "driver_id": message.driver_id,
            "gt_bbox": _bbox_wire(message.gt_bbox),
            "observation_yaw": _Float(message.observation_yaw),
            "prior_index": message.prior_index,
        }
        if message.det_bbox is not None:
            wire["det_bbox"] = _bbox_wire(message.det_bbox)
        return wire
    raise TypeError(f"not a wire message: {type(message).__name__}")


def encode(message: Message) -> bytes:
    """Canonical bytes for a message, newline-terminated."""
    return canonical_line(to_wire(message))


def _require(obj: dict, key: str, path: str) -> Any:
    if key not in obj:
        raise MissingField(_join(path, key))
    return obj[key]


def _get_int(obj: dict, key: str, path: str) -> int:
    value = _require(obj, key, path)
    if isinstance(value, bool) or not isinstance(value, int):
        raise Malformed(f"{_join(path, key)}: expected an integer")
    return value


def _get_float(obj: dict, key: str, path: str) -> float:
    value = _require(obj, key, path)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise Malformed(f"{_join(path, key)}: expected a number")
    return float(value)


def _get_str(obj: dict, key: str, path: str) -> str:
    value = _require(obj, key, path)
    if not isinstance(value, str):
        raise Malformed(f"{_join(path, key)}: expected a string")
    return value


def _get_bool(obj: dict, key: str, path: str) -> bool:
    value = _require(obj, key, path)
    if not isinstance(value, bool):
        raise Malformed(f"{_join(path, key)}: expected a boolean")
    return value


def _get_list(obj: dict, key: str, path: str) -> list:
    value = _require(obj, key, path)
    if not isinstance(value, list):
        raise Malformed(f"{_join(path, key)}: expected an array")
    return value


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _number_array(value: Any, length: int, path: str) -> list[float]:
    if not isinstance(value, list) or len(value) != length:
        raise Malformed(f"{path}: expected an array of {length} numbers")
    result = []
    for i, item in enumerate(value):
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise Malformed(f"{path}[{i}]: expected a number")
        result.append(float(item))
    return result


def _parse_bbox(value: Any, path: str) -> BBox:
    coords = _number_array(value, 4, path)
    try:
        return BBox(*coords)
    except ValueError as exc:
        raise Malformed(f"{path}: {exc}") from exc


def _parse_anchor(obj: Any, path: str) -> AnchorRecord:
    if not isinstance(obj, dict):
        raise Malformed(f"{path}: expected an object")
    return AnchorRecord(
        template_id=_get_int(obj, "template_id", path),
        u=_get_float(obj, "u", path),
        v=_get_float(obj, "v", path),
    )


def _parse_track(obj: Any, path: str) -> TrackRecord:
    if not isinstance(obj, dict):
        raise Malformed(f"{path}: expected an object")
    driver_id = _get_int(obj, "driver_id", path)
    track_id = _get_int(obj, "track_id", path)
    state = _get_str(obj, "state", path)
    if state not in _TRACK_STATES:
        raise Malformed(f"{_join(path, 'state')}: unknown track state {state!r}")
    bbox = _parse_bbox(_require(obj, "bbox", path), _join(path, "bbox"))
    anchors = tuple(
        _parse_anchor(anchor, f"{_join(path, 'anchors')}[{i}]")
        for i, anchor in enumerate(_get_list(obj, "anchors", path))
    )
    return TrackRecord(
        driver_id=driver_id,
        track_id=track_id,
        state=state,
        bbox=bbox,
        confidence=_get_float(obj, "confidence", path),
        prior_index=_get_int(obj, "prior_index", path),
        observation_yaw=_get_float(obj, "observation_yaw", path),
        anchors=anchors,
    )


def _parse_template(obj: Any, path: str) -> OverlayTemplate:
    if not isinstance(obj, dict):
        raise Malformed(f"{path}: expected an object")
    kind = _get_str(obj, "anchor_kind", path)
    if kind not in _ANCHOR_KINDS:
        raise Malformed(f"{_join(path, 'anchor_kind')}: unknown anchor kind {kind!r}")
    part_id = None
    if "part_id" in obj:
        part_id = _get_str(obj, "part_id", path)
    offset = _number_array(_require(obj, "offset", path), 2, _join(path, "offset"))
    color_raw = _get_list(obj, "color", path)
    if len(color_raw) != 3 or any(isinstance(c, bool) or not isinstance(c, int) for c in color_raw):
        raise Malformed(f"{_join(path, 'color')}: expected an array of 3 integers")
    try:
        return OverlayTemplate(
            template_id=_get_int(obj, "template_id", path),
            driver_id=_get_int(obj, "driver_id", path),
            anchor_kind=AnchorKind(kind),
            part_id=part_id,
            offset=(offset[0], offset[1]),
            label=_get_str(obj, "label", path),
            color=(color_raw[0], color_raw[1], color_raw[2]),
            enabled=_get_bool(obj, "enabled", path),
        )
    except ValueError as exc:
        raise Malformed(f"{path}: {exc}") from exc


def decode(line: bytes | str) -> Message:
    """Parse one wire line; lenient about key order and whitespace.

    Raises Malformed for bad syntax or bad field types, UnknownType for an
    unrecognized type tag, MissingField for an absent required field; each
    error message names the offending path.
    """
    if isinstance(line, bytes):
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise Malformed(f"not valid UTF-8: {exc}") from exc
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise Malformed(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise Malformed("top-level value must be an object")
    if "type" not in obj:
        raise MissingField("type")
    kind = obj["type"]
    if kind == "frame":
        frame_id = _get_int(obj, "frame_id", "")
        timestamp_us = _get_int(obj, "timestamp_us", "")
        tracks = tuple(
            _parse_track(track, f"tracks[{i}]")
            for i, track in enumerate(_get_list(obj, "tracks", ""))
        )
        return FrameMessage(frame_id=frame_id, timestamp_us=timestamp_us, tracks=tracks)
    if kind == "config":
        templates = tuple(
            _parse_template(template, f"templates[{i}]")
            for i, template in enumerate(_get_list(obj, "templates", ""))
        )
        return ConfigUpdate(revision=_get_int(obj, "revision", ""), templates=templates)
    if kind == "hello":
        return Hello(
            role=_get_str(obj, "role", ""),
            protocol_version=_get_str(obj, "protocol_version", ""),
        )
    if kind == "ack":
        return Ack(revision=_get_int(obj, "revision", ""))
    if kind == "record":
        det_bbox = None
        if "det_bbox" in obj:
            det_bbox = _parse_bbox(obj["det_bbox"], "det_bbox")
        return DatasetRecord(
            frame_id=_get_int(obj, "frame_id", ""),
            driver_id=_get_int(obj, "driver_id", ""),
            gt_bbox=_parse_bbox(_require(obj, "gt_bbox", ""), "gt_bbox"),
            det_bbox=det_bbox,
            observation_yaw=_get_float(obj, "observation_yaw", ""),
            prior_index=_get_int(obj, "prior_index", ""),
        )
    raise UnknownTypeError(f"type: unknown message type {kind!r}")
