"""Exception types shared across the pipeline."""


class OverlayError(Exception):
    """Base class for all raceoverlay errors."""


class BehindCamera(OverlayError):
    """A point or hull corner has non-positive camera-frame depth."""


class DegenerateGeometry(OverlayError):
    """Object and camera share the same ground-plane position."""


class InvalidBinCount(OverlayError):
    """Prior set too small to define a nearest-6 support."""


class ZeroVector(OverlayError):
    """Weighted angle reconstruction has no defined direction."""


class MissingPose(OverlayError):
    """A part anchor was requested without hull and camera data."""


class NonFinite(OverlayError):
    """A numeric field is NaN or infinite and cannot be encoded."""


class Malformed(OverlayError):
    """A wire line is not a syntactically valid message."""


class UnknownType(OverlayError):
    """A wire message carries an unrecognized type tag."""


class MissingField(OverlayError):
    """A wire message lacks a required field (message is the field path)."""


class OutOfOrderFrame(OverlayError):
    """The tracker was stepped with a non-increasing frame id."""


class BindFailure(OverlayError):
    """The server could not bind its listen address."""


class ConfigError(OverlayError):
    """A configuration value is missing or invalid (message names the path)."""
