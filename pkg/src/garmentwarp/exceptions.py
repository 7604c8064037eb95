"""Exception hierarchy for garmentwarp."""


class GarmentWarpError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateGeometryError(GarmentWarpError, ValueError):
    """Zero-length vectors or bones where a direction is required."""


class DimensionMismatchError(GarmentWarpError, ValueError):
    """Two buffers that must share a shape do not."""


class TpsFitError(GarmentWarpError, ValueError):
    """The thin-plate-spline system could not be solved."""


class KeypointParseError(GarmentWarpError, ValueError):
    """A keypoint file is not valid JSON or has the wrong structure."""


class KeypointSchemaError(KeypointParseError):
    """A keypoint file parsed but does not follow the body-point schema."""


class MissingLandmarkError(GarmentWarpError, KeyError):
    """A required landmark is absent or below the confidence threshold."""

    def __init__(self, landmark, confidence=None, threshold=None):
        self.landmark = landmark
        self.confidence = confidence
        self.threshold = threshold
        super().__init__(landmark)

    def __str__(self):
        msg = f"missing landmark '{self.landmark}'"
        if self.confidence is not None and self.threshold is not None:
            msg += f" (confidence {self.confidence:.3g} < {self.threshold:.3g})"
        return msg


class ConfigError(GarmentWarpError, ValueError):
    """Invalid run configuration."""


class SceneSpecError(GarmentWarpError, ValueError):
    """Invalid synthetic scene parameters."""
