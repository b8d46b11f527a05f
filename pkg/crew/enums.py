from enum import Enum


class ExtendedEnum(Enum):
    """An Enum class that allows for the `__str__` method to be implemented."""
    def __str__(self):
        return self.label

    def __eq__(self, other):
        """Check if the enum is equal to another enum or a string."""
        if isinstance(other, Enum):
            return self.value == other.value
        elif isinstance(other, str):
            return str(self.name) == other or str(self.value) == other
        return False

    def __hash__(self):
        return hash(self.value)

    @property
    def label(self) -> str:
        raise NotImplementedError

    @classmethod
    def values(cls):
        return list(map(lambda c: c.value, cls))


class CameraKind(ExtendedEnum):
    """Enum to map the role a camera plays in the installation."""

    static = "static"
    overview = "overview"
    ptz = "ptz"

    @property
    def label(self) -> str:
        """Get a neat human-facing string value for the camera kind."""
        lookup = {"static": "Static", "overview": "Overview", "ptz": "PTZ"}
        return lookup[self.value]

    @property
    def is_rendered(self) -> bool:
        """:class:`bool`: Whether frames are synthesized for this kind.

        PTZ cameras are steered from their overview camera and never feed background subtraction.
        """
        return self is not CameraKind.ptz


class Gaze(ExtendedEnum):
    """Enum to map the general gaze direction of a detected person, in image terms."""

    frontal = "frontal"
    left = "left"
    right = "right"
    unknown = "unknown"

    @property
    def label(self) -> str:
        lookup = {"frontal": "Frontal", "left": "Left", "right": "Right", "unknown": "Unknown"}
        return lookup[self.value]


class EventKind(ExtendedEnum):
    """Enum to map the kinds of rows written to ``events.csv``."""

    record_start = "record_start"
    record_stop = "record_stop"
    shot_switch = "shot_switch"
    calibration_fallback = "calibration_fallback"

    def __str__(self):
        return self.value

    @property
    def label(self) -> str:
        lookup = {
            "record_start": "Recording started",
            "record_stop": "Recording stopped",
            "shot_switch": "Shot switch",
            "calibration_fallback": "Calibration fallback",
        }
        return lookup[self.value]
