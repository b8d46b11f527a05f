from typing import Optional


class CrewException(Exception):
    """Base exception for crew
    """


class ScenarioError(CrewException):
    """Thrown when a scenario file cannot be parsed or fails validation.

    Attributes
    ----------
    reason:
        :class:`str` - What went wrong.

    line:
        :class:`int` - The 1-based line number the error was found on.
            This could be ``None`` if the error concerns the file as a whole.

    path:
        :class:`str` - The scenario path, if it was loaded from disk.
    """

    __slots__ = ("reason", "line", "path")

    def __init__(self, reason: str, line: Optional[int] = None, path: Optional[str] = None):
        self.reason = reason
        self.line = line
        self.path = path

        fmt = "{0.reason}"
        if self.line is not None:
            fmt += " (line {0.line})"
        if self.path:
            fmt = "{0.path}: " + fmt

        super().__init__(fmt.format(self))


class DanglingReference(ScenarioError):
    """Thrown when a scenario entry refers to an id that was never declared.

    Subclass of :exc:`ScenarioError`

    Attributes
    ----------
    kind:
        :class:`str` - The kind of object that was referenced, e.g. ``bucket``.

    missing_id:
        :class:`str` - The id that could not be resolved.
    """

    __slots__ = ("kind", "missing_id")

    def __init__(self, kind: str, missing_id: str, line: Optional[int] = None, path: Optional[str] = None):
        self.kind = kind
        self.missing_id = missing_id
        super().__init__("unknown {} '{}'".format(kind, missing_id), line=line, path=path)


class OutOfRange(CrewException):
    """Thrown when a trajectory is evaluated outside of its waypoint times."""


class DimensionMismatch(CrewException):
    """Thrown when a frame, mask or background model disagree on their dimensions."""


class InvalidArgument(CrewException):
    """Thrown when an operation is called with arguments that violate its preconditions.

    For example an empty detection list, a zone that encloses no pixel centers
    or a non-positive time step.
    """


class UnknownCamera(CrewException):
    """Thrown when the switch matrix is asked to record a camera that is not one of its inputs.

    Attributes
    ----------
    camera_id:
        :class:`str` - The offending camera id.
    """

    __slots__ = ("camera_id",)

    def __init__(self, camera_id: str):
        self.camera_id = camera_id
        super().__init__("camera '{}' is not a matrix input".format(camera_id))


class CalibrationError(CrewException):
    """Thrown when a PTZ calibration cannot be built or read.

    This covers grid poses outside the mechanical range of the PTZ,
    calibration grids that are too small and malformed calibration files.
    """


class ReportError(CrewException):
    """Thrown when a run output cannot be written or read back.

    Attributes
    ----------
    path:
        :class:`str` - The path that failed.
    """

    __slots__ = ("path",)

    def __init__(self, path, reason: str):
        self.path = str(path)
        super().__init__("{}: {}".format(self.path, reason))
