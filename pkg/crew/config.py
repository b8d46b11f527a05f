"""Tunables of a simulation run, grouped per concern.

Every value here is an artifact decision rather than a measured constant;
the scenario ``[params]`` section overrides them by flat key, e.g.
``theta_on = 1.5`` or ``hold = 3``.
"""
import logging

from dataclasses import dataclass, field, fields, replace
from typing import Any, Callable, Dict, Mapping, Optional, Tuple

from .errors import ScenarioError

LOG = logging.getLogger(__name__)

#: Largest foreground threshold that keeps every rendered actor shade two thresholds away from the background.
MAX_TAU = 51.0


@dataclass(frozen=True, slots=True)
class BgsParams:
    alpha: float = 0.02
    tau: float = 20.0
    warmup: int = 50

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if not 0.0 < self.tau <= MAX_TAU:
            raise ValueError("tau must lie in (0, {}]".format(MAX_TAU))
        if self.warmup < 0:
            raise ValueError("warmup must be >= 0")


@dataclass(frozen=True, slots=True)
class DetectionParams:
    margin: float = 0.25
    min_area: int = 64
    jitter: float = 2.0
    p_miss: float = 0.02
    tau_g: float = 0.5
    frontal_cone_deg: float = 30.0
    dedupe_iou: float = 0.6


@dataclass(frozen=True, slots=True)
class SelectionParams:
    """Bucket defaults. ``theta_off`` and ``level_max`` follow ``theta_on`` unless set."""
    theta_on: float = 1.0
    theta_off: Optional[float] = None
    leak: float = 0.1
    level_max: Optional[float] = None

    @property
    def release(self) -> float:
        return self.theta_off if self.theta_off is not None else 0.5 * self.theta_on

    @property
    def cap(self) -> float:
        return self.level_max if self.level_max is not None else 3.0 * self.theta_on


@dataclass(frozen=True, slots=True)
class ShotParams:
    min_shot: float = 6.0
    hold: float = 2.0
    steady_window: float = 1.5
    eps_move: float = 0.01
    eps_size: float = 0.05


@dataclass(frozen=True, slots=True)
class MatrixParams:
    channels: int = 8
    max_inputs: int = 20
    bitrate: float = 102e6


@dataclass(frozen=True, slots=True)
class CalibrationParams:
    grid: int = 5
    zooms: int = 3
    depth: float = 3.0


@dataclass(frozen=True, slots=True)
class RunParams:
    duration: float = 600.0
    tick: float = 0.1
    seed: int = 0
    sample_period: float = 10.0
    preroll: float = 2.0


@dataclass(frozen=True, slots=True)
class ComposeParams:
    """Framing rules for proposed canvases.

    Attributes
    ----------
    width_margin:
        Extra width added around the outer detections, split evenly over both sides.
    eye_line:
        Fraction of the canvas height, from the top, where the eye line is placed.
    single_height_factor:
        Canvas height over the upper-body box height for a single person (medium shot).
    margin_floor:
        The width margin may shrink down to this value to keep a canvas inside the frame.
    """
    width_margin: float = 0.15
    eye_line: float = 1.0 / 3.0
    single_height_factor: float = 2.0
    margin_floor: float = 0.05

    def __post_init__(self):
        if self.width_margin < 0:
            raise ValueError("width_margin must be >= 0")
        if not 0 < self.eye_line < 1:
            raise ValueError("eye_line must be in (0, 1)")


@dataclass(frozen=True, slots=True)
class DiffParams:
    """When a proposed canvas counts as considerably different from the current one."""
    iou_min: float = 0.7
    center_shift_max: float = 0.10
    size_ratio_min: float = 0.8
    size_ratio_max: float = 1.25

    def __post_init__(self):
        if not 0 < self.size_ratio_min <= 1 <= self.size_ratio_max:
            raise ValueError("size ratio bounds must enclose 1")
        if not 0 <= self.iou_min <= 1:
            raise ValueError("iou_min must be in [0, 1]")


@dataclass(frozen=True, slots=True)
class SimulationConfig:
    """All parameter groups of a run.

    Use :meth:`override` to build a new configuration from ``[params]`` pairs;
    the configuration itself is immutable so it can be shared between runs of a sweep.
    """
    bgs: BgsParams = field(default_factory=BgsParams)
    detection: DetectionParams = field(default_factory=DetectionParams)
    selection: SelectionParams = field(default_factory=SelectionParams)
    shot: ShotParams = field(default_factory=ShotParams)
    matrix: MatrixParams = field(default_factory=MatrixParams)
    calibration: CalibrationParams = field(default_factory=CalibrationParams)
    run: RunParams = field(default_factory=RunParams)
    compose: ComposeParams = field(default_factory=ComposeParams)
    diff: DiffParams = field(default_factory=DiffParams)

    def override(self, params: Mapping[str, Tuple[str, int]], path: Optional[str] = None) -> "SimulationConfig":
        """Returns a copy with ``params`` applied.

        Parameters
        ----------
        params:
            Maps a flat key to its raw text value and the line it was read from.
        path:
            The scenario path, only used for error messages.

        Raises
        ------
        :exc:`ScenarioError`
            A key is unknown or its value does not convert.
        """
        changes: Dict[str, Dict[str, Any]] = {}
        for key, (raw, line) in params.items():
            try:
                group, name, convert = PARAM_KEYS[key]
            except KeyError:
                raise ScenarioError("unknown parameter '{}'".format(key), line=line, path=path) from None
            try:
                value = convert(raw)
            except ValueError:
                raise ScenarioError("bad value '{}' for parameter '{}'".format(raw, key), line=line, path=path) from None
            changes.setdefault(group, {})[name] = value

        updated = {}
        for group, values in changes.items():
            try:
                updated[group] = replace(getattr(self, group), **values)
            except ValueError as exc:
                raise ScenarioError("invalid {} parameters: {}".format(group, exc), path=path) from None
            LOG.debug("params %s overridden: %s", group, values)
        return replace(self, **updated)

    def with_run(self, **kwargs) -> "SimulationConfig":
        return replace(self, run=replace(self.run, **kwargs))


def _build_registry() -> Dict[str, Tuple[str, str, Callable[[str], Any]]]:
    registry = {}
    for group in fields(SimulationConfig):
        for f in fields(group.default_factory):
            convert = int if isinstance(f.default, int) else float
            registry[f.name] = (group.name, f.name, convert)
    return registry


PARAM_KEYS = _build_registry()
