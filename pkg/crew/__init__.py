from . import errors
from .config import SimulationConfig
from .enums import CameraKind, EventKind, Gaze
from .scene import Actor, CameraConfig, Floorplan, ImageBox, actor_position, project, visible
from .scenario import Scenario, load_scenario, parse_scenario
from .simulator import RunResult, Simulator, run
from .metrics import MetricsReport, evaluate, report
