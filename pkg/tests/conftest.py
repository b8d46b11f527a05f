import math
import re

from pathlib import Path

import pytest

from crew.enums import CameraKind
from crew.geometry import Segment, Vec2
from crew.scenario import load_scenario, parse_scenario
from crew.scene import CameraConfig, Floorplan, Room
from crew.simulator import run

STATIC = Path(__file__).resolve().parent.parent / "crew" / "static"
CANONICAL = STATIC / "canonical.scn"
TWO_ROOM = STATIC / "two_room.scn"

# room A is [0,6]x[0,4], room B is [6,12]x[0,4], joined by a door at x = 6, y in [1.5, 2.5]
DOOR_Y = (1.5, 2.5)


def square(x0, y0, x1, y1):
    return (Vec2(x0, y0), Vec2(x1, y0), Vec2(x1, y1), Vec2(x0, y1))


@pytest.fixture
def two_rooms() -> Floorplan:
    walls = (
        Segment(Vec2(0, 0), Vec2(12, 0)),
        Segment(Vec2(0, 4), Vec2(12, 4)),
        Segment(Vec2(0, 0), Vec2(0, 4)),
        Segment(Vec2(12, 0), Vec2(12, 4)),
        Segment(Vec2(6, 0), Vec2(6, 4)),
    )
    doors = (Segment(Vec2(6, DOOR_Y[0]), Vec2(6, DOOR_Y[1])),)
    return Floorplan((Room("A", square(0, 0, 6, 4)), Room("B", square(6, 0, 12, 4))), walls, doors)


def make_camera(id="cam", position=(0.5, 2.0), yaw_deg=0.0, hfov_deg=90.0, width=640, height=360, **kwargs) -> CameraConfig:
    kind = kwargs.pop("kind", CameraKind.static)
    return CameraConfig(id, kind, Vec2(*position), math.radians(yaw_deg), math.radians(hfov_deg), width, height, **kwargs)


@pytest.fixture
def camera() -> CameraConfig:
    return make_camera()


def scenario_text(actors="", params="duration = 10", zones=None, width=320, height=180) -> str:
    """A single room [0,8]x[0,4] watched by camera ``cam`` from its left wall."""
    zones = zones if zones is not None else (
        "[zone]\nid = floor\ncamera = cam\npolygon = 0,0 {w},0 {w},{h} 0,{h}\nweight = 1\nbuckets = room\n".format(w=width, h=height)
    )
    return (
        "[params]\n{params}\n\n"
        "[room]\nid = room\npolygon = 0,0 8,0 8,4 0,4\n\n"
        "[camera]\nid = cam\nkind = static\nposition = 0.2,2\nyaw = 0\nhfov = 90\nresolution = {w}x{h}\n\n"
        "{actors}\n"
        "[bucket]\nid = room\ncameras = cam\n\n"
        "{zones}"
    ).format(params=params, actors=actors, zones=zones, w=width, h=height)


def actor_section(id="walker", path="0:4,2 10:4,2", **extra) -> str:
    lines = ["[actor]", "id = {}".format(id), "path = {}".format(path)]
    lines += ["{} = {}".format(k, v) for k, v in extra.items()]
    return "\n".join(lines) + "\n"


@pytest.fixture
def make_scenario():
    def factory(**kwargs):
        return parse_scenario(scenario_text(**kwargs), "test.scn")
    return factory


def two_room_text(speed: float) -> str:
    """The two-room fixture with the walk from the waiting spot to room B at ``speed`` m/s."""
    text = TWO_ROOM.read_text(encoding="utf-8")
    approach = math.hypot(5 - 1, 2 - 3.8)
    at_door_leg = 6.0 + approach / speed
    end = at_door_leg + 6.0 / speed
    path = "path = 0:1,3.8 6:1,3.8 {:.4f}:5,2 {:.4f}:11,2".format(at_door_leg, end)
    text = re.sub(r"(?m)^path = .*$", path, text)
    return re.sub(r"(?m)^duration = .*$", "duration = {:.1f}".format(math.floor(end * 10) / 10), text)


def door_crossing_time(speed: float) -> float:
    return 6.0 + math.hypot(4, 1.8) / speed + 1.0 / speed


@pytest.fixture(scope="session")
def canonical():
    return load_scenario(CANONICAL)


@pytest.fixture(scope="session")
def canonical_run(canonical):
    return run(canonical)
