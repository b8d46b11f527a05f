"""Scenario files.

A scenario is UTF-8 text made of sections. Every ``[section]`` header starts a new entry
which is followed by ``key = value`` lines; ``#`` starts a comment. For example::

    [params]
    duration = 60

    [room]
    id = hall
    polygon = 0,0 4,0 4,4 0,4

    [camera]
    id = c1
    kind = static
    position = 2,0.2
    yaw = 90
    hfov = 100
    resolution = 1920x1080

    [actor]
    id = alice
    path = 0:1,1 10:3,3

    [zone]
    id = floor
    camera = c1
    polygon = 0,0 1920,0 1920,1080 0,1080
    weight = 2
    buckets = hall

    [bucket]
    id = hall
    cameras = c1

    [expect]
    bucket = hall
    intervals = 0-10

Angles are written in degrees, positions in meters and zone polygons in native pixels.
"""
import logging
import math

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from .config import SimulationConfig
from .enums import CameraKind
from .errors import DanglingReference, ScenarioError
from .geometry import Segment, Vec2
from .scene import Actor, CameraConfig, Floorplan, Room
from .selection import Bucket, Zone
from .utils import get, undecodable_line
from .video import polygon_mask

LOG = logging.getLogger(__name__)

SECTIONS = ("params", "room", "wall", "door", "camera", "actor", "zone", "bucket", "expect")


@dataclass(slots=True)
class RawSection:
    name: str
    line: int
    entries: Dict[str, Tuple[str, int]] = field(default_factory=dict)


@dataclass(frozen=True)
class Scenario:
    """A validated world to simulate.

    Attributes
    ----------
    floorplan: :class:`Floorplan`
        Rooms, walls and doors.
    cameras: Tuple[:class:`CameraConfig`]
        All cameras in declaration order.
    actors: Tuple[:class:`Actor`]
        Actors sorted by id.
    zones: Tuple[:class:`Zone`]
        Activity zones.
    buckets: Tuple[:class:`Bucket`]
        Buckets at their initial, empty level.
    expected: Dict[:class:`str`, Tuple[Tuple[:class:`float`, :class:`float`]]]
        Per bucket, the sorted and disjoint intervals during which it should record.
    config: :class:`SimulationConfig`
        All parameters, scenario overrides applied.
    path: Optional[:class:`str`]
        Where the scenario was loaded from.
    """
    floorplan: Floorplan
    cameras: Tuple[CameraConfig, ...]
    actors: Tuple[Actor, ...] = ()
    zones: Tuple[Zone, ...] = ()
    buckets: Tuple[Bucket, ...] = ()
    expected: Mapping[str, Tuple[Tuple[float, float], ...]] = field(default_factory=dict)
    config: SimulationConfig = field(default_factory=SimulationConfig)
    path: Optional[str] = None
    actor_ranks: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "actor_ranks", {a.id: i for i, a in enumerate(sorted(self.actors, key=lambda a: a.id))})

    @property
    def duration(self) -> float:
        return self.config.run.duration

    @property
    def tick(self) -> float:
        return self.config.run.tick

    @property
    def seed(self) -> int:
        return self.config.run.seed

    @property
    def camera_ids(self) -> Tuple[str, ...]:
        return tuple(c.id for c in self.cameras)

    def camera(self, camera_id: str) -> Optional[CameraConfig]:
        return get(self.cameras, id=camera_id)

    @property
    def rendered_cameras(self) -> Tuple[CameraConfig, ...]:
        return tuple(c for c in self.cameras if c.kind.is_rendered)

    @property
    def ptz_pairs(self) -> List[Tuple[CameraConfig, CameraConfig]]:
        """``(overview, ptz)`` for every PTZ camera."""
        return [(self.camera(c.paired_overview), c) for c in self.cameras if c.kind is CameraKind.ptz]

    def zones_of(self, camera_id: str) -> Tuple[Zone, ...]:
        return tuple(z for z in self.zones if z.camera_id == camera_id)

    def buckets_of(self, camera_id: str) -> Tuple[str, ...]:
        return tuple(b.id for b in self.buckets if camera_id in b.camera_ids)


def _split(text: str, path: Optional[str]) -> List[RawSection]:
    sections: List[RawSection] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ScenarioError("malformed section header '{}'".format(line), number, path)
            name = line[1:-1].strip().lower()
            if name not in SECTIONS:
                raise ScenarioError("unknown section [{}]".format(name), number, path)
            sections.append(RawSection(name, number))
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ScenarioError("expected 'key = value', got '{}'".format(line), number, path)
        if not sections:
            raise ScenarioError("'{}' appears before any section".format(key.strip()), number, path)
        key = key.strip().lower()
        current = sections[-1]
        if key in current.entries:
            raise ScenarioError("duplicate key '{}'".format(key), number, path)
        current.entries[key] = (value.strip(), number)
    return sections


class _Reader:
    """Typed access to one section's entries, turning every failure into a :exc:`ScenarioError`."""

    __slots__ = ("section", "path")

    def __init__(self, section: RawSection, allowed: Sequence[str], path: Optional[str]):
        self.section = section
        self.path = path
        for key, (_, line) in section.entries.items():
            if key not in allowed:
                raise ScenarioError("unknown key '{}' in [{}]".format(key, section.name), line, path)

    def line(self, key: Optional[str] = None) -> int:
        if key is not None and key in self.section.entries:
            return self.section.entries[key][1]
        return self.section.line

    def has(self, key: str) -> bool:
        return key in self.section.entries

    def get(self, key: str, convert: Callable[[str], object] = str, default=None, required: bool = False):
        if key not in self.section.entries:
            if required:
                raise ScenarioError("[{}] is missing '{}'".format(self.section.name, key), self.section.line, self.path)
            return default
        raw, line = self.section.entries[key]
        try:
            return convert(raw)
        except (ValueError, IndexError):
            raise ScenarioError("bad value '{}' for '{}'".format(raw, key), line, self.path) from None

    def error(self, reason: str, key: Optional[str] = None) -> ScenarioError:
        return ScenarioError(reason, self.line(key), self.path)


def _point(raw: str) -> Vec2:
    x, y = raw.split(",")
    return Vec2(float(x), float(y))


def _points(raw: str) -> Tuple[Vec2, ...]:
    return tuple(_point(p) for p in raw.split())


def _pixels(raw: str) -> Tuple[Tuple[float, float], ...]:
    return tuple(p.as_tuple() for p in _points(raw))


def _pair(raw: str) -> Tuple[float, float]:
    lo, hi = raw.split(",")
    return float(lo), float(hi)


def _resolution(raw: str) -> Tuple[int, int]:
    w, h = raw.lower().split("x")
    return int(w), int(h)


def _ids(raw: str) -> Tuple[str, ...]:
    ids = tuple(p.strip() for p in raw.split(",") if p.strip())
    if not ids:
        raise ValueError("empty id list")
    return ids


def _degrees(raw: str) -> float:
    return math.radians(float(raw))


def _path(raw: str) -> Tuple[Tuple[float, Vec2], ...]:
    waypoints = []
    for item in raw.split():
        t, p = item.split(":")
        waypoints.append((float(t), _point(p)))
    return tuple(waypoints)


def _intervals(raw: str) -> Tuple[Tuple[float, float], ...]:
    intervals = []
    for item in raw.split(","):
        item = item.strip()
        if not item:
            continue
        start, end = item.split("-")
        intervals.append((float(start), float(end)))
    return tuple(intervals)


def _unique(readers: Sequence[_Reader], kind: str, path: Optional[str]) -> Dict[str, _Reader]:
    seen: Dict[str, _Reader] = {}
    for reader in readers:
        ident = reader.get("id", required=True)
        if ident in seen:
            raise ScenarioError("duplicate {} id '{}'".format(kind, ident), reader.line("id"), path)
        seen[ident] = reader
    return seen


def _build(constructor, reader: _Reader, **kwargs):
    try:
        return constructor(**kwargs)
    except ValueError as exc:
        raise reader.error(str(exc)) from None


def parse_scenario(text: str, path: Optional[str] = None, config: Optional[SimulationConfig] = None) -> Scenario:
    """Parses and validates scenario text.

    Parameters
    ----------
    text: :class:`str`
        The scenario.
    path: Optional[:class:`str`]
        Used in error messages only.
    config: Optional[:class:`SimulationConfig`]
        Base parameters; ``[params]`` entries are applied on top.

    Raises
    ------
    :exc:`ScenarioError`
        Syntax errors, unknown sections or keys, bad values, duplicate ids and invalid geometry.
    :exc:`DanglingReference`
        An entry refers to an id that is not declared.
    """
    sections = _split(text, path)
    by_name: Dict[str, List[RawSection]] = {name: [] for name in SECTIONS}
    for section in sections:
        by_name[section.name].append(section)

    params: Dict[str, Tuple[str, int]] = {}
    for section in by_name["params"]:
        for key, entry in section.entries.items():
            if key in params:
                raise ScenarioError("duplicate parameter '{}'".format(key), entry[1], path)
            params[key] = entry
    config = (config or SimulationConfig()).override(params, path)
    if config.run.duration <= 0 or config.run.tick <= 0:
        raise ScenarioError("duration and tick must be positive", path=path)

    def readers(name: str, allowed: Sequence[str]) -> List[_Reader]:
        return [_Reader(s, allowed, path) for s in by_name[name]]

    # floorplan
    rooms = []
    for ident, r in _unique(readers("room", ("id", "polygon")), "room", path).items():
        rooms.append(_build(Room, r, id=ident, polygon=r.get("polygon", _points, required=True)))
    walls = [Segment(*_segment(r)) for r in readers("wall", ("id", "segment"))]
    doors = [Segment(*_segment(r)) for r in readers("door", ("id", "segment"))]
    try:
        floorplan = Floorplan(tuple(rooms), tuple(walls), tuple(doors))
    except ValueError as exc:
        raise ScenarioError(str(exc), path=path) from None

    # cameras
    camera_keys = ("id", "kind", "position", "yaw", "hfov", "resolution", "mount_height", "paired_overview",
                   "stream_scale", "pan_range", "tilt_range", "max_zoom")
    camera_readers = _unique(readers("camera", camera_keys), "camera", path)
    cameras = []
    for ident, r in camera_readers.items():
        kind = r.get("kind", required=True).lower()
        if kind not in CameraKind.values():
            raise r.error("unknown camera kind '{}', expected one of {}".format(kind, ", ".join(CameraKind.values())), "kind")
        width, height = r.get("resolution", _resolution, required=True)
        optional = {}
        for key, convert in (("mount_height", float), ("stream_scale", int), ("pan_range", _pair),
                             ("tilt_range", _pair), ("max_zoom", float)):
            if r.has(key):
                optional[key] = r.get(key, convert)
        cameras.append(_build(
            CameraConfig, r, id=ident, kind=CameraKind(kind), position=r.get("position", _point, required=True),
            yaw=r.get("yaw", _degrees, required=True), hfov=r.get("hfov", _degrees, required=True), width=width, height=height,
            paired_overview=r.get("paired_overview"), **optional,
        ))
    if len(cameras) > config.matrix.max_inputs:
        raise ScenarioError("{} cameras exceed the {} matrix inputs".format(len(cameras), config.matrix.max_inputs), path=path)
    by_id = {c.id: c for c in cameras}
    for camera in cameras:
        if camera.paired_overview is None:
            continue
        r = camera_readers[camera.id]
        overview = by_id.get(camera.paired_overview)
        if overview is None:
            raise DanglingReference("camera", camera.paired_overview, r.line("paired_overview"), path)
        if overview.kind is not CameraKind.overview:
            raise r.error("camera '{}' is paired with '{}' which is not an overview camera".format(camera.id, overview.id), "paired_overview")

    # actors
    actor_keys = ("id", "path", "body_height", "body_width", "eye_height_fraction", "facing")
    actors = []
    for ident, r in _unique(readers("actor", actor_keys), "actor", path).items():
        optional = {key: r.get(key, float) for key in ("body_height", "body_width", "eye_height_fraction") if r.has(key)}
        actors.append(_build(Actor, r, id=ident, waypoints=r.get("path", _path, required=True),
                             facing=r.get("facing", _degrees), **optional))
    actors.sort(key=lambda a: a.id)

    # buckets
    buckets = []
    bucket_readers = _unique(readers("bucket", ("id", "cameras", "theta_on", "theta_off", "leak", "level_max")), "bucket", path)
    for ident, r in bucket_readers.items():
        camera_ids = r.get("cameras", _ids, required=True)
        for camera_id in camera_ids:
            if camera_id not in by_id:
                raise DanglingReference("camera", camera_id, r.line("cameras"), path)
        overrides = {key: r.get(key, float) for key in ("theta_on", "theta_off", "leak", "level_max") if r.has(key)}
        buckets.append(_build(Bucket.from_params, r, id=ident, camera_ids=camera_ids,
                              params=replace(config.selection, **overrides)))
    bucket_ids = {b.id for b in buckets}

    # zones
    zones = []
    for ident, r in _unique(readers("zone", ("id", "camera", "polygon", "weight", "buckets")), "zone", path).items():
        camera_id = r.get("camera", required=True)
        camera = by_id.get(camera_id)
        if camera is None:
            raise DanglingReference("camera", camera_id, r.line("camera"), path)
        if not camera.kind.is_rendered:
            raise r.error("zone '{}' is drawn in PTZ camera '{}', which has no processing stream".format(ident, camera_id), "camera")
        wired = r.get("buckets", _ids, required=True)
        for bucket_id in wired:
            if bucket_id not in bucket_ids:
                raise DanglingReference("bucket", bucket_id, r.line("buckets"), path)
        zone = _build(Zone, r, id=ident, camera_id=camera_id, polygon=r.get("polygon", _pixels, required=True),
                      weight=r.get("weight", float, 1.0), bucket_ids=wired)
        stream_w, stream_h = camera.stream_size
        if not polygon_mask(zone.stream_polygon(camera.stream_scale), stream_w, stream_h).any():
            raise r.error("zone '{}' covers no pixel of camera '{}'".format(ident, camera_id), "polygon")
        zones.append(zone)

    # annotations
    expected: Dict[str, Tuple[Tuple[float, float], ...]] = {}
    for r in readers("expect", ("bucket", "intervals")):
        bucket_id = r.get("bucket", required=True)
        if bucket_id not in bucket_ids:
            raise DanglingReference("bucket", bucket_id, r.line("bucket"), path)
        if bucket_id in expected:
            raise r.error("duplicate annotation for bucket '{}'".format(bucket_id), "bucket")
        intervals = r.get("intervals", _intervals, ())
        previous_end = -math.inf
        for start, end in intervals:
            if not start < end or start < previous_end:
                raise r.error("annotation intervals must be sorted, disjoint and non-empty", "intervals")
            previous_end = end
        expected[bucket_id] = intervals

    scenario = Scenario(floorplan, tuple(cameras), tuple(actors), tuple(zones), tuple(buckets), expected, config, path)
    LOG.debug("scenario %s: %d rooms, %d cameras, %d actors, %d zones, %d buckets", path, len(rooms), len(cameras),
              len(actors), len(zones), len(buckets))
    return scenario


def _segment(reader: _Reader) -> Tuple[Vec2, Vec2]:
    points = reader.get("segment", _points, required=True)
    if len(points) != 2:
        raise reader.error("a segment needs exactly two points", "segment")
    return points


def load_scenario(path, config: Optional[SimulationConfig] = None) -> Scenario:
    """Reads and validates the scenario file at ``path``.

    See :func:`parse_scenario` for the errors raised.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError("cannot read scenario: {}".format(exc.strerror or exc), path=str(path)) from None
    except UnicodeDecodeError as exc:
        raise ScenarioError("not valid UTF-8", line=undecodable_line(exc), path=str(path)) from None
    return parse_scenario(text, str(path), config)
