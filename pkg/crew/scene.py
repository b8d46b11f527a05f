"""The simulated world: floorplan, cameras, actors and their projection into images."""
import math

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .enums import CameraKind
from .errors import OutOfRange
from .geometry import EPS, Segment, Vec2, crosses, inside_convex, is_convex, subtract_gaps
from .utils import wrap_angle

#: Below this ground distance (meters) a projection is considered degenerate.
MIN_PROJECTION_DISTANCE = 0.2

#: Share of the full-body box, from the top, covered by an upper-body box.
UPPER_BODY_FRACTION = 0.4

DEFAULT_MOUNT_HEIGHT = 1.6


@dataclass(frozen=True, slots=True)
class Room:
    """A named convex room outline on the ground plane."""
    id: str
    polygon: Tuple[Vec2, ...]

    def __post_init__(self):
        if not is_convex(self.polygon):
            raise ValueError("room '{}' is not a simple convex polygon".format(self.id))

    def contains(self, p: Vec2) -> bool:
        return inside_convex(self.polygon, p)


@dataclass(frozen=True, slots=True)
class Floorplan:
    """Rooms, walls and the door gaps cut into them.

    Attributes
    ----------
    rooms: Tuple[:class:`Room`]
        The rooms, in declaration order.
    walls: Tuple[:class:`Segment`]
        Wall segments, doors included.
    doors: Tuple[:class:`Segment`]
        Gaps in the walls. Every door lies on some wall.
    occluders: Tuple[:class:`Segment`]
        The solid wall pieces left once doors are cut out. These are what block sightlines.
    """
    rooms: Tuple[Room, ...] = ()
    walls: Tuple[Segment, ...] = ()
    doors: Tuple[Segment, ...] = ()
    occluders: Tuple[Segment, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for wall in self.walls:
            if wall.length <= EPS:
                raise ValueError("wall {} has zero length".format(wall))

        hosted = {i: [] for i in range(len(self.walls))}
        for door in self.doors:
            host = next((i for i, w in enumerate(self.walls) if w.contains(door.a) and w.contains(door.b)), None)
            if host is None:
                raise ValueError("door {} does not lie on any wall".format(door))
            hosted[host].append(door)

        pieces = []
        for i, wall in enumerate(self.walls):
            pieces.extend(subtract_gaps(wall, hosted[i]))
        object.__setattr__(self, "occluders", tuple(pieces))

    def room_at(self, p: Vec2) -> Optional[str]:
        """The id of the first room containing ``p``, or ``None`` when outside every room."""
        for room in self.rooms:
            if room.contains(p):
                return room.id
        return None


@dataclass(frozen=True, slots=True)
class CameraConfig:
    """A mounted camera.

    ``yaw`` and ``hfov`` are radians. ``width`` and ``height`` are the native resolution;
    frames are processed at the stream resolution, ``stream_scale`` times smaller.
    The mechanical ``pan_range``, ``tilt_range`` (degrees) and ``max_zoom`` only matter for PTZ cameras.
    """
    id: str
    kind: CameraKind
    position: Vec2
    yaw: float
    hfov: float
    width: int
    height: int
    mount_height: float = DEFAULT_MOUNT_HEIGHT
    paired_overview: Optional[str] = None
    stream_scale: int = 1
    pan_range: Tuple[float, float] = (-170.0, 170.0)
    tilt_range: Tuple[float, float] = (-90.0, 90.0)
    max_zoom: float = 4.0

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("camera '{}' resolution must be positive".format(self.id))
        if not 0.0 < self.hfov < math.pi:
            raise ValueError("camera '{}' hfov must lie in (0, pi)".format(self.id))
        if self.stream_scale < 1 or self.width % self.stream_scale or self.height % self.stream_scale:
            raise ValueError("camera '{}' stream_scale must divide the resolution".format(self.id))
        if (self.kind is CameraKind.ptz) != (self.paired_overview is not None):
            raise ValueError("camera '{}': paired_overview is required for, and only for, PTZ cameras".format(self.id))
        if self.max_zoom < 1.0:
            raise ValueError("camera '{}' max_zoom must be >= 1".format(self.id))

    @property
    def focal(self) -> float:
        """:class:`float`: Focal length in native pixels."""
        return (self.width / 2.0) / math.tan(self.hfov / 2.0)

    @property
    def vfov(self) -> float:
        return 2.0 * math.atan((self.height / 2.0) / self.focal)

    @property
    def stream_size(self) -> Tuple[int, int]:
        """:class:`tuple`: ``(width, height)`` of the processing stream."""
        return self.width // self.stream_scale, self.height // self.stream_scale


@dataclass(frozen=True, slots=True)
class ImageBox:
    """An axis-aligned rectangle in a camera image, ``(x, y)`` being its top-left corner."""
    x: float
    y: float
    w: float
    h: float
    camera_id: Optional[str] = None

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError("ImageBox needs a positive size, got {}x{}".format(self.w, self.h))

    @property
    def right(self) -> float:
        return self.x + self.w

    @property
    def bottom(self) -> float:
        return self.y + self.h

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def center(self) -> Tuple[float, float]:
        return self.x + self.w / 2.0, self.y + self.h / 2.0

    def intersection(self, other: "ImageBox") -> float:
        """Area shared with ``other``."""
        iw = min(self.right, other.right) - max(self.x, other.x)
        ih = min(self.bottom, other.bottom) - max(self.y, other.y)
        if iw <= 0 or ih <= 0:
            return 0.0
        return iw * ih

    def iou(self, other: "ImageBox") -> float:
        inter = self.intersection(other)
        return inter / (self.area + other.area - inter)

    def contains(self, other: "ImageBox") -> bool:
        return self.x <= other.x and self.y <= other.y and other.right <= self.right and other.bottom <= self.bottom

    def clip(self, width: float, height: float) -> Optional["ImageBox"]:
        """This box cut to ``[0, width] x [0, height]``, or ``None`` if nothing is left."""
        x0, y0 = max(self.x, 0.0), max(self.y, 0.0)
        x1, y1 = min(self.right, float(width)), min(self.bottom, float(height))
        if x1 <= x0 or y1 <= y0:
            return None
        return ImageBox(x0, y0, x1 - x0, y1 - y0, self.camera_id)

    def inflate(self, fraction: float) -> "ImageBox":
        """Grows the box by ``fraction`` of its size on every side."""
        dx, dy = self.w * fraction, self.h * fraction
        return ImageBox(self.x - dx, self.y - dy, self.w + 2 * dx, self.h + 2 * dy, self.camera_id)

    def scaled(self, factor: float) -> "ImageBox":
        return ImageBox(self.x * factor, self.y * factor, self.w * factor, self.h * factor, self.camera_id)

    def upper_body(self) -> "ImageBox":
        """The top part of a full-body box where an upper-body detector would fire."""
        return ImageBox(self.x, self.y, self.w, self.h * UPPER_BODY_FRACTION, self.camera_id)


@dataclass(frozen=True, slots=True)
class Actor:
    """A person walking a timed path.

    Attributes
    ----------
    id: :class:`str`
        The actor id. Actors are drawn in order of id.
    waypoints: Tuple[Tuple[:class:`float`, :class:`Vec2`]]
        ``(time, position)`` pairs with strictly increasing times. The actor is only
        part of the scene between the first and the last waypoint time.
    facing: Optional[:class:`float`]
        Heading in radians used when the path never moves.
    """
    id: str
    waypoints: Tuple[Tuple[float, Vec2], ...]
    body_height: float = 1.75
    body_width: float = 0.5
    eye_height_fraction: float = 0.93
    facing: Optional[float] = None
    _times: np.ndarray = field(init=False, repr=False, compare=False)
    _xs: np.ndarray = field(init=False, repr=False, compare=False)
    _ys: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.waypoints:
            raise ValueError("actor '{}' has no waypoints".format(self.id))
        if self.body_height <= 0 or self.body_width <= 0:
            raise ValueError("actor '{}' body dimensions must be positive".format(self.id))
        if not 0.0 < self.eye_height_fraction <= 1.0:
            raise ValueError("actor '{}' eye_height_fraction must lie in (0, 1]".format(self.id))

        times = np.array([t for t, _ in self.waypoints], dtype=np.float64)
        if np.any(np.diff(times) <= 0):
            raise ValueError("actor '{}' waypoint times must be strictly increasing".format(self.id))
        object.__setattr__(self, "_times", times)
        object.__setattr__(self, "_xs", np.array([p.x for _, p in self.waypoints], dtype=np.float64))
        object.__setattr__(self, "_ys", np.array([p.y for _, p in self.waypoints], dtype=np.float64))

    @property
    def start(self) -> float:
        return float(self._times[0])

    @property
    def end(self) -> float:
        return float(self._times[-1])

    def present(self, t: float) -> bool:
        return self.start <= t <= self.end

    def heading(self, t: float) -> Optional[float]:
        """Direction of travel in radians at ``t``.

        While standing still the actor keeps facing the way it last walked,
        or the way it will walk first, or :attr:`facing` for a path that never moves.
        """
        n = len(self._times)
        if n < 2:
            return self.facing
        i = int(np.searchsorted(self._times, t, side="right")) - 1
        i = min(max(i, 0), n - 2)
        order = [i] + list(range(i - 1, -1, -1)) + list(range(i + 1, n - 1))
        for k in order:
            dx = self._xs[k + 1] - self._xs[k]
            dy = self._ys[k + 1] - self._ys[k]
            if dx != 0.0 or dy != 0.0:
                return math.atan2(dy, dx)
        return self.facing


def actor_position(actor: Actor, t: float) -> Vec2:
    """Where ``actor`` stands at time ``t``, interpolating linearly between waypoints.

    Raises
    ------
    :exc:`OutOfRange`
        ``t`` lies outside the waypoint times.
    """
    if not actor.present(t):
        raise OutOfRange("t={} is outside actor '{}' path [{}, {}]".format(t, actor.id, actor.start, actor.end))
    return Vec2(float(np.interp(t, actor._times, actor._xs)), float(np.interp(t, actor._times, actor._ys)))


def bearing_offset(camera: CameraConfig, point: Vec2) -> float:
    """Angle of ``point`` off the optical axis, positive towards larger ``u``."""
    return wrap_angle((point - camera.position).bearing() - camera.yaw)


def visible(floorplan: Floorplan, camera: CameraConfig, point: Vec2) -> bool:
    """Whether ``camera`` has a clear line of sight to ``point`` within its horizontal field of view."""
    if (point - camera.position).norm() < EPS:
        return False
    if abs(bearing_offset(camera, point)) > camera.hfov / 2.0:
        return False
    return not any(crosses(camera.position, point, wall) for wall in floorplan.occluders)


def project(floorplan: Floorplan, camera: CameraConfig, actor: Actor, t: float) -> Optional[ImageBox]:
    """The full-body box of ``actor`` in ``camera`` at ``t``, in native pixels.

    Returns ``None`` when the actor is not in the scene at ``t``, cannot be seen,
    or stands closer than :data:`MIN_PROJECTION_DISTANCE`. The box is not clipped.
    """
    if not actor.present(t):
        return None
    p = actor_position(actor, t)
    d = (p - camera.position).norm()
    if d < MIN_PROJECTION_DISTANCE or not visible(floorplan, camera, p):
        return None

    f = camera.focal
    u = camera.width / 2.0 + f * math.tan(bearing_offset(camera, p))
    w = f * actor.body_width / d
    top = camera.height / 2.0 - f * (actor.body_height - camera.mount_height) / d
    bottom = camera.height / 2.0 + f * camera.mount_height / d
    return ImageBox(u - w / 2.0, top, w, bottom - top, camera.id)


def visible_actors(floorplan: Floorplan, camera: CameraConfig, actors: Sequence[Actor], t: float):
    """Yields ``(actor, box)`` for every actor ``camera`` sees at ``t``, in order of actor id."""
    for actor in sorted(actors, key=lambda a: a.id):
        box = project(floorplan, camera, actor, t)
        if box is not None:
            yield actor, box
