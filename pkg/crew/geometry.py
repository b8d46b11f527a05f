"""Ground-plane geometry in meters.

Floorplans are drawn as a top view with ``y`` pointing down, like image rows,
so bearings grow clockwise seen from above and follow the image ``u`` axis.
"""
import math

from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

EPS = 1e-9


@dataclass(frozen=True, slots=True)
class Vec2:
    """A point or direction on the ground plane.

    Attributes
    ----------
    x: :class:`float`
        Meters along the floorplan x axis.
    y: :class:`float`
        Meters along the floorplan y axis.
    """
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("Vec2 components must be finite, got ({}, {})".format(self.x, self.y))

    def __add__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x - other.x, self.y - other.y)

    def __mul__(self, k: float) -> "Vec2":
        return Vec2(self.x * k, self.y * k)

    __rmul__ = __mul__

    def dot(self, other: "Vec2") -> float:
        return self.x * other.x + self.y * other.y

    def cross(self, other: "Vec2") -> float:
        return self.x * other.y - self.y * other.x

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def bearing(self) -> float:
        """Direction of this vector in radians."""
        return math.atan2(self.y, self.x)

    def as_tuple(self) -> Tuple[float, float]:
        return self.x, self.y


@dataclass(frozen=True, slots=True)
class Segment:
    a: Vec2
    b: Vec2

    @property
    def length(self) -> float:
        return (self.b - self.a).norm()

    def param_of(self, p: Vec2) -> float:
        """Position of the orthogonal projection of ``p``, as a fraction of the segment."""
        d = self.b - self.a
        return (p - self.a).dot(d) / d.dot(d)

    def distance_to_line(self, p: Vec2) -> float:
        d = self.b - self.a
        return abs(d.cross(p - self.a)) / d.norm()

    def contains(self, p: Vec2, tol: float = 1e-6) -> bool:
        """Whether ``p`` lies on this segment, endpoints included."""
        if self.distance_to_line(p) > tol:
            return False
        t = self.param_of(p)
        slack = tol / self.length
        return -slack <= t <= 1.0 + slack

    def point_at(self, t: float) -> Vec2:
        return self.a + (self.b - self.a) * t


def crosses(p: Vec2, q: Vec2, wall: Segment) -> bool:
    """True if the open segment ``p``-``q`` hits ``wall`` (wall endpoints included).

    Parallel segments never count as a crossing; a sightline grazing along a wall
    is treated as unobstructed.
    """
    r = q - p
    s = wall.b - wall.a
    denom = r.cross(s)
    if abs(denom) < EPS:
        return False
    w = wall.a - p
    t = w.cross(s) / denom
    u = w.cross(r) / denom
    return EPS < t < 1.0 - EPS and -EPS <= u <= 1.0 + EPS


def subtract_gaps(wall: Segment, gaps: Iterable[Segment]) -> List[Segment]:
    """The solid pieces of ``wall`` once every gap lying on it is cut out."""
    spans = []
    for gap in gaps:
        t0, t1 = sorted((wall.param_of(gap.a), wall.param_of(gap.b)))
        spans.append((max(0.0, t0), min(1.0, t1)))
    spans.sort()

    pieces = []
    cursor = 0.0
    for t0, t1 in spans:
        if t0 > cursor + EPS:
            pieces.append(Segment(wall.point_at(cursor), wall.point_at(t0)))
        cursor = max(cursor, t1)
    if cursor < 1.0 - EPS:
        pieces.append(Segment(wall.point_at(cursor), wall.b))
    return pieces


def is_convex(polygon: Sequence[Vec2]) -> bool:
    """Whether ``polygon`` is a simple, strictly convex polygon (either winding)."""
    n = len(polygon)
    if n < 3:
        return False
    sign = 0
    turning = 0.0
    for i in range(n):
        a, b, c = polygon[i], polygon[(i + 1) % n], polygon[(i + 2) % n]
        e1, e2 = b - a, c - b
        if e1.norm() < EPS or e2.norm() < EPS:
            return False
        z = e1.cross(e2)
        if abs(z) < EPS:
            return False
        if sign == 0:
            sign = 1 if z > 0 else -1
        elif (z > 0) != (sign > 0):
            return False
        turning += math.atan2(z, e1.dot(e2))
    # a star drawn with consistent turns winds twice
    return abs(abs(turning) - 2.0 * math.pi) < 1e-6


def inside_convex(polygon: Sequence[Vec2], p: Vec2) -> bool:
    """Point-in-polygon for a convex polygon, boundary included."""
    sign = 0
    n = len(polygon)
    for i in range(n):
        a, b = polygon[i], polygon[(i + 1) % n]
        z = (b - a).cross(p - a)
        if abs(z) < EPS:
            continue
        if sign == 0:
            sign = 1 if z > 0 else -1
        elif (z > 0) != (sign > 0):
            return False
    return True
