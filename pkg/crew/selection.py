"""Camera selection through leaky buckets.

Zones are polygons in a camera image. Their foreground share, times their weight,
pours into the buckets they are wired to; each bucket leaks at a constant rate and
its cameras record while its level is high enough.
"""
import logging
import math

from dataclasses import dataclass, replace
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

from .config import SelectionParams
from .errors import InvalidArgument
from .utils import get

LOG = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class Zone:
    """A weighted image polygon feeding one or more buckets.

    Attributes
    ----------
    id: :class:`str`
        The zone id.
    camera_id: :class:`str`
        The camera whose image the polygon is drawn in.
    polygon: Tuple[Tuple[:class:`float`, :class:`float`]]
        Vertices in native pixels of that camera.
    weight: :class:`float`
        Inflow in level per second at full activity. Keep low zones, where pets roam, light.
    bucket_ids: Tuple[:class:`str`]
        Buckets this zone pours into. A door zone usually feeds the room behind the door.
    """
    id: str
    camera_id: str
    polygon: Tuple[Tuple[float, float], ...]
    weight: float
    bucket_ids: Tuple[str, ...]

    def __post_init__(self):
        if self.weight < 0:
            raise ValueError("zone '{}' weight must be >= 0".format(self.id))
        if not self.bucket_ids:
            raise ValueError("zone '{}' feeds no bucket".format(self.id))
        if len(self.polygon) < 3:
            raise ValueError("zone '{}' polygon needs at least 3 vertices".format(self.id))

    def stream_polygon(self, scale: int) -> Tuple[Tuple[float, float], ...]:
        return tuple((x / scale, y / scale) for x, y in self.polygon)


@dataclass(frozen=True, slots=True)
class Bucket:
    """A room's integration level and whether its cameras are recording."""
    id: str
    camera_ids: Tuple[str, ...]
    theta_on: float = 1.0
    theta_off: float = 0.5
    leak: float = 0.1
    level_max: float = 3.0
    level: float = 0.0
    recording: bool = False

    def __post_init__(self):
        if not 0.0 < self.theta_off <= self.theta_on <= self.level_max:
            raise ValueError("bucket '{}' needs 0 < theta_off <= theta_on <= level_max".format(self.id))
        if self.leak < 0:
            raise ValueError("bucket '{}' leak must be >= 0".format(self.id))
        if not 0.0 <= self.level <= self.level_max:
            raise ValueError("bucket '{}' level out of [0, level_max]".format(self.id))

    @classmethod
    def from_params(cls, id: str, camera_ids: Iterable[str], params: SelectionParams) -> "Bucket":
        return cls(id, tuple(camera_ids), params.theta_on, params.release, params.leak, params.cap)


def bucket_step(bucket: Bucket, inflow: float, dt: float) -> Bucket:
    """Advances a bucket by ``dt`` seconds of ``inflow``.

    Recording switches on at ``theta_on`` and only switches off below ``theta_off``.

    Raises
    ------
    :exc:`InvalidArgument`
        ``inflow`` is negative or ``dt`` is not positive.
    """
    if inflow < 0:
        raise InvalidArgument("inflow must be >= 0, got {}".format(inflow))
    if dt <= 0:
        raise InvalidArgument("dt must be > 0, got {}".format(dt))

    level = min(max(bucket.level + (inflow - bucket.leak) * dt, 0.0), bucket.level_max)
    recording = bucket.recording
    if level >= bucket.theta_on:
        recording = True
    elif level < bucket.theta_off:
        recording = False
    return replace(bucket, level=level, recording=recording)


def inflow_for_bucket(activities: Mapping[str, float], zones: Iterable[Zone], bucket_id: str) -> float:
    """Total inflow of ``bucket_id``: the weighted activity of every zone wired to it.

    Zones missing from ``activities`` count as idle.
    """
    total = 0.0
    for zone in zones:
        if bucket_id in zone.bucket_ids:
            total += zone.weight * activities.get(zone.id, 0.0)
    return total


@dataclass(frozen=True, slots=True)
class SelectionState:
    """Buckets, zones and the resulting per-camera record flags.

    ``camera_ids`` lists every camera that gets a flag, in output order.
    """
    buckets: Tuple[Bucket, ...]
    zones: Tuple[Zone, ...]
    camera_ids: Tuple[str, ...]
    flags: Tuple[bool, ...] = ()

    def __post_init__(self):
        if not self.flags:
            object.__setattr__(self, "flags", tuple(False for _ in self.camera_ids))

    @property
    def record_flags(self) -> Dict[str, bool]:
        return dict(zip(self.camera_ids, self.flags))

    @property
    def levels(self) -> Dict[str, float]:
        return {b.id: b.level for b in self.buckets}

    def bucket(self, bucket_id: str) -> Optional[Bucket]:
        return get(self.buckets, id=bucket_id)

    def priority(self, camera_id: str) -> float:
        """The highest level among the buckets ``camera_id`` belongs to."""
        return max((b.level for b in self.buckets if camera_id in b.camera_ids), default=0.0)


def camera_flags(buckets: Sequence[Bucket], camera_ids: Sequence[str]) -> Tuple[bool, ...]:
    recording = {c for b in buckets if b.recording for c in b.camera_ids}
    return tuple(c in recording for c in camera_ids)


def selection_tick(state: SelectionState, activities: Mapping[str, float], dt: float) -> SelectionState:
    """Pours one tick of zone activity into every bucket and recomputes the camera flags."""
    buckets = []
    for bucket in state.buckets:
        updated = bucket_step(bucket, inflow_for_bucket(activities, state.zones, bucket.id), dt)
        if updated.recording != bucket.recording:
            LOG.debug("bucket %s %s at level %.4f", bucket.id, "triggered" if updated.recording else "released", updated.level)
        buckets.append(updated)
    return replace(state, buckets=tuple(buckets), flags=camera_flags(buckets, state.camera_ids))


def time_to_threshold(inflow: float, leak: float, theta: float) -> Optional[float]:
    """Seconds for an empty bucket to reach ``theta``; ``None`` if it never does."""
    if min(inflow, leak, theta) < 0:
        raise InvalidArgument("inflow, leak and theta must be >= 0")
    if theta == 0:
        return 0.0
    if inflow <= leak:
        return None
    return theta / (inflow - leak)


def max_preroll_speed(approach_distance: float, inflow: float, leak: float, theta_on: float) -> float:
    """Fastest approach, in m/s, for which a bucket still triggers in time.

    ``approach_distance`` is how far the actor walks inside the zone before entering the room,
    ``inflow`` the rate that zone pours while the actor is in it.
    """
    needed = time_to_threshold(inflow, leak, theta_on)
    if needed is None:
        return 0.0
    if needed == 0:
        return math.inf
    return approach_distance / needed
