"""The video switch matrix, the multi-channel recorder behind it and storage accounting."""
import logging

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .config import MatrixParams
from .enums import EventKind
from .errors import InvalidArgument, UnknownCamera

LOG = logging.getLogger(__name__)

#: Channel content: ``(camera id, segment start)``, or ``None`` when free.
Slot = Optional[Tuple[str, float]]


@dataclass(frozen=True, slots=True)
class RecordSegmentEvent:
    camera_id: str
    channel: int
    kind: EventKind
    t: float


@dataclass(frozen=True, slots=True)
class MatrixState:
    """Which camera every recorder channel is capturing.

    Attributes
    ----------
    inputs: Tuple[:class:`str`]
        Camera ids wired into the matrix.
    channels: Tuple[Optional[Tuple[:class:`str`, :class:`float`]]]
        One slot per recorder channel.
    pending: Tuple[:class:`str`]
        Requested cameras waiting for a free channel, best first.
    """
    inputs: Tuple[str, ...]
    channels: Tuple[Slot, ...]
    pending: Tuple[str, ...] = ()

    def __post_init__(self):
        assigned = [slot[0] for slot in self.channels if slot is not None]
        if len(assigned) != len(set(assigned)):
            raise ValueError("a camera occupies two channels")
        if set(assigned) & set(self.pending):
            raise ValueError("a camera is both pending and assigned")

    @classmethod
    def empty(cls, inputs: Iterable[str], params: MatrixParams = MatrixParams()) -> "MatrixState":
        inputs = tuple(inputs)
        if len(inputs) > params.max_inputs:
            raise InvalidArgument("{} cameras exceed the {} matrix inputs".format(len(inputs), params.max_inputs))
        return cls(inputs, (None,) * params.channels)

    @property
    def assigned(self) -> Dict[str, int]:
        """Maps each recording camera to its channel index."""
        return {slot[0]: index for index, slot in enumerate(self.channels) if slot is not None}

    def channel_of(self, camera_id: str) -> Optional[int]:
        return self.assigned.get(camera_id)


def matrix_tick(state: MatrixState, requested: Iterable[str], priority: Mapping[str, float], t: float) -> Tuple[List[RecordSegmentEvent], MatrixState]:
    """Routes the requested cameras onto recorder channels.

    Cameras no longer requested are stopped first. Waiting cameras then take free channels,
    highest priority first and ties by camera id, lowest channel first. A recording camera
    is never preempted.

    Raises
    ------
    :exc:`UnknownCamera`
        A requested camera is not a matrix input.
    """
    requested = set(requested)
    for camera_id in sorted(requested):
        if camera_id not in state.inputs:
            raise UnknownCamera(camera_id)

    events = []
    channels = list(state.channels)
    for index, slot in enumerate(channels):
        if slot is not None and slot[0] not in requested:
            events.append(RecordSegmentEvent(slot[0], index, EventKind.record_stop, t))
            channels[index] = None

    assigned = {slot[0] for slot in channels if slot is not None}
    waiting = sorted(requested - assigned, key=lambda c: (-priority.get(c, 0.0), c))
    free = [index for index, slot in enumerate(channels) if slot is None]
    for camera_id, index in zip(waiting, free):
        channels[index] = (camera_id, t)
        events.append(RecordSegmentEvent(camera_id, index, EventKind.record_start, t))

    pending = tuple(waiting[len(free):])
    if pending and pending != state.pending:
        LOG.warning("matrix oversubscribed at t=%.4f, waiting: %s", t, ", ".join(pending))
    return events, replace(state, channels=tuple(channels), pending=pending)


def storage_bytes(duration: float, bitrate: float) -> int:
    """Bytes taken by ``duration`` seconds at ``bitrate`` bits per second.

    Both values are taken at their decimal face value, so ``86400 s`` at ``102e6``
    gives exactly ``1_101_600_000_000``.
    """
    if duration < 0:
        raise InvalidArgument("duration must be >= 0")
    return round(Fraction(str(duration)) * Fraction(str(bitrate)) / 8)


@dataclass(frozen=True, slots=True)
class RecordedSegment:
    camera_id: str
    start: float
    end: float


class StorageLedger:
    """Closed recording segments per camera, fed from matrix events.

    Attributes
    ----------
    bitrate: :class:`float`
        Recording bitrate in bits per second.
    segments: List[:class:`RecordedSegment`]
        Closed segments in the order they were closed.
    """

    __slots__ = ("bitrate", "segments", "_open")

    def __init__(self, bitrate: float = 102e6):
        self.bitrate = bitrate
        self.segments: List[RecordedSegment] = []
        self._open: Dict[str, float] = {}

    def __repr__(self):
        return "<StorageLedger segments={} open={}>".format(len(self.segments), len(self._open))

    def apply(self, events: Iterable[RecordSegmentEvent]):
        for event in events:
            if event.kind is EventKind.record_start:
                if event.camera_id in self._open:
                    raise InvalidArgument("camera '{}' started twice".format(event.camera_id))
                self._open[event.camera_id] = event.t
            elif event.kind is EventKind.record_stop:
                start = self._open.pop(event.camera_id, None)
                if start is None:
                    raise InvalidArgument("camera '{}' stopped without a start".format(event.camera_id))
                self._close(event.camera_id, start, event.t)

    def close_all(self, t: float) -> List[str]:
        """Ends every open segment at ``t``, e.g. when a run finishes, and returns the cameras closed."""
        closed = []
        for camera_id, start in sorted(self._open.items()):
            self._close(camera_id, start, t)
            closed.append(camera_id)
        self._open.clear()
        return closed

    def _close(self, camera_id: str, start: float, end: float):
        if end > start:
            self.segments.append(RecordedSegment(camera_id, start, end))

    def recorded_seconds(self, camera_id: Optional[str] = None) -> float:
        return sum(s.end - s.start for s in self.segments if camera_id is None or s.camera_id == camera_id)

    def bytes_for(self, camera_id: str) -> int:
        return sum(storage_bytes(s.end - s.start, self.bitrate) for s in self.segments if s.camera_id == camera_id)

    def per_camera(self, camera_ids: Sequence[str]) -> Dict[str, Tuple[float, int]]:
        """``(seconds, bytes)`` recorded by each camera."""
        return {c: (self.recorded_seconds(c), self.bytes_for(c)) for c in camera_ids}


def savings_report(ledger: StorageLedger, total_camera_seconds: float) -> float:
    """Share of storage saved compared to recording every camera all the time."""
    if total_camera_seconds <= 0:
        raise InvalidArgument("total_camera_seconds must be > 0")
    return 1.0 - ledger.recorded_seconds() / total_camera_seconds
