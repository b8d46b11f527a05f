"""The virtual camera man: framing shots from detections and deciding when to cut.

A canvas is the 16:9 rectangle, in overview camera pixels, a PTZ camera should show.
Group shots keep everyone in view with some margin and put the highest eye line on the
upper third line. Single people get a medium shot with lead room on the side they look at.
"""
import logging

from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

from .config import ComposeParams, DiffParams, ShotParams
from .detection import Detection
from .enums import Gaze
from .errors import InvalidArgument
from .scene import ImageBox

__all__ = (
    "Canvas",
    "ComposeParams",
    "DiffParams",
    "ShotState",
    "propose_canvas",
    "is_steady",
    "differs",
    "shot_fsm_tick",
)

LOG = logging.getLogger(__name__)

ASPECT = 16.0 / 9.0
TIME_SLACK = 1e-9
#: Relative room added when a canvas grows to hold its detections, so none touches an edge.
FIT_SLACK = 1e-6


@dataclass(frozen=True, slots=True)
class Canvas:
    """A proposed shot.

    Attributes
    ----------
    rect: :class:`ImageBox`
        The framing rectangle in overview pixels.
    clamped: :class:`bool`
        The ideal framing did not fit the frame and was shrunk or moved.
    expanded: :class:`bool`
        The framing was grown beyond its nominal size to keep every detection inside.
    """
    rect: ImageBox
    clamped: bool = False
    expanded: bool = False

    @property
    def center(self) -> Tuple[float, float]:
        return self.rect.center

    @property
    def width(self) -> float:
        return self.rect.w

    @property
    def height(self) -> float:
        return self.rect.h


def _around(ax: float, ay: float, rx: float, ry: float, height: float) -> Tuple[float, float, float, float]:
    width = height * ASPECT
    return ax - rx * width, ay - ry * height, width, height


def _fit_height(ax: float, ay: float, rx: float, ry: float, height: float, boxes: Sequence[ImageBox]) -> float:
    """Smallest height, not below ``height``, for which the anchored canvas holds every box strictly inside."""
    left = min(b.x for b in boxes)
    right = max(b.right for b in boxes)
    top = min(b.y for b in boxes)
    bottom = max(b.bottom for b in boxes)
    needed = [(ay - top) / ry, (bottom - ay) / (1.0 - ry)]
    if rx > 0:
        needed.append((ax - left) / rx / ASPECT)
    if rx < 1:
        needed.append((right - ax) / (1.0 - rx) / ASPECT)
    fit = max(needed)
    if fit < height * (1.0 - FIT_SLACK):
        return height
    return max(height, fit * (1.0 + FIT_SLACK))


def _anchor(detections: Sequence[Detection], params: ComposeParams, margin: float) -> Tuple[float, float, float, float]:
    """``(ax, ay, rx, height)``: the point to pin, where it goes horizontally and the nominal height."""
    highest_eye = min(d.eye_point[1] for d in detections)
    if len(detections) == 1:
        detection = detections[0]
        box = detection.box
        height = params.single_height_factor * box.h
        # lead room on the gaze side
        rx = {Gaze.right: 1.0 / 3.0, Gaze.left: 2.0 / 3.0}.get(detection.gaze, 0.5)
        return box.center[0], highest_eye, rx, height

    left = min(d.box.x for d in detections)
    right = max(d.box.right for d in detections)
    width = (1.0 + margin) * (right - left)
    return (left + right) / 2.0, highest_eye, 0.5, width / ASPECT


def _compose(detections: Sequence[Detection], params: ComposeParams, margin: float) -> Tuple[Tuple[float, float, float, float], bool]:
    ax, ay, rx, height = _anchor(detections, params, margin)
    boxes = [d.box for d in detections]
    fitted = _fit_height(ax, ay, rx, params.eye_line, height, boxes)
    return _around(ax, ay, rx, params.eye_line, fitted), fitted > height * (1.0 + 1e-9)


def propose_canvas(detections: Sequence[Detection], frame_width: float, frame_height: float,
                   params: ComposeParams = ComposeParams()) -> Canvas:
    """Frames ``detections`` in a 16:9 canvas inside a ``frame_width`` by ``frame_height`` frame.

    When the ideal framing does not fit, the group margin shrinks first (down to
    :attr:`ComposeParams.margin_floor`), then the canvas is capped to the largest 16:9
    rectangle of the frame, and finally it is moved inside the frame, giving up the eye line.

    Raises
    ------
    :exc:`InvalidArgument`
        ``detections`` is empty.
    """
    if not detections:
        raise InvalidArgument("cannot frame an empty detection list")

    largest = min(frame_width, frame_height * ASPECT)
    margin = params.width_margin
    (x, y, w, h), expanded = _compose(detections, params, margin)
    clamped = False

    if w > largest and len(detections) > 1 and margin > params.margin_floor:
        left = min(d.box.x for d in detections)
        right = max(d.box.right for d in detections)
        margin = max(params.margin_floor, min(margin, largest / (right - left) - 1.0))
        (x, y, w, h), expanded = _compose(detections, params, margin)
        clamped = True

    if w > largest:
        cx, cy = x + w / 2.0, y + h / 2.0
        w, h = largest, largest / ASPECT
        x, y = cx - w / 2.0, cy - h / 2.0
        clamped = True

    nx = min(max(x, 0.0), frame_width - w)
    ny = min(max(y, 0.0), frame_height - h)
    if nx != x or ny != y:
        clamped = True

    return Canvas(ImageBox(nx, ny, w, h), clamped=clamped, expanded=expanded)


def _pair(first: Sequence[Detection], other: Sequence[Detection]) -> List[Tuple[Detection, Detection]]:
    hints = [d.actor_hint for d in first]
    if None not in hints and len(set(hints)) == len(hints) and sorted(hints) == sorted(d.actor_hint for d in other):
        by_hint = {d.actor_hint: d for d in other}
        return [(d, by_hint[d.actor_hint]) for d in first]
    key = lambda d: d.box.center[0]
    return list(zip(sorted(first, key=key), sorted(other, key=key)))


def is_steady(history: Sequence[Sequence[Detection]], frame_width: float, eps_move: float = 0.01, eps_size: float = 0.05) -> bool:
    """Whether the people in ``history`` hardly moved over the window.

    Every snapshot is compared with the oldest one: the same number of people, each center
    closer than ``eps_move * frame_width`` and each size within ``eps_size`` of where it was.
    A window without anybody in it is steady.

    Raises
    ------
    :exc:`InvalidArgument`
        Fewer than two snapshots.
    """
    if len(history) < 2:
        raise InvalidArgument("steadiness needs at least two snapshots")

    first = history[0]
    limit = eps_move * frame_width
    for snapshot in history[1:]:
        if len(snapshot) != len(first):
            return False
        for a, b in _pair(first, snapshot):
            (ax, ay), (bx, by) = a.box.center, b.box.center
            if not ((ax - bx) ** 2 + (ay - by) ** 2) ** 0.5 < limit:
                return False
            if not (abs(b.box.w / a.box.w - 1.0) < eps_size and abs(b.box.h / a.box.h - 1.0) < eps_size):
                return False
    return True


def differs(current: Canvas, proposed: Canvas, params: DiffParams, frame_width: float) -> bool:
    """Whether ``proposed`` is considerably different from ``current`` in position or size."""
    if current.rect.iou(proposed.rect) < params.iou_min:
        return True
    (cx, cy), (px, py) = current.center, proposed.center
    if ((cx - px) ** 2 + (cy - py) ** 2) ** 0.5 > params.center_shift_max * frame_width:
        return True
    ratio = proposed.width / current.width
    return not params.size_ratio_min <= ratio <= params.size_ratio_max


@dataclass(frozen=True, slots=True)
class ShotState:
    """The shot on air and the candidate waiting to replace it.

    Attributes
    ----------
    current: Optional[:class:`Canvas`]
        The shot on air, ``None`` before the first one.
    age: :class:`float`
        Seconds the current shot has been on air.
    pending: Optional[:class:`Canvas`]
        The candidate shot, which differs from the current one.
    pending_age: :class:`float`
        Seconds the candidate has stayed steady and different.
    min_shot: :class:`float`
        A shot stays on air at least this long.
    hold: :class:`float`
        A candidate must persist this long before a cut.
    """
    current: Optional[Canvas] = None
    age: float = 0.0
    pending: Optional[Canvas] = None
    pending_age: float = 0.0
    min_shot: float = 6.0
    hold: float = 2.0

    def __post_init__(self):
        if self.age < 0 or self.pending_age < 0:
            raise ValueError("shot ages must be >= 0")

    @classmethod
    def from_params(cls, params: ShotParams) -> "ShotState":
        return cls(min_shot=params.min_shot, hold=params.hold)


def shot_fsm_tick(state: ShotState, proposal: Optional[Canvas], steady: bool, dt: float,
                  diff: DiffParams = DiffParams(), frame_width: float = 1920.0) -> Tuple[Optional[Canvas], ShotState]:
    """Advances the shot state by ``dt`` and returns the canvas cut to, if any.

    The first steady proposal goes on air at once. Afterwards a cut needs the current shot
    to be at least ``min_shot`` old and a steady, different candidate held for ``hold``
    seconds. A candidate that itself changes considerably starts its hold over.

    Raises
    ------
    :exc:`InvalidArgument`
        ``dt`` is not positive.
    """
    if dt <= 0:
        raise InvalidArgument("dt must be > 0, got {}".format(dt))

    if state.current is None:
        if proposal is not None and steady:
            LOG.debug("first shot %s", proposal.rect)
            return proposal, replace(state, current=proposal, age=0.0, pending=None, pending_age=0.0)
        return None, state

    age = state.age + dt
    if proposal is None or not steady or not differs(state.current, proposal, diff, frame_width):
        return None, replace(state, age=age, pending=None, pending_age=0.0)

    if state.pending is None or differs(state.pending, proposal, diff, frame_width):
        pending, pending_age = proposal, 0.0
    else:
        pending, pending_age = state.pending, state.pending_age + dt

    if age >= state.min_shot - TIME_SLACK and pending_age >= state.hold - TIME_SLACK:
        LOG.debug("cut after %.4f s to %s", age, pending.rect)
        return pending, replace(state, current=pending, age=0.0, pending=None, pending_age=0.0)
    return None, replace(state, age=age, pending=pending, pending_age=pending_age)
