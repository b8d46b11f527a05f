"""People detection gated by a pool of image regions.

Only regions that showed activity, or held a person the frame before, are handed to a
detector. Previous detections are kept in the pool with a margin so people who stop
moving, and thus vanish from background subtraction, keep being detected.
"""
import logging
import math

from dataclasses import dataclass
from typing import TYPE_CHECKING, List, Optional, Protocol, Sequence, Tuple

import numpy as np
from scipy import ndimage

from .config import DetectionParams
from .enums import Gaze
from .geometry import Vec2
from .scene import CameraConfig, ImageBox, actor_position, visible_actors
from .utils import stable_seed, wrap_angle
from .video import ForegroundMask, Frame

if TYPE_CHECKING:
    from .scenario import Scenario

LOG = logging.getLogger(__name__)

#: Eye position as a fraction of the upper-body box height, from its top.
EYE_OFFSET = 0.2


@dataclass(frozen=True, slots=True)
class Detection:
    """A detected person.

    Attributes
    ----------
    box: :class:`ImageBox`
        The upper-body box, in native camera pixels.
    eye_point: Tuple[:class:`float`, :class:`float`]
        Estimated eye position, always inside ``box``.
    gaze: :class:`Gaze`
        General gaze direction in image terms.
    confidence: :class:`float`
        Detector confidence in ``[0, 1]``.
    actor_hint: Optional[:class:`str`]
        The actor behind this detection. Only the simulated detector knows it.
    """
    box: ImageBox
    eye_point: Tuple[float, float]
    gaze: Gaze = Gaze.unknown
    confidence: float = 1.0
    actor_hint: Optional[str] = None

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must lie in [0, 1]")
        ex, ey = self.eye_point
        if not (self.box.x <= ex <= self.box.right and self.box.y <= ey <= self.box.bottom):
            raise ValueError("eye point {} is outside the detection box".format(self.eye_point))

    @classmethod
    def from_box(cls, box: ImageBox, **kwargs) -> "Detection":
        return cls(box, (box.x + box.w / 2.0, box.y + EYE_OFFSET * box.h), **kwargs)


@dataclass(frozen=True, slots=True)
class DetectionPool:
    """Regions the detector is evaluated on, clipped to the frame. May be empty."""
    regions: Tuple[ImageBox, ...] = ()

    def __len__(self):
        return len(self.regions)

    def __iter__(self):
        return iter(self.regions)


@dataclass(frozen=True, slots=True)
class GazeScores:
    """Scores of the frontal and the two profile face models."""
    frontal: float
    left_profile: float
    right_profile: float
    tau_g: float = 0.5

    def __post_init__(self):
        for name in ("frontal", "left_profile", "right_profile"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError("{} score must lie in [0, 1]".format(name))
        if not 0.0 < self.tau_g < 1.0:
            raise ValueError("tau_g must lie in (0, 1)")


@dataclass(frozen=True, slots=True)
class FrameContext:
    """What a detector gets to look at besides the regions."""
    camera: CameraConfig
    t: float
    frame: Optional[Frame] = None


class DetectorContract(Protocol):
    """Anything that finds people inside the given regions of a frame."""

    def __call__(self, context: FrameContext, regions: Sequence[ImageBox]) -> List[Detection]:
        ...


def fuse_gaze(scores: GazeScores) -> Gaze:
    """Combines the three face model scores into one gaze label.

    Ties go to frontal, then left, then right.
    """
    ranked = ((scores.frontal, Gaze.frontal), (scores.left_profile, Gaze.left), (scores.right_profile, Gaze.right))
    best_score, best = ranked[0]
    for score, gaze in ranked[1:]:
        if score > best_score:
            best_score, best = score, gaze
    if best_score < scores.tau_g:
        return Gaze.unknown
    return best


def activity_regions(mask: ForegroundMask, min_area: int) -> List[ImageBox]:
    """Bounding boxes of the 4-connected foreground blobs holding at least ``min_area`` pixels."""
    labels, count = ndimage.label(mask.bits)
    if count == 0:
        return []
    areas = np.bincount(labels.ravel())
    boxes = []
    for index, found in enumerate(ndimage.find_objects(labels), start=1):
        if found is None or areas[index] < min_area:
            continue
        rows, cols = found
        boxes.append(ImageBox(cols.start, rows.start, cols.stop - cols.start, rows.stop - rows.start))
    return boxes


def update_pool(prev: Sequence[Detection], margin_frac: float, activity: Sequence[ImageBox], width: float, height: float) -> DetectionPool:
    """The next pool: activity boxes plus every previous detection grown by ``margin_frac`` per side."""
    if margin_frac < 0:
        raise ValueError("margin_frac must be >= 0")
    regions = []
    for box in activity:
        clipped = box.clip(width, height)
        if clipped is not None:
            regions.append(clipped)
    for detection in prev:
        clipped = detection.box.inflate(margin_frac).clip(width, height)
        if clipped is not None:
            regions.append(clipped)
    return DetectionPool(tuple(regions))


def suppress_duplicates(detections: Sequence[Detection], iou_threshold: float) -> List[Detection]:
    """Greedy non-maximum suppression: of two boxes overlapping more than ``iou_threshold`` the more confident stays."""
    ordered = sorted(detections, key=lambda d: (-d.confidence, d.box.x, d.box.y))
    kept: List[Detection] = []
    for detection in ordered:
        if all(detection.box.iou(other.box) <= iou_threshold for other in kept):
            kept.append(detection)
    return kept


def detect(detector: DetectorContract, context: FrameContext, pool: DetectionPool, dedupe_iou: float = 0.6) -> List[Detection]:
    """Runs ``detector`` once over every pool region and returns the deduplicated detections.

    Detections that overlap none of the regions are dropped.
    """
    if not len(pool):
        return []
    found = []
    for detection in detector(context, pool.regions):
        if any(detection.box.intersection(region) > 0 for region in pool):
            found.append(detection)
        else:
            LOG.debug("camera %s: dropped detection %s outside the pool", context.camera.id, detection.box)
    return suppress_duplicates(found, dedupe_iou)


class SimulatedDetector:
    """Finds the actors of a scenario from ground truth, with jitter and misses.

    Each camera gets its own instance; its random stream is seeded from the run seed and
    the camera id and must be advanced in time order.

    Parameters
    ----------
    scenario: :class:`Scenario`
        The world to detect people in.
    camera: :class:`CameraConfig`
        The camera this detector looks through.
    seed: :class:`int`
        The run seed.
    params: :class:`DetectionParams`
        Jitter, miss probability, gaze threshold and frontal cone.
    """

    __slots__ = ("scenario", "camera", "params", "_rng", "calls")

    def __init__(self, scenario: "Scenario", camera: CameraConfig, seed: int, params: DetectionParams = DetectionParams()):
        self.scenario = scenario
        self.camera = camera
        self.params = params
        self._rng = np.random.default_rng(stable_seed("detector", seed, camera.id))
        self.calls = 0

    def __repr__(self):
        return "<SimulatedDetector camera={0.camera.id} calls={0.calls}>".format(self)

    def __call__(self, context: FrameContext, regions: Sequence[ImageBox]) -> List[Detection]:
        self.calls += 1
        detections = []
        for actor, body in visible_actors(self.scenario.floorplan, self.camera, self.scenario.actors, context.t):
            upper = body.upper_body()
            if not any(upper.intersection(region) > 0 for region in regions):
                continue
            # always four draws per candidate so misses do not shift later draws
            miss, radius, angle, conf = self._rng.random(4)
            if miss < self.params.p_miss:
                continue
            r = self.params.jitter * math.sqrt(radius)
            shifted = ImageBox(upper.x + r * math.cos(2 * math.pi * angle), upper.y + r * math.sin(2 * math.pi * angle),
                               upper.w, upper.h, self.camera.id)
            box = shifted.clip(self.camera.width, self.camera.height)
            if box is None:
                continue
            gaze = fuse_gaze(self.gaze_scores(actor, context.t))
            detections.append(Detection.from_box(box, gaze=gaze, confidence=0.7 + 0.3 * float(conf), actor_hint=actor.id))
        return detections

    def geometric_gaze(self, actor, t: float) -> Gaze:
        """Gaze from the actor's heading: frontal when facing the camera, else the side it walks towards."""
        heading = actor.heading(t)
        if heading is None:
            return Gaze.unknown
        p = actor_position(actor, t)
        to_camera = (self.camera.position - p).bearing()
        if abs(wrap_angle(heading - to_camera)) <= math.radians(self.params.frontal_cone_deg):
            return Gaze.frontal
        side = (p - self.camera.position).cross(Vec2(math.cos(heading), math.sin(heading)))
        if side > 0:
            return Gaze.right
        if side < 0:
            return Gaze.left
        return Gaze.unknown

    def gaze_scores(self, actor, t: float) -> GazeScores:
        gaze = self.geometric_gaze(actor, t)
        scores = {g: (0.9 if g is gaze else 0.1) for g in (Gaze.frontal, Gaze.left, Gaze.right)}
        return GazeScores(scores[Gaze.frontal], scores[Gaze.left], scores[Gaze.right], self.params.tau_g)
