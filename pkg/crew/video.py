"""Synthetic camera streams and background subtraction.

Frames are rendered at each camera's processing-stream resolution. Actor boxes are
rasterized by pixel centers: pixel ``(i, j)`` is covered when ``(i + 0.5, j + 0.5)``
lies inside the box.
"""
import math

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import TYPE_CHECKING, Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatch, InvalidArgument, ReportError
from .scene import CameraConfig, ImageBox, visible_actors
from .utils import stable_seed

if TYPE_CHECKING:
    from .scenario import Scenario

BACKGROUND_LEVEL = 64
BACKGROUND_SPREAD = 5


@dataclass(frozen=True, slots=True)
class Frame:
    """An 8-bit grayscale image, ``pixels`` has shape ``(height, width)``."""
    pixels: np.ndarray

    def __post_init__(self):
        if self.pixels.ndim != 2 or self.pixels.dtype != np.uint8:
            raise ValueError("Frame pixels must be a 2-D uint8 array")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True, slots=True)
class ForegroundMask:
    bits: np.ndarray

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.bits))


class BackgroundModel:
    """Per-pixel running average of one camera stream.

    The first ``warmup`` frames update every pixel; afterwards only pixels classified as
    background are blended in, so anything standing out from the background stays foreground.

    Attributes
    ----------
    mean: Optional[:class:`numpy.ndarray`]
        The background estimate. When ``None`` it is taken from the first frame seen.
    alpha: :class:`float`
        Learning rate in ``[0, 1]``.
    tau: :class:`float`
        Foreground threshold in gray levels.
    warmup: :class:`int`
        Number of leading frames learned non-selectively.
    frames_seen: :class:`int`
        Frames processed so far.
    """

    __slots__ = ("mean", "alpha", "tau", "warmup", "frames_seen")

    def __init__(self, alpha: float = 0.02, tau: float = 20.0, warmup: int = 50, mean: Optional[np.ndarray] = None):
        if not 0.0 <= alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if tau <= 0:
            raise ValueError("tau must be positive")
        self.alpha = alpha
        self.tau = tau
        self.warmup = warmup
        self.mean = None if mean is None else np.asarray(mean, dtype=np.float64).copy()
        self.frames_seen = 0

    def __repr__(self):
        shape = None if self.mean is None else self.mean.shape
        return "<BackgroundModel shape={} alpha={} tau={} frames_seen={}>".format(shape, self.alpha, self.tau, self.frames_seen)

    @property
    def warming_up(self) -> bool:
        return self.frames_seen < self.warmup

    def prime(self, frame: Frame):
        """Learns ``frame`` through the whole warm-up, as if the scene had been empty that long."""
        while self.warming_up:
            bgs_step(self, frame)


def bgs_step(model: BackgroundModel, frame: Frame) -> ForegroundMask:
    """Classifies ``frame`` against ``model`` and then updates the model.

    Raises
    ------
    :exc:`DimensionMismatch`
        The frame does not have the model's dimensions.
    """
    pixels = frame.pixels.astype(np.float64)
    if model.mean is None:
        model.mean = pixels.copy()
    elif model.mean.shape != pixels.shape:
        raise DimensionMismatch("frame is {}x{} but the background model is {}x{}".format(
            frame.width, frame.height, model.mean.shape[1], model.mean.shape[0]))

    foreground = np.abs(pixels - model.mean) > model.tau
    if model.alpha > 0.0:
        blended = (1.0 - model.alpha) * model.mean + model.alpha * pixels
        if model.warming_up:
            model.mean = blended
        else:
            model.mean = np.where(foreground, model.mean, blended)
    model.frames_seen += 1
    return ForegroundMask(foreground)


@lru_cache(maxsize=64)
def background_pattern(camera_id: str, width: int, height: int) -> np.ndarray:
    """The fixed, read-only background of a camera stream: a flat gray with per-pixel offsets."""
    rng = np.random.default_rng(stable_seed("background", camera_id))
    offsets = rng.integers(-BACKGROUND_SPREAD, BACKGROUND_SPREAD + 1, size=(height, width))
    pattern = (BACKGROUND_LEVEL + offsets).astype(np.uint8)
    pattern.setflags(write=False)
    return pattern


def actor_intensity(index: int) -> int:
    """Gray level of the ``index``-th actor, always at least 100 levels above the background."""
    return 255 - 12 * (index % 8)


def raster_span(start: float, length: float, limit: int) -> Tuple[int, int]:
    """Pixel index range ``[lo, hi)`` whose centers fall in ``[start, start + length)``."""
    lo = min(max(math.ceil(start - 0.5), 0), limit)
    hi = min(max(math.ceil(start + length - 0.5), 0), limit)
    return lo, hi


def fill_box(pixels: np.ndarray, box: ImageBox, value) -> int:
    """Fills ``box`` into ``pixels`` in place and returns the number of pixels covered."""
    x0, x1 = raster_span(box.x, box.w, pixels.shape[1])
    y0, y1 = raster_span(box.y, box.h, pixels.shape[0])
    pixels[y0:y1, x0:x1] = value
    return max(x1 - x0, 0) * max(y1 - y0, 0)


def render(camera: CameraConfig, scenario: "Scenario", t: float) -> Frame:
    """Synthesizes the processing-stream frame of ``camera`` at time ``t``."""
    width, height = camera.stream_size
    pixels = background_pattern(camera.id, width, height).copy()
    ranks = scenario.actor_ranks
    for actor, box in visible_actors(scenario.floorplan, camera, scenario.actors, t):
        fill_box(pixels, box.scaled(1.0 / camera.stream_scale), actor_intensity(ranks[actor.id]))
    return Frame(pixels)


@lru_cache(maxsize=256)
def _polygon_mask(polygon: Tuple[Tuple[float, float], ...], width: int, height: int) -> np.ndarray:
    xs = np.arange(width, dtype=np.float64) + 0.5
    ys = np.arange(height, dtype=np.float64)[:, None] + 0.5
    inside = np.zeros((height, width), dtype=bool)
    n = len(polygon)
    for k in range(n):
        (x1, y1), (x2, y2) = polygon[k], polygon[(k + 1) % n]
        if y1 == y2:
            continue
        straddles = (y1 > ys) != (y2 > ys)
        x_cross = x1 + (ys - y1) * (x2 - x1) / (y2 - y1)
        inside ^= straddles & (xs < x_cross)
    inside.setflags(write=False)
    return inside


def polygon_mask(polygon: Sequence[Tuple[float, float]], width: int, height: int) -> np.ndarray:
    """Boolean image of the pixels whose centers lie inside ``polygon`` (even-odd rule)."""
    if len(polygon) < 3:
        raise InvalidArgument("a zone polygon needs at least 3 vertices")
    return _polygon_mask(tuple((float(x), float(y)) for x, y in polygon), width, height)


def zone_activity(mask: ForegroundMask, zone_polygon: Sequence[Tuple[float, float]]) -> float:
    """Share of the zone's pixels that are foreground.

    Raises
    ------
    :exc:`InvalidArgument`
        The polygon has fewer than 3 vertices or encloses no pixel center.
    """
    inside = polygon_mask(zone_polygon, mask.width, mask.height)
    total = int(np.count_nonzero(inside))
    if total == 0:
        raise InvalidArgument("zone polygon encloses no pixel of a {}x{} stream".format(mask.width, mask.height))
    return int(np.count_nonzero(mask.bits & inside)) / total


def write_pgm(path, pixels: np.ndarray):
    """Writes a binary (P5) PGM. Boolean images are written as 0/255."""
    if pixels.dtype == bool:
        pixels = pixels.astype(np.uint8) * 255
    header = "P5\n{} {}\n255\n".format(pixels.shape[1], pixels.shape[0]).encode("ascii")
    try:
        Path(path).write_bytes(header + np.ascontiguousarray(pixels, dtype=np.uint8).tobytes())
    except OSError as exc:
        raise ReportError(path, "cannot write frame dump: {}".format(exc)) from exc


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    magic, dims, maxval, body = data.split(b"\n", 3)
    if magic != b"P5" or maxval != b"255":
        raise ReportError(path, "not an 8-bit binary PGM")
    width, height = map(int, dims.split())
    return np.frombuffer(body, dtype=np.uint8).reshape(height, width)
