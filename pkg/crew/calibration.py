"""PTZ calibration against its overview camera, and mapping canvases to PTZ poses.

Calibration samples a grid of poses. The rough stage pretends the PTZ sits exactly where
its overview camera is and records the overview rectangle every pose would show. A
matcher then adds, per sample, the small pan and tilt correction that makes the real PTZ
look at the same spot at the working depth.
"""
import logging
import math

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .config import CalibrationParams
from .errors import CalibrationError
from .scene import CameraConfig, ImageBox
from .utils import fixed, undecodable_line, wrap_angle

LOG = logging.getLogger(__name__)

#: Pixels a canvas center may sit outside the outermost samples and still be interpolated.
EDGE_SLACK = 1e-6


@dataclass(frozen=True, slots=True)
class PtzPose:
    """PTZ control parameters.

    ``pan`` and ``tilt`` are degrees, pan relative to the PTZ's mounting yaw and tilt
    positive upwards. ``fallback`` marks a pose taken from the nearest calibration
    sample because the canvas lay outside the calibrated area.
    """
    pan: float
    tilt: float
    zoom: float
    fallback: bool = False

    def __post_init__(self):
        if self.zoom < 1.0 - 1e-9:
            raise ValueError("zoom must be >= 1, got {}".format(self.zoom))


#: A residual function: pose -> (dpan, dtilt) in degrees.
Matcher = Callable[[PtzPose], Tuple[float, float]]


class PtzGeometry:
    """Simulated optics of a PTZ camera and its overview camera.

    Parameters
    ----------
    overview: :class:`CameraConfig`
        The overview camera whose pixels canvases are expressed in.
    ptz: :class:`CameraConfig`
        The PTZ camera.
    depth: :class:`float`
        Working distance in meters along the PTZ ray at which parallax is corrected.
    """

    __slots__ = ("overview", "ptz", "depth")

    def __init__(self, overview: CameraConfig, ptz: CameraConfig, depth: float = 3.0):
        if depth <= 0:
            raise CalibrationError("working depth must be positive")
        self.overview = overview
        self.ptz = ptz
        self.depth = depth

    def __repr__(self):
        return "<PtzGeometry overview={0.overview.id} ptz={0.ptz.id} depth={0.depth}>".format(self)

    def _origin(self, camera: CameraConfig) -> np.ndarray:
        return np.array([camera.position.x, camera.position.y, camera.mount_height])

    def aim_point(self, pose: PtzPose, colocated: bool = True) -> np.ndarray:
        """The 3D point ``depth`` meters along the ray of ``pose``.

        With ``colocated`` the ray starts at the overview camera, as the rough stage assumes.
        """
        origin = self._origin(self.overview if colocated else self.ptz)
        bearing = self.ptz.yaw + math.radians(pose.pan)
        elevation = math.radians(pose.tilt)
        direction = np.array([math.cos(elevation) * math.cos(bearing), math.cos(elevation) * math.sin(bearing), math.sin(elevation)])
        return origin + self.depth * direction

    def project(self, point: np.ndarray) -> Tuple[float, float]:
        """Overview pixel of a 3D point, with the same tangent mapping used for actors."""
        cam = self.overview
        dx, dy = point[0] - cam.position.x, point[1] - cam.position.y
        ground = math.hypot(dx, dy)
        if ground < 1e-9:
            raise CalibrationError("aim point is straight above or below the overview camera")
        u = cam.width / 2.0 + cam.focal * math.tan(wrap_angle(math.atan2(dy, dx) - cam.yaw))
        v = cam.height / 2.0 - cam.focal * (point[2] - cam.mount_height) / ground
        return u, v

    def footprint(self, pose: PtzPose) -> ImageBox:
        """The overview rectangle shown by the PTZ at ``pose``, under the colocated assumption."""
        aim = self.aim_point(pose)
        u, v = self.project(aim)
        half = math.tan(self.ptz.hfov / 2.0) / pose.zoom
        distance = float(np.linalg.norm(aim - self._origin(self.overview)))
        width = 2.0 * self.overview.focal * half * self.depth / distance
        height = width * 9.0 / 16.0
        return ImageBox(u - width / 2.0, v - height / 2.0, width, height, self.overview.id)

    def pose_towards(self, point: np.ndarray, zoom: float) -> PtzPose:
        """The pose pointing the real PTZ at ``point``."""
        d = point - self._origin(self.ptz)
        pan = math.degrees(wrap_angle(math.atan2(d[1], d[0]) - self.ptz.yaw))
        tilt = math.degrees(math.atan2(d[2], math.hypot(d[0], d[1])))
        return PtzPose(pan, tilt, zoom)

    def check_range(self, pose: PtzPose):
        lo, hi = self.ptz.pan_range
        if not lo <= pose.pan <= hi:
            raise CalibrationError("pan {:.4f} outside the range of camera '{}'".format(pose.pan, self.ptz.id))
        lo, hi = self.ptz.tilt_range
        if not lo <= pose.tilt <= hi:
            raise CalibrationError("tilt {:.4f} outside the range of camera '{}'".format(pose.tilt, self.ptz.id))
        if not 1.0 <= pose.zoom <= self.ptz.max_zoom + 1e-9:
            raise CalibrationError("zoom {:.4f} outside the range of camera '{}'".format(pose.zoom, self.ptz.id))


def zero_residual(pose: PtzPose) -> Tuple[float, float]:
    return 0.0, 0.0


class ParallaxMatcher:
    """Fine alignment: the correction that makes the real PTZ hit the rough aim point.

    Stands in for feature matching between the PTZ and overview images.
    """

    __slots__ = ("geometry",)

    def __init__(self, geometry: PtzGeometry):
        self.geometry = geometry

    def __repr__(self):
        return "<ParallaxMatcher ptz={0.geometry.ptz.id} overview={0.geometry.overview.id}>".format(self)

    def __call__(self, pose: PtzPose) -> Tuple[float, float]:
        true = self.geometry.pose_towards(self.geometry.aim_point(pose), pose.zoom)
        return true.pan - pose.pan, true.tilt - pose.tilt


class CalibrationTable:
    """Calibration samples of one PTZ camera.

    Arrays are indexed ``[zi, gy, gx]``: zoom level, grid row (tilt, top to bottom) and
    grid column (pan, left to right).

    Attributes
    ----------
    camera_id: :class:`str`
        The PTZ camera.
    rects: :class:`numpy.ndarray`
        ``(Z, G, G, 4)`` overview rectangles ``x, y, w, h``.
    poses: :class:`numpy.ndarray`
        ``(Z, G, G, 3)`` poses ``pan, tilt, zoom``.
    residuals: :class:`numpy.ndarray`
        ``(Z, G, G, 2)`` corrections ``dpan, dtilt``.
    """

    __slots__ = ("camera_id", "rects", "poses", "residuals")

    def __init__(self, camera_id: str, rects: np.ndarray, poses: np.ndarray, residuals: np.ndarray):
        if rects.ndim != 4 or rects.shape[1] != rects.shape[2] or rects.shape[1] < 2 or rects.shape[0] < 2:
            raise CalibrationError("calibration arrays must be Z x G x G with G, Z >= 2")
        if poses.shape[:3] != rects.shape[:3] or residuals.shape[:3] != rects.shape[:3]:
            raise CalibrationError("calibration arrays disagree on their shape")
        self.camera_id = camera_id
        self.rects = rects
        self.poses = poses
        self.residuals = residuals

        for zi in range(self.zooms):
            cols, rows = self._axes(zi)
            if np.any(np.diff(cols) <= 0) or np.any(np.diff(rows) <= 0):
                raise CalibrationError("calibration samples of camera '{}' are not ordered".format(camera_id))
        if np.any(np.diff(self.inverse_widths) <= 0):
            raise CalibrationError("calibration zoom levels of camera '{}' are not ordered".format(camera_id))

    def __repr__(self):
        return "<CalibrationTable camera={} grid={} zooms={}>".format(self.camera_id, self.grid, self.zooms)

    def __eq__(self, other):
        return (isinstance(other, CalibrationTable) and self.camera_id == other.camera_id
                and np.array_equal(self.rects, other.rects) and np.array_equal(self.poses, other.poses)
                and np.array_equal(self.residuals, other.residuals))

    @property
    def grid(self) -> int:
        return self.rects.shape[1]

    @property
    def zooms(self) -> int:
        return self.rects.shape[0]

    @property
    def centers(self) -> np.ndarray:
        return self.rects[..., :2] + self.rects[..., 2:] / 2.0

    def _axes(self, zi: int) -> Tuple[np.ndarray, np.ndarray]:
        """Column ``u`` and row ``v`` coordinates of zoom level ``zi``, averaged across the grid."""
        centers = self.centers[zi]
        return centers[:, :, 0].mean(axis=0), centers[:, :, 1].mean(axis=1)

    @property
    def inverse_widths(self) -> np.ndarray:
        """Mean ``1 / width`` per zoom level; grows with zoom."""
        return (1.0 / self.rects[..., 2]).mean(axis=(1, 2))


def calibrate(geometry: PtzGeometry, grid: int = 5, zooms: int = 3, matcher: Optional[Matcher] = None) -> CalibrationTable:
    """Samples ``grid`` x ``grid`` poses across the overview field of view at ``zooms`` zoom levels.

    Raises
    ------
    :exc:`CalibrationError`
        ``grid`` or ``zooms`` is below 2, or a sample pose is outside the PTZ's mechanical range.
    """
    if grid < 2 or zooms < 2:
        raise CalibrationError("calibration needs grid >= 2 and zooms >= 2, got {} and {}".format(grid, zooms))
    matcher = matcher or zero_residual
    overview, ptz = geometry.overview, geometry.ptz

    # pan offsets relative to the PTZ yaw that sweep the overview field of view
    pans = np.degrees(wrap_angle(overview.yaw - ptz.yaw + np.linspace(-overview.hfov / 2.0, overview.hfov / 2.0, grid)))
    tilts = np.degrees(np.linspace(overview.vfov / 2.0, -overview.vfov / 2.0, grid))
    levels = np.linspace(1.0, ptz.max_zoom, zooms)

    rects = np.empty((zooms, grid, grid, 4))
    poses = np.empty((zooms, grid, grid, 3))
    residuals = np.empty((zooms, grid, grid, 2))
    for zi, zoom in enumerate(levels):
        for gy, tilt in enumerate(tilts):
            for gx, pan in enumerate(pans):
                pose = PtzPose(float(pan), float(tilt), float(zoom))
                geometry.check_range(pose)
                rect = geometry.footprint(pose)
                rects[zi, gy, gx] = rect.x, rect.y, rect.w, rect.h
                poses[zi, gy, gx] = pose.pan, pose.tilt, pose.zoom
                residuals[zi, gy, gx] = matcher(pose)

    LOG.debug("calibrated %s: %d samples, max residual %.4f deg", ptz.id, rects[..., 0].size, float(np.abs(residuals).max()))
    return CalibrationTable(ptz.id, rects, poses, residuals)


def _bracket(axis: np.ndarray, value: float) -> Tuple[int, float]:
    i = int(np.clip(np.searchsorted(axis, value, side="right") - 1, 0, len(axis) - 2))
    return i, (value - axis[i]) / (axis[i + 1] - axis[i])


def _bilinear(values: np.ndarray, i: int, fi: float, j: int, fj: float) -> np.ndarray:
    """Interpolates ``values[row, col, ...]`` at row ``i + fi`` and column ``j + fj``."""
    top = values[i, j] * (1.0 - fj) + values[i, j + 1] * fj
    bottom = values[i + 1, j] * (1.0 - fj) + values[i + 1, j + 1] * fj
    return top * (1.0 - fi) + bottom * fi


def canvas_to_ptz(table: CalibrationTable, canvas) -> PtzPose:
    """The PTZ pose showing ``canvas`` (a :class:`Canvas` or :class:`ImageBox`).

    Pan and tilt are interpolated bilinearly around the canvas center at every zoom level,
    then linearly across zoom levels in ``1 / width``. A center outside the calibrated area
    falls back to the nearest sample and the pose is marked with ``fallback``.
    """
    rect = getattr(canvas, "rect", canvas)
    u, v = rect.center
    inverse_width = 1.0 / rect.w

    per_level = []
    for zi in range(table.zooms):
        cols, rows = table._axes(zi)
        if not (cols[0] - EDGE_SLACK <= u <= cols[-1] + EDGE_SLACK and rows[0] - EDGE_SLACK <= v <= rows[-1] + EDGE_SLACK):
            return _nearest(table, u, v, inverse_width)
        j, fj = _bracket(cols, u)
        i, fi = _bracket(rows, v)
        pose = _bilinear(table.poses[zi], i, fi, j, fj)
        residual = _bilinear(table.residuals[zi], i, fi, j, fj)
        width = _bilinear(table.rects[zi, ..., 2], i, fi, j, fj)
        per_level.append((1.0 / width, pose, residual))

    levels = np.array([q for q, _, _ in per_level])
    if inverse_width <= levels[0]:
        k, fk = 0, 0.0
    elif inverse_width >= levels[-1]:
        k, fk = len(levels) - 2, 1.0
    else:
        k, fk = _bracket(levels, inverse_width)
    pose = per_level[k][1] * (1.0 - fk) + per_level[k + 1][1] * fk
    residual = per_level[k][2] * (1.0 - fk) + per_level[k + 1][2] * fk
    return PtzPose(float(pose[0] + residual[0]), float(pose[1] + residual[1]), float(pose[2]))


def _nearest(table: CalibrationTable, u: float, v: float, inverse_width: float) -> PtzPose:
    zi = int(np.argmin(np.abs(table.inverse_widths - inverse_width)))
    centers = table.centers[zi]
    distance = (centers[..., 0] - u) ** 2 + (centers[..., 1] - v) ** 2
    gy, gx = np.unravel_index(int(np.argmin(distance)), distance.shape)
    pan, tilt, zoom = table.poses[zi, gy, gx]
    dpan, dtilt = table.residuals[zi, gy, gx]
    LOG.warning("canvas center (%.1f, %.1f) outside calibration of %s, using sample (%d, %d, %d)", u, v, table.camera_id, gx, gy, zi)
    return PtzPose(float(pan + dpan), float(tilt + dtilt), float(zoom), fallback=True)


def calibrate_camera(overview: CameraConfig, ptz: CameraConfig, params: CalibrationParams = CalibrationParams()) -> CalibrationTable:
    """Rough and fine calibration of ``ptz`` with the default matcher."""
    geometry = PtzGeometry(overview, ptz, params.depth)
    return calibrate(geometry, params.grid, params.zooms, ParallaxMatcher(geometry))


def write_tables(tables: List[CalibrationTable], path):
    """Writes calibration tables as text, one sample per line under a header per camera."""
    lines = []
    for table in tables:
        lines.append("# camera {} grid {} zooms {}".format(table.camera_id, table.grid, table.zooms))
        lines.append("# gx gy zi x y w h pan tilt zoom dpan dtilt")
        for zi in range(table.zooms):
            for gy in range(table.grid):
                for gx in range(table.grid):
                    values = list(table.rects[zi, gy, gx]) + list(table.poses[zi, gy, gx]) + list(table.residuals[zi, gy, gx])
                    lines.append(" ".join([str(gx), str(gy), str(zi)] + [fixed(float(x)) for x in values]))
    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise CalibrationError("cannot write {}: {}".format(path, exc)) from exc


def read_tables(path) -> Dict[str, CalibrationTable]:
    """Reads tables written by :func:`write_tables`, keyed by camera id.

    Raises
    ------
    :exc:`CalibrationError`
        The file cannot be read or is malformed.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CalibrationError("cannot read {}: {}".format(path, exc)) from exc
    except UnicodeDecodeError as exc:
        raise CalibrationError("{}: calibration file is not valid UTF-8 on line {}".format(path, undecodable_line(exc))) from None

    tables = {}
    current = None
    for number, raw in enumerate(text.splitlines(), start=1):
        parts = raw.split()
        if not parts:
            continue
        if parts[0] == "#":
            if len(parts) == 7 and parts[1] == "camera" and parts[3] == "grid" and parts[5] == "zooms":
                grid, zooms = int(parts[4]), int(parts[6])
                current = (parts[2], np.full((zooms, grid, grid, 4), np.nan), np.full((zooms, grid, grid, 3), np.nan),
                           np.full((zooms, grid, grid, 2), np.nan))
                tables[parts[2]] = current
            continue
        if current is None or len(parts) != 12:
            raise CalibrationError("{}: malformed calibration sample on line {}".format(path, number))
        try:
            gx, gy, zi = (int(p) for p in parts[:3])
            values = [float(p) for p in parts[3:]]
            current[1][zi, gy, gx] = values[:4]
            current[2][zi, gy, gx] = values[4:7]
            current[3][zi, gy, gx] = values[7:]
        except (ValueError, IndexError):
            raise CalibrationError("{}: malformed calibration sample on line {}".format(path, number)) from None

    result = {}
    for camera_id, (_, rects, poses, residuals) in tables.items():
        if np.isnan(rects).any() or np.isnan(poses).any() or np.isnan(residuals).any():
            raise CalibrationError("{}: calibration of camera '{}' is incomplete".format(path, camera_id))
        result[camera_id] = CalibrationTable(camera_id, rects, poses, residuals)
    return result
