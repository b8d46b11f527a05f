import itertools

import numpy as np
import pytest

from crew.calibration import (
    CalibrationTable,
    ParallaxMatcher,
    PtzGeometry,
    PtzPose,
    calibrate,
    calibrate_camera,
    canvas_to_ptz,
    read_tables,
    write_tables,
)
from crew.cinematographer import Canvas
from crew.enums import CameraKind
from crew.errors import CalibrationError
from crew.scene import ImageBox

from conftest import make_camera


def colocated(hfov_deg=60.0, ptz_offset=(0.0, 0.0), **ptz_kwargs):
    overview = make_camera("ov", position=(2.0, 0.2), yaw_deg=90, hfov_deg=hfov_deg, width=1920, height=1080,
                           kind=CameraKind.overview)
    ptz = make_camera("ptz", position=(2.0 + ptz_offset[0], 0.2 + ptz_offset[1]), yaw_deg=90, hfov_deg=hfov_deg,
                      width=1920, height=1080, kind=CameraKind.ptz, paired_overview="ov", **ptz_kwargs)
    return PtzGeometry(overview, ptz)


def test_identical_view_covers_the_overview_frame():
    rect = colocated().footprint(PtzPose(0.0, 0.0, 1.0))
    assert (rect.x, rect.y, rect.w, rect.h) == pytest.approx((0, 0, 1920, 1080), abs=1e-6)


def test_zoom_shrinks_the_footprint():
    geometry = colocated()
    wide = geometry.footprint(PtzPose(10.0, -5.0, 1.0))
    tight = geometry.footprint(PtzPose(10.0, -5.0, 2.0))
    assert tight.w == pytest.approx(wide.w / 2)
    assert tight.h == pytest.approx(wide.h / 2)
    assert tight.center == pytest.approx(wide.center)


def test_zero_residual_matcher_gives_the_rough_table():
    geometry = colocated()
    table = calibrate(geometry, 3, 2)
    assert np.array_equal(table.residuals, np.zeros_like(table.residuals))
    # colocated cameras need no parallax correction
    matched = calibrate(geometry, 3, 2, ParallaxMatcher(geometry))
    assert np.abs(matched.residuals).max() == pytest.approx(0.0, abs=1e-9)
    assert np.array_equal(matched.rects, table.rects)


def test_grid_must_have_two_samples():
    with pytest.raises(CalibrationError):
        calibrate(colocated(), 1, 3)


def test_pose_outside_mechanical_range():
    with pytest.raises(CalibrationError):
        calibrate(colocated(pan_range=(-10.0, 10.0)), 5, 3)


def two_by_two() -> CalibrationTable:
    rects = np.empty((2, 2, 2, 4))
    poses = np.empty((2, 2, 2, 3))
    for zi, width in enumerate((100.0, 50.0)):
        for gy, (cy, tilt) in enumerate(((0.0, 5.0), (100.0, -5.0))):
            for gx, (cx, pan) in enumerate(((0.0, 10.0), (100.0, 20.0))):
                rects[zi, gy, gx] = cx - width / 2, cy - width * 9 / 32, width, width * 9 / 16
                poses[zi, gy, gx] = pan, tilt, 1.0 + zi
    return CalibrationTable("ptz", rects, poses, np.zeros((2, 2, 2, 2)))


def box(cx, cy, width) -> ImageBox:
    return ImageBox(cx - width / 2, cy - width * 9 / 32, width, width * 9 / 16)


def test_canvas_on_a_sample_gets_its_pose():
    pose = canvas_to_ptz(two_by_two(), box(100, 0, 50))
    assert (pose.pan, pose.tilt, pose.zoom) == pytest.approx((20.0, 5.0, 2.0))
    assert not pose.fallback


def test_canvas_between_samples_is_interpolated():
    pose = canvas_to_ptz(two_by_two(), Canvas(box(50, 50, 100)))
    assert (pose.pan, pose.tilt, pose.zoom) == pytest.approx((15.0, 0.0, 1.0))
    # halfway in 1 / width between the two zoom levels
    pose = canvas_to_ptz(two_by_two(), box(50, 50, 1 / ((1 / 100 + 1 / 50) / 2)))
    assert pose.zoom == pytest.approx(1.5)


def test_canvas_outside_the_grid_falls_back_to_nearest_sample():
    pose = canvas_to_ptz(two_by_two(), box(130, -20, 50))
    assert pose.fallback
    assert (pose.pan, pose.tilt, pose.zoom) == pytest.approx((20.0, 5.0, 2.0))


def test_unordered_table_is_rejected():
    table = two_by_two()
    with pytest.raises(CalibrationError):
        CalibrationTable("ptz", table.rects[:, :, ::-1], table.poses, table.residuals)


def test_round_trip_on_grid_and_between():
    geometry = colocated()
    table = calibrate(geometry, 5, 3)
    pans = table.poses[0, 0, :, 0]
    tilts = table.poses[0, :, 0, 1]
    zooms = table.poses[:, 0, 0, 2]

    def midpoints(values):
        return (values[:-1] + values[1:]) / 2

    poses = itertools.product(np.concatenate([pans, midpoints(pans)]),
                              np.concatenate([tilts, midpoints(tilts)]),
                              np.concatenate([zooms, midpoints(zooms)]))
    for pan, tilt, zoom in poses:
        expected = PtzPose(float(pan), float(tilt), float(zoom))
        pose = canvas_to_ptz(table, geometry.footprint(expected))
        assert abs(pose.pan - expected.pan) <= 0.5
        assert abs(pose.tilt - expected.tilt) <= 0.5
        assert abs(pose.zoom - expected.zoom) <= 0.05 * expected.zoom
        assert not pose.fallback


def test_parallax_is_corrected_at_working_depth():
    geometry = colocated(ptz_offset=(0.15, 0.0))
    table = calibrate(geometry, 5, 3, ParallaxMatcher(geometry))
    assert np.abs(table.residuals).max() > 0.5

    rough = PtzPose(0.0, 0.0, 1.0)
    pose = canvas_to_ptz(table, geometry.footprint(rough))
    aimed = geometry.pose_towards(geometry.aim_point(rough), 1.0)
    assert (pose.pan, pose.tilt) == pytest.approx((aimed.pan, aimed.tilt), abs=1e-6)
    # the real PTZ sits to the side, so it has to turn towards the overview's line of sight
    assert pose.pan != pytest.approx(0.0)


def test_tables_survive_a_file(tmp_path):
    geometry = colocated(ptz_offset=(0.15, 0.0))
    table = calibrate_camera(geometry.overview, geometry.ptz)
    path = tmp_path / "ptz.cal"
    write_tables([table], path)
    assert path.read_text().startswith("# camera ptz grid 5 zooms 3\n")
    loaded = read_tables(path)["ptz"]
    assert loaded.grid == 5 and loaded.zooms == 3
    np.testing.assert_allclose(loaded.rects, table.rects, atol=1e-4)
    np.testing.assert_allclose(loaded.poses, table.poses, atol=1e-4)
    np.testing.assert_allclose(loaded.residuals, table.residuals, atol=1e-4)


def test_malformed_table_file(tmp_path):
    path = tmp_path / "bad.cal"
    path.write_text("# camera ptz grid 2 zooms 2\n0 0 0 1 2 3\n")
    with pytest.raises(CalibrationError):
        read_tables(path)


def test_table_file_that_is_not_utf8(tmp_path):
    path = tmp_path / "bad.cal"
    path.write_bytes(b"# camera ptz grid 2 zooms 2\n0 0 0 \xff\n")
    with pytest.raises(CalibrationError, match="line 2"):
        read_tables(path)
