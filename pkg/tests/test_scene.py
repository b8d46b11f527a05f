import math

import pytest

from crew.errors import OutOfRange
from crew.geometry import Segment, Vec2, crosses, is_convex, subtract_gaps
from crew.scene import Actor, Floorplan, ImageBox, MIN_PROJECTION_DISTANCE, Room, actor_position, project, visible

from conftest import make_camera, square


def actor(*waypoints, **kwargs) -> Actor:
    return Actor("a", tuple((t, Vec2(x, y)) for t, (x, y) in waypoints), **kwargs)


@pytest.mark.parametrize("waypoints, t, expected", [
    (((0, (0, 0)), (10, (10, 0))), 0, (0, 0)),
    (((0, (0, 0)), (10, (10, 0))), 5, (5, 0)),
    (((0, (0, 0)), (4, (2, 2)), (8, (2, 6))), 6, (2, 4)),
])
def test_actor_position_interpolates(waypoints, t, expected):
    p = actor_position(actor(*waypoints), t)
    assert p.as_tuple() == pytest.approx(expected)


@pytest.mark.parametrize("t", [-0.1, 10.5])
def test_actor_position_outside_path(t):
    with pytest.raises(OutOfRange):
        actor_position(actor((0, (0, 0)), (10, (10, 0))), t)


def test_actor_rejects_unordered_waypoints():
    with pytest.raises(ValueError):
        actor((0, (0, 0)), (0, (1, 0)))


def test_heading_survives_standing_still():
    a = actor((0, (0, 0)), (2, (2, 0)), (10, (2, 0)))
    assert a.heading(1) == pytest.approx(0.0)
    # standing still after walking along +x keeps that heading
    assert a.heading(6) == pytest.approx(0.0)
    still = actor((0, (1, 1)), (5, (1, 1)), facing=math.pi / 2)
    assert still.heading(2) == pytest.approx(math.pi / 2)


def test_visible_in_same_room(two_rooms, camera):
    assert visible(two_rooms, camera, Vec2(4, 2.5))


def test_point_behind_camera_is_not_visible(two_rooms):
    cam = make_camera(position=(3, 2))
    assert not visible(two_rooms, cam, Vec2(1, 2))


def test_visible_through_door_only(two_rooms, camera):
    # the sightline from (0.5, 2) to (9, 2) passes the door gap at y = 2
    assert visible(two_rooms, camera, Vec2(9, 2))
    # towards y = 3.5 the sightline meets x = 6 at y = 2.97, above the door
    assert not visible(two_rooms, camera, Vec2(9, 3.5))


def test_door_must_lie_on_a_wall():
    with pytest.raises(ValueError):
        Floorplan((), (Segment(Vec2(0, 0), Vec2(4, 0)),), (Segment(Vec2(1, 1), Vec2(2, 1)),))


def test_doors_are_cut_out_of_walls():
    wall = Segment(Vec2(0, 0), Vec2(10, 0))
    pieces = subtract_gaps(wall, [Segment(Vec2(2, 0), Vec2(3, 0)), Segment(Vec2(8, 0), Vec2(7, 0))])
    assert [(p.a.x, p.b.x) for p in pieces] == [pytest.approx((0, 2)), pytest.approx((3, 7)), pytest.approx((8, 10))]


def test_parallel_sightline_is_unobstructed():
    assert not crosses(Vec2(0, 0), Vec2(5, 0), Segment(Vec2(1, 0), Vec2(3, 0)))
    assert crosses(Vec2(0, 0), Vec2(5, 0), Segment(Vec2(2, -1), Vec2(2, 1)))


def test_rooms_must_be_convex():
    assert is_convex(square(0, 0, 2, 2))
    with pytest.raises(ValueError):
        Room("l", (Vec2(0, 0), Vec2(4, 0), Vec2(4, 1), Vec2(1, 1), Vec2(1, 4), Vec2(0, 4)))


def test_projection_on_axis_is_centered():
    cam = make_camera(position=(0, 0))
    box = project(Floorplan(), cam, actor((0, (3, 0)), (1, (3, 0))), 0.5)
    assert box.center[0] == pytest.approx(cam.width / 2)


def test_projection_width_scales_with_distance():
    cam = make_camera(position=(0, 0))
    near = project(Floorplan(), cam, actor((0, (2, 0)), (1, (2, 0))), 0)
    far = project(Floorplan(), cam, actor((0, (4, 0)), (1, (4, 0))), 0)
    assert far.w == pytest.approx(near.w / 2)
    assert near.w == pytest.approx(cam.focal * 0.5 / 2)


def test_projection_follows_tangent_mapping():
    cam = make_camera(position=(0, 0), hfov_deg=90, width=640)
    assert cam.focal == pytest.approx(320)
    # bearing atan(1/2), about 26.57 degrees
    box = project(Floorplan(), cam, actor((0, (2, 1)), (1, (2, 1))), 0)
    assert box.center[0] == pytest.approx(480)


def test_projection_vertical_extent():
    cam = make_camera(position=(0, 0), height=360, mount_height=1.6)
    d = 4.0
    box = project(Floorplan(), cam, actor((0, (d, 0)), (1, (d, 0)), body_height=1.8), 0)
    assert box.y == pytest.approx(180 - cam.focal * (1.8 - 1.6) / d)
    assert box.bottom == pytest.approx(180 + cam.focal * 1.6 / d)


def test_projection_absent_when_too_close_or_gone():
    cam = make_camera(position=(0, 0))
    close = actor((0, (MIN_PROJECTION_DISTANCE / 2, 0)), (1, (MIN_PROJECTION_DISTANCE / 2, 0)))
    assert project(Floorplan(), cam, close, 0) is None
    later = actor((5, (3, 0)), (6, (3, 0)))
    assert project(Floorplan(), cam, later, 0) is None


def test_upper_body_box():
    box = ImageBox(10, 20, 30, 100)
    upper = box.upper_body()
    assert (upper.x, upper.y, upper.w) == (10, 20, 30)
    assert upper.h == pytest.approx(40)
    assert box.contains(upper)
