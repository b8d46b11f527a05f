import numpy as np
import pytest

from crew.config import DetectionParams
from crew.detection import (
    Detection,
    DetectionPool,
    FrameContext,
    GazeScores,
    SimulatedDetector,
    activity_regions,
    detect,
    fuse_gaze,
    update_pool,
)
from crew.enums import Gaze
from crew.scene import ImageBox, project
from crew.video import ForegroundMask

from conftest import actor_section

EXACT = DetectionParams(p_miss=0.0, jitter=0.0)


@pytest.mark.parametrize("scores, expected", [
    ((0.9, 0.1, 0.1), Gaze.frontal),
    ((0.2, 0.3, 0.1), Gaze.unknown),
    ((0.6, 0.6, 0.2), Gaze.frontal),
    ((0.1, 0.7, 0.7), Gaze.left),
    ((0.1, 0.2, 0.8), Gaze.right),
])
def test_fuse_gaze(scores, expected):
    assert fuse_gaze(GazeScores(*scores, tau_g=0.5)) is expected


def blocks(*boxes, shape=(40, 40)) -> ForegroundMask:
    bits = np.zeros(shape, dtype=bool)
    for x, y, w, h in boxes:
        bits[y:y + h, x:x + w] = True
    return ForegroundMask(bits)


def test_no_activity_no_regions():
    assert activity_regions(blocks(), 1) == []


def test_single_block_region():
    (box,) = activity_regions(blocks((5, 5, 10, 10)), 1)
    assert (box.x, box.y, box.w, box.h) == (5, 5, 10, 10)


def test_diagonal_neighbours_are_separate_regions():
    regions = activity_regions(blocks((0, 0, 3, 3), (3, 3, 3, 3)), 1)
    assert len(regions) == 2


def test_small_blobs_are_ignored():
    regions = activity_regions(blocks((0, 0, 2, 2), (10, 10, 8, 8)), 64)
    assert [(b.x, b.y) for b in regions] == [(10, 10)]


def test_empty_pool():
    assert len(update_pool([], 0.25, [], 1920, 1080)) == 0


def test_previous_detection_is_inflated():
    prev = [Detection.from_box(ImageBox(100, 100, 50, 80))]
    (region,) = update_pool(prev, 0.25, [], 1920, 1080)
    assert (region.x, region.y, region.w, region.h) == pytest.approx((87.5, 80, 75, 120))


def test_inflated_region_is_clipped():
    prev = [Detection.from_box(ImageBox(0, 0, 40, 40))]
    (region,) = update_pool(prev, 0.5, [], 1920, 1080)
    assert (region.x, region.y, region.w, region.h) == pytest.approx((0, 0, 60, 60))


def test_activity_box_enters_pool_unchanged():
    activity = [ImageBox(10, 20, 30, 40)]
    (region,) = update_pool([], 0.25, activity, 1920, 1080)
    assert (region.x, region.y, region.w, region.h) == (10, 20, 30, 40)


class StubDetector:
    """Reports fixed detections whatever it is shown, and records the regions it got."""

    def __init__(self, *detections):
        self.detections = list(detections)
        self.seen = []

    def __call__(self, context, regions):
        self.seen.append(tuple(regions))
        return list(self.detections)


def test_empty_pool_detects_nothing(camera):
    detector = StubDetector(Detection.from_box(ImageBox(10, 10, 20, 20)))
    assert detect(detector, FrameContext(camera, 0.0), DetectionPool()) == []
    assert detector.seen == []


def test_detections_outside_their_region_are_dropped(camera):
    inside = Detection.from_box(ImageBox(10, 10, 20, 20))
    outside = Detection.from_box(ImageBox(300, 300, 20, 20))
    detector = StubDetector(inside, outside)
    found = detect(detector, FrameContext(camera, 0.0), DetectionPool((ImageBox(0, 0, 50, 50),)))
    assert found == [inside]


def test_overlapping_detections_keep_the_most_confident(camera):
    weak = Detection.from_box(ImageBox(10, 10, 20, 20), confidence=0.7)
    strong = Detection.from_box(ImageBox(11, 10, 20, 20), confidence=0.9)
    detector = StubDetector(weak, strong)
    pool = DetectionPool((ImageBox(0, 0, 50, 50), ImageBox(5, 5, 40, 40)))
    found = detect(detector, FrameContext(camera, 0.0), pool)
    assert found == [strong]
    assert detector.seen == [pool.regions]


def test_overlapping_regions_do_not_lower_the_miss_rate(make_scenario):
    scenario = make_scenario(actors=actor_section(path="0:4,2 10:4,2"))
    cam = scenario.camera("cam")
    detector = SimulatedDetector(scenario, cam, seed=3, params=DetectionParams(p_miss=0.5))
    body = project(scenario.floorplan, cam, scenario.actors[0], 1.0)
    pool = DetectionPool((body.clip(cam.width, cam.height), body.inflate(0.25).clip(cam.width, cam.height)))
    hits = sum(len(detect(detector, FrameContext(cam, 1.0), pool)) for _ in range(2000))
    assert hits / 2000 == pytest.approx(0.5, abs=0.05)


def test_person_walking_at_camera_is_frontal(make_scenario):
    scenario = make_scenario(actors=actor_section(path="0:6,2 5:2,2"))
    cam = scenario.camera("cam")
    detector = SimulatedDetector(scenario, cam, seed=1, params=EXACT)
    (found,) = detector(FrameContext(cam, 2.0), (ImageBox(0, 0, cam.width, cam.height),))
    assert found.gaze is Gaze.frontal
    assert found.actor_hint == "walker"


@pytest.mark.parametrize("path, gaze", [
    ("0:4,1 5:4,3", Gaze.right),
    ("0:4,3 5:4,1", Gaze.left),
])
def test_profile_gaze_follows_walking_direction(make_scenario, path, gaze):
    scenario = make_scenario(actors=actor_section(path=path))
    cam = scenario.camera("cam")
    detector = SimulatedDetector(scenario, cam, seed=1, params=EXACT)
    (found,) = detector(FrameContext(cam, 2.5), (ImageBox(0, 0, cam.width, cam.height),))
    assert found.gaze is gaze


def test_simulated_detection_is_the_upper_body(make_scenario):
    scenario = make_scenario(actors=actor_section(path="0:4,2 10:4,2"))
    cam = scenario.camera("cam")
    detector = SimulatedDetector(scenario, cam, seed=1, params=EXACT)
    (found,) = detector(FrameContext(cam, 1.0), (ImageBox(0, 0, cam.width, cam.height),))
    upper = project(scenario.floorplan, cam, scenario.actors[0], 1.0).upper_body()
    assert (found.box.x, found.box.y, found.box.w, found.box.h) == pytest.approx((upper.x, upper.y, upper.w, upper.h))
    assert 0.7 <= found.confidence <= 1.0


def test_simulated_detector_is_seeded(make_scenario):
    scenario = make_scenario(actors=actor_section(path="0:2,1 10:6,3"))
    cam = scenario.camera("cam")
    frame = (ImageBox(0, 0, cam.width, cam.height),)
    first = SimulatedDetector(scenario, cam, seed=5)
    second = SimulatedDetector(scenario, cam, seed=5)
    for k in range(50):
        context = FrameContext(cam, k * 0.2)
        assert first(context, frame) == second(context, frame)


def test_stationary_person_stays_in_the_pool(make_scenario):
    scenario = make_scenario(actors=actor_section(path="0:4,2.5 61:4,2.5"), params="duration = 61")
    cam = scenario.camera("cam")
    detector = SimulatedDetector(scenario, cam, seed=2, params=DetectionParams(p_miss=0.0))

    # one activity box when the person shows up, then background subtraction goes quiet
    first = FrameContext(cam, 0.0)
    prev = detect(detector, first, update_pool([], 0.25, [ImageBox(0, 0, cam.width, cam.height)], cam.width, cam.height))
    assert len(prev) == 1
    for k in range(1, 601):
        pool = update_pool(prev, 0.25, [], cam.width, cam.height)
        prev = detect(detector, FrameContext(cam, k * 0.1), pool)
        assert len(prev) == 1, "lost at t={:.1f}".format(k * 0.1)
