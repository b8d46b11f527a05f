import numpy as np
import pytest

from crew.cinematographer import (
    Canvas,
    ComposeParams,
    DiffParams,
    ShotState,
    differs,
    is_steady,
    propose_canvas,
    shot_fsm_tick,
)
from crew.detection import Detection
from crew.enums import Gaze
from crew.errors import InvalidArgument
from crew.scene import ImageBox

W, H = 1920, 1080
TICK = 0.1
GAZES = (Gaze.frontal, Gaze.left, Gaze.right, Gaze.unknown)


def person(x, y, w, h, gaze=Gaze.frontal, hint=None) -> Detection:
    return Detection.from_box(ImageBox(x, y, w, h), gaze=gaze, actor_hint=hint)


def canvas(cx, cy, w) -> Canvas:
    h = w * 9 / 16
    return Canvas(ImageBox(cx - w / 2, cy - h / 2, w, h))


def strictly_inside(rect: ImageBox, box: ImageBox) -> bool:
    return rect.x < box.x and rect.y < box.y and box.right < rect.right and box.bottom < rect.bottom


def test_single_frontal_person_gets_a_centered_medium_shot():
    subject = person(900, 300, 120, 300)
    shot = propose_canvas([subject], W, H)
    rect = shot.rect
    assert (rect.w, rect.h) == pytest.approx((1066.667, 600), abs=1e-3)
    assert rect.center[0] == pytest.approx(960)
    assert subject.eye_point[1] == pytest.approx(rect.y + 200)
    assert not shot.clamped and not shot.expanded


def test_group_shot_adds_fifteen_percent():
    group = [person(500, 400, 100, 150), person(1200, 400, 100, 150)]
    shot = propose_canvas(group, W, H)
    assert (shot.rect.w, shot.rect.h) == pytest.approx((920, 517.5))
    assert shot.rect.center[0] == pytest.approx(900)
    assert not shot.clamped and not shot.expanded


def test_lead_room_is_mirrored():
    right = propose_canvas([person(900, 300, 120, 300, Gaze.right)], W, H).rect
    left = propose_canvas([person(900, 300, 120, 300, Gaze.left)], W, H).rect
    subject_x = 960
    assert right.center[0] - subject_x == pytest.approx(-(left.center[0] - subject_x))
    # looking right leaves the space on the right
    assert right.center[0] > subject_x
    assert (right.y, right.w, right.h) == pytest.approx((left.y, left.w, left.h))


def test_grown_canvas_leaves_room_on_the_binding_edge():
    group = [person(500, 300, 100, 150), person(900, 500, 100, 200)]
    shot = propose_canvas(group, W, H)
    assert shot.expanded and not shot.clamped
    assert all(strictly_inside(shot.rect, d.box) for d in group)
    assert shot.rect.bottom - group[1].box.bottom < 1e-2


def test_empty_detections_are_rejected():
    with pytest.raises(InvalidArgument):
        propose_canvas([], W, H)


def test_oversized_group_is_clamped_to_the_frame():
    group = [person(0, 100, 100, 150), person(1850, 100, 70, 150)]
    shot = propose_canvas(group, W, H)
    assert shot.clamped
    assert shot.rect.x >= 0 and shot.rect.right <= W + 1e-9
    assert shot.rect.y >= 0 and shot.rect.bottom <= H + 1e-9


def random_detections(rng):
    detections = []
    for _ in range(int(rng.integers(1, 5))):
        w = float(rng.uniform(30, 160))
        h = w * float(rng.uniform(1.0, 1.5))
        x = float(rng.uniform(0, W - w))
        y = float(rng.uniform(0, H * 0.7))
        detections.append(person(x, y, w, h, GAZES[int(rng.integers(0, 4))]))
    return detections


def test_canvas_geometry_properties():
    rng = np.random.default_rng(7)
    params = ComposeParams()
    checked = {"contained": 0, "width": 0, "lead": 0}
    for _ in range(1000):
        detections = random_detections(rng)
        shot = propose_canvas(detections, W, H, params)
        rect = shot.rect

        assert abs(rect.h * 16 / 9 - rect.w) <= 1
        assert rect.x >= -1e-6 and rect.right <= W + 1e-6
        if shot.clamped:
            continue

        assert all(strictly_inside(rect, d.box) for d in detections)
        highest_eye = min(d.eye_point[1] for d in detections)
        assert abs(highest_eye - (rect.y + rect.h / 3)) <= 1
        checked["contained"] += 1

        if len(detections) > 1 and not shot.expanded:
            span = max(d.box.right for d in detections) - min(d.box.x for d in detections)
            assert abs(rect.w - 1.15 * span) <= 1
            checked["width"] += 1

        if len(detections) == 1 and not shot.expanded:
            subject_x = detections[0].box.center[0]
            gaze = detections[0].gaze
            if gaze is Gaze.right:
                assert rect.center[0] > subject_x
            elif gaze is Gaze.left:
                assert rect.center[0] < subject_x
            else:
                assert rect.center[0] == pytest.approx(subject_x)
            checked["lead"] += 1

    # every branch saw real cases
    assert all(count > 10 for count in checked.values()), checked


def test_identical_snapshots_are_steady():
    snapshot = [person(100, 100, 50, 80, hint="a"), person(600, 120, 60, 90, hint="b")]
    assert is_steady([snapshot] * 15, W)


def test_walking_person_is_not_steady():
    history = [[person(100 + 0.05 * W * k, 100, 50, 80)] for k in range(15)]
    assert not is_steady(history, W, eps_move=0.01)


def test_movement_at_the_bound_is_not_steady():
    history = [[person(100, 100, 50, 80)], [person(110, 100, 50, 80)]]
    assert not is_steady(history, 1000, eps_move=0.01)
    history = [[person(100, 100, 50, 80)], [person(109, 100, 50, 80)]]
    assert is_steady(history, 1000, eps_move=0.01)


def test_change_in_head_count_is_not_steady():
    assert not is_steady([[person(100, 100, 50, 80)], []], W)
    assert is_steady([[], [], []], W)


def test_steadiness_needs_two_snapshots():
    with pytest.raises(InvalidArgument):
        is_steady([[]], W)


def test_differs():
    params = DiffParams()
    current = canvas(960, 540, 800)
    assert not differs(current, current, params, W)
    assert differs(current, canvas(200, 200, 300), params, W)
    assert differs(current, canvas(960, 540, 800 * 1.3), params, W)
    assert not differs(current, canvas(970, 540, 820), params, W)


A = canvas(600, 400, 800)
B = canvas(1300, 500, 700)


def test_first_steady_proposal_goes_on_air():
    cut, state = shot_fsm_tick(ShotState(), A, False, TICK)
    assert cut is None and state.current is None
    cut, state = shot_fsm_tick(state, A, True, TICK)
    assert cut == A and state.current == A


def test_same_proposal_never_switches():
    state = ShotState(current=A)
    for _ in range(1000):
        cut, state = shot_fsm_tick(state, A, True, TICK)
        assert cut is None


def test_switch_after_hold():
    # shot already 10 s old when a different steady proposal shows up at t = 10
    state = ShotState(current=A, age=9.9)
    t = 9.9
    for _ in range(40):
        t += TICK
        cut, state = shot_fsm_tick(state, B, True, TICK)
        if cut is not None:
            break
    assert cut == B
    assert t == pytest.approx(12.0)


def test_switch_waits_for_minimum_shot_length():
    state = ShotState(current=A, age=2.9)
    age = 2.9
    for _ in range(100):
        age += TICK
        cut, state = shot_fsm_tick(state, B, True, TICK)
        if cut is not None:
            break
    assert cut == B
    assert age == pytest.approx(6.0)


def test_unsteady_proposal_restarts_the_hold():
    state = ShotState(current=A, age=30.0)
    for _ in range(15):
        _, state = shot_fsm_tick(state, B, True, TICK)
    _, state = shot_fsm_tick(state, B, False, TICK)
    assert state.pending is None
    for _ in range(20):
        cut, state = shot_fsm_tick(state, B, True, TICK)
        assert cut is None
    cut, _ = shot_fsm_tick(state, B, True, TICK)
    assert cut == B


def test_shot_timing_properties():
    rng = np.random.default_rng(3)
    palette = [canvas(float(x), float(y), float(w)) for x, y, w in zip(
        rng.uniform(500, 1400, 6), rng.uniform(300, 700, 6), rng.uniform(400, 1000, 6))]
    palette += [Canvas(ImageBox(c.rect.x + 5, c.rect.y, c.rect.w, c.rect.h)) for c in palette]
    diff = DiffParams()

    state = ShotState()
    proposal = palette[0]
    switches = []
    run_start = None
    for k in range(100000):
        if rng.random() < 0.02:
            proposal = None if rng.random() < 0.1 else palette[int(rng.integers(0, len(palette)))]
        steady = rng.random() < 0.97
        before = state.current
        if before is not None and proposal is not None and steady and differs(before, proposal, diff, W):
            run_start = k if run_start is None else run_start
        else:
            run_start = None

        cut, state = shot_fsm_tick(state, proposal, steady, TICK, diff, W)
        if cut is None or before is None:
            continue
        switches.append(k)
        assert (k - run_start) * TICK >= 2.0 - 1e-6
        run_start = None

    assert len(switches) > 50
    gaps = np.diff(switches) * TICK
    assert gaps.min() >= 6.0 - 1e-6
