"""The tick loop tying every stage together, and the timeline and event outputs."""
import csv
import logging

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from time import perf_counter
from typing import Deque, Dict, List, Optional, Tuple

from .calibration import CalibrationTable, PtzPose, calibrate_camera, canvas_to_ptz
from .cinematographer import Canvas, ShotState, is_steady, propose_canvas, shot_fsm_tick
from .detection import Detection, FrameContext, SimulatedDetector, activity_regions, detect, update_pool
from .enums import EventKind
from .errors import ReportError
from .matrix import MatrixState, RecordSegmentEvent, StorageLedger, matrix_tick
from .scenario import Scenario
from .selection import SelectionState, selection_tick
from .utils import StageStats, fixed
from .video import BackgroundModel, ForegroundMask, Frame, background_pattern, bgs_step, render, write_pgm, zone_activity

LOG = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class Event:
    """One row of ``events.csv``."""
    t: float
    kind: EventKind
    subject: str
    detail: str = ""


@dataclass(frozen=True, slots=True)
class ShotSample:
    canvas: Optional[Canvas]
    pose: Optional[PtzPose]


@dataclass(frozen=True, slots=True)
class TimelineSample:
    """The state of the installation at one tick.

    Tuples follow the scenario order of buckets, cameras and PTZ cameras;
    ``detections`` follows the overview cameras that drive a PTZ.
    """
    t: float
    levels: Tuple[float, ...]
    bucket_recording: Tuple[bool, ...]
    camera_flags: Tuple[bool, ...]
    channels: Tuple[Optional[int], ...]
    shots: Tuple[ShotSample, ...]
    detections: Tuple[int, ...]


@dataclass
class RunResult:
    scenario: Scenario
    seed: int
    samples: List[TimelineSample] = field(default_factory=list)
    events: List[Event] = field(default_factory=list)
    ledger: StorageLedger = field(default_factory=StorageLedger)
    tables: Dict[str, CalibrationTable] = field(default_factory=dict)

    @property
    def overview_ids(self) -> Tuple[str, ...]:
        return tuple(overview.id for overview, _ in self.scenario.ptz_pairs)


class _Cinematographer:
    """Per-PTZ state: the overview's detector, its pool, the detection history and the shot."""

    __slots__ = ("overview", "ptz", "detector", "table", "previous", "history", "shot", "pose")

    def __init__(self, scenario: Scenario, overview, ptz, seed: int, table: CalibrationTable):
        config = scenario.config
        self.overview = overview
        self.ptz = ptz
        self.detector = SimulatedDetector(scenario, overview, seed, config.detection)
        self.table = table
        self.previous: List[Detection] = []
        window = max(2, int(round(config.shot.steady_window / config.run.tick)) + 1)
        self.history: Deque[List[Detection]] = deque(maxlen=window)
        self.shot = ShotState.from_params(config.shot)
        self.pose: Optional[PtzPose] = None

    def __repr__(self):
        return "<_Cinematographer overview={0.overview.id} ptz={0.ptz.id} shot={0.shot.current}>".format(self)


class Simulator:
    """Runs a scenario tick by tick.

    Per tick every rendered camera goes through background subtraction and zone activity,
    buckets are updated and the matrix is told which cameras to record. Each overview
    camera paired with a PTZ then detects people in its pool, proposes a canvas and lets
    the shot state decide whether the PTZ cuts to it.

    Parameters
    ----------
    scenario: :class:`Scenario`
        The world to simulate.
    seed: Optional[:class:`int`]
        Overrides the scenario seed.
    dump_dir: Optional[:class:`pathlib.Path`]
        When set, frames and masks are written there as PGM once per sample period.
    stats_max_size: :class:`int`
        How many per-stage timings are kept for the debug summary.
    """

    __slots__ = ("scenario", "seed", "dump_dir", "stats", "config")

    def __init__(self, scenario: Scenario, seed: Optional[int] = None, dump_dir: Optional[Path] = None, stats_max_size: int = 1000):
        self.scenario = scenario
        self.seed = scenario.seed if seed is None else seed
        self.dump_dir = dump_dir
        self.stats = StageStats(max_size=stats_max_size)
        self.config = scenario.config

    def __repr__(self):
        return "<Simulator scenario={0.scenario.path} seed={0.seed}>".format(self)

    def _timed(self, stage: str, start: float):
        self.stats[stage] = (perf_counter() - start) * 1000

    def run(self) -> RunResult:
        scenario, config = self.scenario, self.config
        tick = config.run.tick
        steps = int(round(config.run.duration / tick))
        result = RunResult(scenario, self.seed, ledger=StorageLedger(config.matrix.bitrate))
        LOG.info("running %s with seed %s: %d ticks", scenario.path or "<scenario>", self.seed, steps + 1)

        models = {}
        for camera in scenario.rendered_cameras:
            model = BackgroundModel(config.bgs.alpha, config.bgs.tau, config.bgs.warmup)
            model.prime(Frame(background_pattern(camera.id, *camera.stream_size)))
            models[camera.id] = model

        crews = []
        for overview, ptz in scenario.ptz_pairs:
            start = perf_counter()
            table = calibrate_camera(overview, ptz, config.calibration)
            self._timed("calibration", start)
            result.tables[ptz.id] = table
            crews.append(_Cinematographer(scenario, overview, ptz, self.seed, table))

        selection = SelectionState(scenario.buckets, scenario.zones, scenario.camera_ids)
        matrix = MatrixState.empty(scenario.camera_ids, config.matrix)
        dump_every = max(1, int(round(config.run.sample_period / tick)))

        for k in range(steps + 1):
            t = k * tick
            masks: Dict[str, ForegroundMask] = {}
            activities: Dict[str, float] = {}
            for camera in scenario.rendered_cameras:
                start = perf_counter()
                frame = render(camera, scenario, t)
                self._timed("render", start)

                start = perf_counter()
                mask = bgs_step(models[camera.id], frame)
                masks[camera.id] = mask
                self._timed("bgs", start)

                start = perf_counter()
                for zone in scenario.zones_of(camera.id):
                    activities[zone.id] = zone_activity(mask, zone.stream_polygon(camera.stream_scale))
                self._timed("zones", start)

                if self.dump_dir is not None and k % dump_every == 0:
                    self._dump(camera.id, k, frame, mask)

            start = perf_counter()
            selection = selection_tick(selection, activities, tick)
            self._timed("selection", start)

            start = perf_counter()
            requested = [c for c, flag in zip(selection.camera_ids, selection.flags) if flag]
            priority = {c: selection.priority(c) for c in requested}
            changes, matrix = matrix_tick(matrix, requested, priority, t)
            self._record(result, changes)
            self._timed("matrix", start)

            shots, counts = [], []
            for crew in crews:
                shot, count = self._direct(crew, masks[crew.overview.id], t, tick, result)
                shots.append(shot)
                counts.append(count)

            assigned = matrix.assigned
            result.samples.append(TimelineSample(
                t=t,
                levels=tuple(b.level for b in selection.buckets),
                bucket_recording=tuple(b.recording for b in selection.buckets),
                camera_flags=selection.flags,
                channels=tuple(assigned.get(c) for c in scenario.camera_ids),
                shots=tuple(shots),
                detections=tuple(counts),
            ))

        end = steps * tick
        changes, matrix = matrix_tick(matrix, (), {}, end)
        self._record(result, changes)
        result.ledger.close_all(end)

        for stage, average in sorted(self.stats.get_all_average().items()):
            LOG.debug("stage %s: %.3f ms on average", stage, average)
        LOG.info("run finished: %d events, %.1f camera-seconds recorded", len(result.events), result.ledger.recorded_seconds())
        return result

    def _record(self, result: RunResult, changes: List[RecordSegmentEvent]):
        result.ledger.apply(changes)
        for change in changes:
            result.events.append(Event(change.t, change.kind, change.camera_id, "channel={}".format(change.channel)))

    def _direct(self, crew: _Cinematographer, mask: ForegroundMask, t: float, tick: float, result: RunResult) -> Tuple[ShotSample, int]:
        config = self.config
        overview = crew.overview

        start = perf_counter()
        scale = overview.stream_scale
        activity = [box.scaled(scale) for box in activity_regions(mask, config.detection.min_area)]
        pool = update_pool(crew.previous, config.detection.margin, activity, overview.width, overview.height)
        detections = detect(crew.detector, FrameContext(overview, t), pool, config.detection.dedupe_iou)
        crew.previous = detections
        crew.history.append(detections)
        self._timed("detection", start)

        start = perf_counter()
        proposal = propose_canvas(detections, overview.width, overview.height, config.compose) if detections else None
        steady = len(crew.history) == crew.history.maxlen and is_steady(
            list(crew.history), overview.width, config.shot.eps_move, config.shot.eps_size)
        cut, crew.shot = shot_fsm_tick(crew.shot, proposal, steady, tick, config.diff, overview.width)
        if cut is not None:
            pose = canvas_to_ptz(crew.table, cut)
            crew.pose = pose
            rect = cut.rect
            result.events.append(Event(t, EventKind.shot_switch, crew.ptz.id, "canvas={};{};{};{} pose={};{};{}".format(
                fixed(rect.x), fixed(rect.y), fixed(rect.w), fixed(rect.h), fixed(pose.pan), fixed(pose.tilt), fixed(pose.zoom))))
            if pose.fallback:
                result.events.append(Event(t, EventKind.calibration_fallback, crew.ptz.id, "nearest sample"))
        self._timed("shots", start)

        return ShotSample(crew.shot.current, crew.pose), len(detections)

    def _dump(self, camera_id: str, k: int, frame: Frame, mask: ForegroundMask):
        self.dump_dir.mkdir(parents=True, exist_ok=True)
        write_pgm(self.dump_dir / "{}_{:06d}.pgm".format(camera_id, k), frame.pixels)
        write_pgm(self.dump_dir / "{}_{:06d}_mask.pgm".format(camera_id, k), mask.bits)


def run(scenario: Scenario, seed: Optional[int] = None, dump_dir: Optional[Path] = None) -> RunResult:
    """Runs ``scenario`` once. Equal ``(scenario, seed)`` always give equal results."""
    return Simulator(scenario, seed, dump_dir).run()


def timeline_header(result: RunResult) -> List[str]:
    scenario = result.scenario
    header = ["t"]
    for bucket in scenario.buckets:
        header += ["level_{}".format(bucket.id), "recording_{}".format(bucket.id)]
    for camera_id in scenario.camera_ids:
        header += ["record_{}".format(camera_id), "channel_{}".format(camera_id)]
    for _, ptz in scenario.ptz_pairs:
        header += ["{}_{}".format(name, ptz.id) for name in ("shot_x", "shot_y", "shot_w", "shot_h", "pan", "tilt", "zoom")]
    header += ["detections_{}".format(camera_id) for camera_id in result.overview_ids]
    return header


def timeline_row(sample: TimelineSample) -> List[str]:
    row = [fixed(sample.t)]
    for level, recording in zip(sample.levels, sample.bucket_recording):
        row += [fixed(level), str(int(recording))]
    for flag, channel in zip(sample.camera_flags, sample.channels):
        row += [str(int(flag)), "" if channel is None else str(channel)]
    for shot in sample.shots:
        if shot.canvas is None:
            row += [""] * 4
        else:
            rect = shot.canvas.rect
            row += [fixed(rect.x), fixed(rect.y), fixed(rect.w), fixed(rect.h)]
        if shot.pose is None:
            row += [""] * 3
        else:
            row += [fixed(shot.pose.pan), fixed(shot.pose.tilt), fixed(shot.pose.zoom)]
    row += [str(count) for count in sample.detections]
    return row


def write_timeline(result: RunResult, path):
    try:
        with open(path, "w", newline="", encoding="utf-8") as fp:
            writer = csv.writer(fp, lineterminator="\n")
            writer.writerow(timeline_header(result))
            for sample in result.samples:
                writer.writerow(timeline_row(sample))
    except OSError as exc:
        raise ReportError(path, "cannot write timeline: {}".format(exc)) from exc


def write_events(result: RunResult, path):
    try:
        with open(path, "w", newline="", encoding="utf-8") as fp:
            writer = csv.writer(fp, lineterminator="\n")
            writer.writerow(["t", "event", "subject", "detail"])
            for event in result.events:
                writer.writerow([fixed(event.t), str(event.kind), event.subject, event.detail])
    except OSError as exc:
        raise ReportError(path, "cannot write events: {}".format(exc)) from exc
