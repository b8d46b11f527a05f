"""Evaluation of a run against its expected recording, and the report files."""
import csv
import logging

from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple

import orjson

from .errors import InvalidArgument, ReportError
from .matrix import savings_report
from .simulator import RunResult, TimelineSample
from .utils import find, fixed

LOG = logging.getLogger(__name__)

RUN_FILE = "run.json"


@dataclass(frozen=True, slots=True)
class BucketMetrics:
    bucket_id: str
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def samples(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.samples if self.samples else 1.0


@dataclass(frozen=True, slots=True)
class MetricsReport:
    """How well recording followed the expected recording.

    Attributes
    ----------
    buckets: Tuple[:class:`BucketMetrics`]
        Confusion counts per bucket at the sampling instants.
    savings: :class:`float`
        Share of storage saved compared to recording every camera all the time.
    overhead: :class:`float`
        Share of the recorded camera-seconds during which no connected bucket expected recording.
    recorded_seconds: :class:`float`
        Camera-seconds recorded.
    total_seconds: :class:`float`
        Camera-seconds of recording everything.
    """
    buckets: Tuple[BucketMetrics, ...]
    savings: float
    overhead: float
    recorded_seconds: float
    total_seconds: float

    def bucket(self, bucket_id: str) -> Optional[BucketMetrics]:
        return find(lambda b: b.bucket_id == bucket_id, self.buckets)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["buckets"] = [asdict(b) for b in self.buckets]
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "MetricsReport":
        return cls(tuple(BucketMetrics(**b) for b in data["buckets"]), data["savings"], data["overhead"],
                   data["recorded_seconds"], data["total_seconds"])


def expected_at(intervals: Sequence[Tuple[float, float]], t: float, lead: float) -> bool:
    """Whether recording is expected at ``t``; every interval opens ``lead`` seconds early."""
    return any(start - lead <= t <= end for start, end in intervals)


def _sample_index(samples: Sequence[TimelineSample], t: float, tick: float) -> int:
    return min(int(round(t / tick)), len(samples) - 1)


def evaluate(result: RunResult, sample_period: float) -> MetricsReport:
    """Compares recording with the scenario's expected recording every ``sample_period`` seconds.

    Raises
    ------
    :exc:`InvalidArgument`
        ``sample_period`` is not positive or the run has no samples.
    """
    if sample_period <= 0:
        raise InvalidArgument("sample_period must be > 0")
    samples = result.samples
    if not samples:
        raise InvalidArgument("the run has no samples")

    scenario = result.scenario
    tick = scenario.tick
    lead = scenario.config.run.preroll
    duration = samples[-1].t
    instants = [n * sample_period for n in range(int(duration / sample_period + 1e-9) + 1)]

    buckets = []
    for index, bucket in enumerate(scenario.buckets):
        intervals = scenario.expected.get(bucket.id, ())
        tp = fp = fn = tn = 0
        for t in instants:
            actual = samples[_sample_index(samples, t, tick)].bucket_recording[index]
            expected = expected_at(intervals, t, lead)
            if actual and expected:
                tp += 1
            elif actual:
                fp += 1
            elif expected:
                fn += 1
            else:
                tn += 1
        buckets.append(BucketMetrics(bucket.id, tp, fp, fn, tn))

    camera_ids = scenario.camera_ids
    connected = {c: [b.id for b in scenario.buckets if c in b.camera_ids] for c in camera_ids}
    overhead_seconds = 0.0
    for sample in samples[:-1]:
        for camera_id, channel in zip(camera_ids, sample.channels):
            if channel is None:
                continue
            if not any(expected_at(scenario.expected.get(b, ()), sample.t, lead) for b in connected[camera_id]):
                overhead_seconds += tick

    recorded = result.ledger.recorded_seconds()
    total = len(camera_ids) * duration
    report = MetricsReport(
        buckets=tuple(buckets),
        savings=savings_report(result.ledger, total),
        overhead=overhead_seconds / recorded if recorded > 0 else 0.0,
        recorded_seconds=recorded,
        total_seconds=total,
    )
    LOG.debug("evaluated %d instants: savings %.4f, overhead %.4f", len(instants), report.savings, report.overhead)
    return report


def storage_summary(result: RunResult) -> Dict[str, Dict[str, float]]:
    """Seconds and bytes recorded per camera, in scenario order."""
    per_camera = result.ledger.per_camera(result.scenario.camera_ids)
    return {c: {"seconds": seconds, "bytes": size} for c, (seconds, size) in per_camera.items()}


def _write(path: Path, text: str):
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise ReportError(path, "cannot write report: {}".format(exc)) from exc


def write_metrics_csv(metrics: MetricsReport, path):
    path = Path(path)
    try:
        with open(path, "w", newline="", encoding="utf-8") as fp:
            writer = csv.writer(fp, lineterminator="\n")
            writer.writerow(["bucket", "samples", "tp", "fp", "fn", "tn", "accuracy"])
            for b in metrics.buckets:
                writer.writerow([b.bucket_id, b.samples, b.tp, b.fp, b.fn, b.tn, fixed(b.accuracy)])
            writer.writerow([])
            writer.writerow(["savings", fixed(metrics.savings)])
            writer.writerow(["overhead", fixed(metrics.overhead)])
    except OSError as exc:
        raise ReportError(path, "cannot write metrics: {}".format(exc)) from exc


def render_report(metrics: MetricsReport) -> str:
    lines = ["Camera selection", ""]
    width = max([len(b.bucket_id) for b in metrics.buckets] + [6])
    lines.append("{:<{w}}  {:>8}  {:>4}  {:>4}  {:>7}".format("bucket", "accuracy", "FP", "FN", "samples", w=width))
    for b in metrics.buckets:
        lines.append("{:<{w}}  {:>7.2f}%  {:>4}  {:>4}  {:>7}".format(b.bucket_id, 100 * b.accuracy, b.fp, b.fn, b.samples, w=width))
    lines += [
        "",
        "recorded  {} of {} camera-seconds".format(fixed(metrics.recorded_seconds), fixed(metrics.total_seconds)),
        "savings   {:.2f}%".format(100 * metrics.savings),
        "overhead  {:.2f}%".format(100 * metrics.overhead),
    ]
    return "\n".join(lines) + "\n"


def render_storage(storage: Mapping[str, Mapping[str, float]], savings: float) -> str:
    lines = ["camera  seconds  bytes"]
    for camera_id, entry in storage.items():
        lines.append("{}  {}  {}".format(camera_id, fixed(entry["seconds"]), int(entry["bytes"])))
    total = sum(int(entry["bytes"]) for entry in storage.values())
    lines += ["total  {}".format(total), "savings  {}".format(fixed(savings))]
    return "\n".join(lines) + "\n"


def report(metrics: MetricsReport, storage: Mapping[str, Mapping[str, float]], out_dir):
    """Writes ``report.txt``, ``metrics.csv`` and ``storage.txt`` into ``out_dir``."""
    out_dir = Path(out_dir)
    _write(out_dir / "report.txt", render_report(metrics))
    write_metrics_csv(metrics, out_dir / "metrics.csv")
    _write(out_dir / "storage.txt", render_storage(storage, metrics.savings))


def write_run(result: RunResult, metrics: MetricsReport, out_dir):
    """Writes the run manifest used by ``crew report``."""
    scenario = result.scenario
    manifest = {
        "scenario": scenario.path,
        "seed": result.seed,
        "tick": scenario.tick,
        "duration": scenario.duration,
        "bitrate": result.ledger.bitrate,
        "metrics": metrics.to_dict(),
        "storage": storage_summary(result),
    }
    path = Path(out_dir) / RUN_FILE
    try:
        path.write_bytes(orjson.dumps(manifest, option=orjson.OPT_INDENT_2))
    except OSError as exc:
        raise ReportError(path, "cannot write run manifest: {}".format(exc)) from exc


def load_run(run_dir) -> Tuple[MetricsReport, Dict[str, Dict[str, float]], Dict[str, Any]]:
    """Reads a run manifest back: metrics, per-camera storage and the raw manifest."""
    path = Path(run_dir) / RUN_FILE
    try:
        with open(path, "rb") as fp:
            manifest = orjson.loads(fp.read())
        return MetricsReport.from_dict(manifest["metrics"]), manifest["storage"], manifest
    except OSError as exc:
        raise ReportError(path, "cannot read run manifest: {}".format(exc)) from exc
    except (orjson.JSONDecodeError, KeyError, TypeError) as exc:
        raise ReportError(path, "malformed run manifest: {}".format(exc)) from exc


def regenerate(run_dir) -> MetricsReport:
    metrics, storage, _ = load_run(run_dir)
    report(metrics, storage, run_dir)
    return metrics
