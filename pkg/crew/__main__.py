"""Command line: ``crew simulate``, ``crew calibrate`` and ``crew report``."""
import argparse
import asyncio
import logging
import os
import sys

from pathlib import Path
from typing import List, Optional

from .calibration import calibrate_camera, write_tables
from .config import CalibrationParams
from .errors import CrewException, ScenarioError
from .metrics import evaluate, regenerate, report, storage_summary, write_run
from .scenario import Scenario, load_scenario
from .simulator import Simulator, write_events, write_timeline

LOG = logging.getLogger("crew")


def simulate_once(scenario: Scenario, seed: int, out_dir: Path, dump_frames: bool = False):
    """Runs one seed and writes every output file into ``out_dir``."""
    out_dir.mkdir(parents=True, exist_ok=True)
    result = Simulator(scenario, seed, out_dir / "frames" if dump_frames else None).run()
    metrics = evaluate(result, scenario.config.run.sample_period)
    write_timeline(result, out_dir / "timeline.csv")
    write_events(result, out_dir / "events.csv")
    report(metrics, storage_summary(result), out_dir)
    write_run(result, metrics, out_dir)
    LOG.info("seed %s written to %s", seed, out_dir)
    return metrics


async def sweep(scenario: Scenario, seeds: List[int], out_dir: Path, dump_frames: bool = False, concurrency: Optional[int] = None):
    """Runs every seed in its own thread and sub-directory, at most ``concurrency`` at a time."""
    lock = asyncio.Semaphore(concurrency or os.cpu_count() or 1)

    async def one(seed: int):
        async with lock:
            return await asyncio.to_thread(simulate_once, scenario, seed, out_dir / "seed_{}".format(seed), dump_frames)

    return await asyncio.gather(*(one(seed) for seed in seeds))


def _simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.tick_ms is not None:
        if not args.tick_ms > 0:
            raise ScenarioError("--tick-ms must be positive, got {}".format(args.tick_ms), path=str(args.scenario))
        overrides["tick"] = args.tick_ms / 1000.0
    if overrides:
        scenario = Scenario(scenario.floorplan, scenario.cameras, scenario.actors, scenario.zones, scenario.buckets,
                            scenario.expected, scenario.config.with_run(**overrides), scenario.path)

    out_dir = Path(args.out)
    if args.sweep and args.sweep > 1:
        seeds = [scenario.seed + i for i in range(args.sweep)]
        results = asyncio.run(sweep(scenario, seeds, out_dir, args.dump_frames))
        for seed, metrics in zip(seeds, results):
            print("seed {}: savings {:.2%}, overhead {:.2%}".format(seed, metrics.savings, metrics.overhead))
        return 0

    simulate_once(scenario, scenario.seed, out_dir, args.dump_frames)
    print((out_dir / "report.txt").read_text(encoding="utf-8"), end="")
    return 0


def _calibrate(args) -> int:
    scenario = load_scenario(args.scenario)
    params = scenario.config.calibration
    params = CalibrationParams(args.grid or params.grid, args.zooms or params.zooms, params.depth)
    tables = [calibrate_camera(overview, ptz, params) for overview, ptz in scenario.ptz_pairs]
    if not tables:
        LOG.warning("scenario %s has no PTZ camera to calibrate", args.scenario)
    write_tables(tables, args.out)
    LOG.info("%d calibration table(s) written to %s", len(tables), args.out)
    return 0


def _report(args) -> int:
    regenerate(args.run)
    print((Path(args.run) / "report.txt").read_text(encoding="utf-8"), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crew", description="Autonomous camera crew simulator.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-stage details")
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", help="run a scenario and evaluate camera selection")
    simulate.add_argument("--scenario", required=True)
    simulate.add_argument("--seed", type=int)
    simulate.add_argument("--tick-ms", type=float)
    simulate.add_argument("--out", default="out")
    simulate.add_argument("--dump-frames", action="store_true", help="write frames and masks as PGM")
    simulate.add_argument("--sweep", type=int, default=0, metavar="K", help="run seeds seed..seed+K-1 concurrently")
    simulate.set_defaults(handler=_simulate)

    calibrate = commands.add_parser("calibrate", help="write PTZ calibration tables")
    calibrate.add_argument("--scenario", required=True)
    calibrate.add_argument("--grid", type=int)
    calibrate.add_argument("--zooms", type=int)
    calibrate.add_argument("--out", required=True)
    calibrate.set_defaults(handler=_calibrate)

    regenerate_cmd = commands.add_parser("report", help="regenerate the reports of a finished run")
    regenerate_cmd.add_argument("--run", required=True)
    regenerate_cmd.set_defaults(handler=_report)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.handler(args)
    except CrewException as exc:
        LOG.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
