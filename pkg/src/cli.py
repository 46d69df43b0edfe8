"""
ESTA Command Line
=================

``esta simulate | track | evaluate | calibrate``

Every subcommand accepts ``--config``, ``--seed``, ``--out`` and repeated
``--set section.key=value`` overrides, writes into its output directory and
echoes the effective configuration into ``metadata.json``.

Exit codes: 0 success, 1 pipeline/domain error, 2 invalid configuration,
3 unreadable or malformed input/output files.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from src.core.config import EstaConfig, load_config, set_config
from src.core.constants import (
    ATTITUDE_FILES,
    AVERAGING_LOG_FILE,
    BUNDLE_LOG_FILE,
    CALIBRATION_FILE,
    CATALOG_FILE,
    DECISION_LOG_FILE,
    ESTIMATE_METHODS,
    EULER_FILES,
    EVENTS_FILE,
    EXIT_CONFIG_ERROR,
    EXIT_ESTA_ERROR,
    EXIT_IO_ERROR,
    EXIT_OK,
    GROUND_TRUTH_FILE,
    IDENTIFICATION_FILE,
    INTRINSICS_FILE,
    METADATA_FILE,
    PER_FRAME_ERRORS_FILE,
    PGM_DIR,
    POINTS_FILE,
    RELATIVE_FILE,
    REPORT_FILE,
    RUNTIMES_FILE,
    STAR_DIRECTIONS_FILE,
    TRACKS_FILE,
)
from src.core.exceptions import ConfigError, EstaError, FormatError
from src.parsers import writers
from src.parsers.parser_factory import get_parser_factory

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


# ==================== HELPERS ====================

def _configure(args: argparse.Namespace) -> EstaConfig:
    """Effective config: YAML file, then --set overrides, then --seed / --out"""
    overrides: List[str] = list(args.set or [])
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.out is not None:
        overrides.append(f"output.dir={args.out}")
    config = load_config(args.config, overrides)
    set_config(config)
    logging.basicConfig(level=getattr(logging, config.log_level), format=LOG_FORMAT, force=True)
    return config


def _read(path: Path, what: str) -> Any:
    """Parse one input file through the parser factory"""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"{what} file {path} does not exist")
    success, error, result = get_parser_factory().parse(path)
    if not success:
        raise FormatError(f"{what}: {error}", path=str(path))
    return result


def _metadata(command: str, config: EstaConfig, **extra: Any) -> Dict[str, Any]:
    return {"command": command, "config": config.echo(), **extra}


# ==================== SIMULATE ====================

def cmd_simulate(args: argparse.Namespace) -> int:
    from src.tools.catalog import catalog_from_config
    from src.tools.simulator import camera_intrinsics, frame_ground_truth, simulate_events

    config = _configure(args)
    out = Path(config.output.dir)
    logger.info(f"🌌 Simulating {config.simulation.duration_s:g} s at seed {config.seed} into {out}")

    catalog = catalog_from_config(config.catalog, config.seed)
    K = camera_intrinsics(config)
    stream, _ = simulate_events(catalog, config.simulation, seed=config.seed, intrinsics=K)
    truth = frame_ground_truth(config.simulation, config.frames.integration_ms, seed=config.seed)

    writers.write_events(stream, out / EVENTS_FILE)
    writers.write_attitudes(truth, out / GROUND_TRUTH_FILE)
    writers.write_catalog(catalog, out / CATALOG_FILE)
    writers.write_intrinsics(K, out / INTRINSICS_FILE)
    writers.write_json(
        _metadata("simulate", config, simulation=stream.metadata, n_frames=len(truth), catalog=catalog.source),
        out / METADATA_FILE,
    )

    logger.info(f"✅ {len(stream)} events, {len(truth)} ground-truth frames")
    return EXIT_OK


# ==================== TRACK ====================

def _write_tracking_outputs(state: Dict[str, Any], config: EstaConfig, out: Path) -> List[str]:
    """Write whatever the pipeline produced; returns the files written"""
    written: List[Path] = []

    point_sets = state.get("point_sets", [])
    if config.frames.dump_pgm:
        written += [writers.write_pgm(img, out / PGM_DIR) for img in state.get("images", [])]
    if config.frames.dump_points or config.output.write_debug:
        written.append(writers.write_points(point_sets, out / POINTS_FILE))

    if state.get("identification"):
        written.append(writers.write_identification(state["identification"], out / IDENTIFICATION_FILE))
    if state.get("relative_rotations"):
        written.append(writers.write_relative(state["relative_rotations"], out / RELATIVE_FILE))
    if state.get("tracks"):
        by_frame = {ps.frame: ps for ps in point_sets}
        written.append(writers.write_tracks(state["tracks"], by_frame, out / TRACKS_FILE))
    if state.get("star_directions"):
        written.append(writers.write_star_directions(state["star_directions"], out / STAR_DIRECTIONS_FILE))
    if state.get("averaging_log"):
        written.append(writers.write_averaging_log(state["averaging_log"], out / AVERAGING_LOG_FILE))
    if state.get("bundle_log"):
        written.append(writers.write_bundle_log(state["bundle_log"], out / BUNDLE_LOG_FILE))

    for method in ESTIMATE_METHODS:
        attitudes = state.get(f"attitudes_{method}")
        if attitudes:
            written.append(writers.write_attitudes(attitudes, out / ATTITUDE_FILES[method]))
            written.append(writers.write_euler(attitudes, out / EULER_FILES[method]))

    written.append(writers.write_json(state.get("decision_log", []), out / DECISION_LOG_FILE))
    return [str(p.relative_to(out)) for p in written]


def cmd_track(args: argparse.Namespace) -> int:
    from src.esta_app import run_tracking
    from src.tools.catalog import catalog_from_config
    from src.tools.evaluation import group_runtimes
    from src.tools.simulator import camera_intrinsics

    config = _configure(args)
    out = Path(config.output.dir)

    events = _read(args.events, "events")
    catalog = _read(args.catalog, "catalog") if args.catalog else catalog_from_config(config.catalog, config.seed)
    K = _read(args.intrinsics, "intrinsics") if args.intrinsics else camera_intrinsics(config)

    state = run_tracking(events, catalog, K, config)
    files = _write_tracking_outputs(state, config, out)

    runtimes = dict(state.get("stage_runtimes", {}))
    writers.write_json({"stages": runtimes, "groups": group_runtimes(runtimes)}, out / RUNTIMES_FILE)
    writers.write_json(
        _metadata(
            "track",
            config,
            inputs={"events": str(args.events), "catalog": str(args.catalog or catalog.source)},
            n_frames=len(state.get("images", [])),
            selected_frames=len(state.get("selected_frames", [])),
            identified_frames=len(state.get("absolute_rotations", {})),
            gauge_free=state.get("gauge_free", False),
            warnings=state.get("warnings", []),
            error=state.get("error"),
            failed_stage=state.get("failed_stage"),
            files=files,
        ),
        out / METADATA_FILE,
    )

    if state.get("error"):
        print(f"esta track: {state['error']}", file=sys.stderr)
        return EXIT_ESTA_ERROR
    return EXIT_OK


# ==================== EVALUATE ====================

def cmd_evaluate(args: argparse.Namespace) -> int:
    from src.tools.evaluation import evaluate

    config = _configure(args)
    run = Path(args.run)
    out = Path(args.out) if args.out else run

    truth = _read(args.ground_truth, "ground truth")
    estimates = {
        method: _read(run / ATTITUDE_FILES[method], method) if (run / ATTITUDE_FILES[method]).is_file() else {}
        for method in ESTIMATE_METHODS
    }

    absolute = None
    if (run / IDENTIFICATION_FILE).is_file():
        rows = _read(run / IDENTIFICATION_FILE, "identification report")
        absolute = {r["frame"]: r["rotation"] for r in rows if r["rotation"] is not None}
    relative = None
    if (run / RELATIVE_FILE).is_file():
        relative = {pair: r.rotation for pair, r in _read(run / RELATIVE_FILE, "relative rotations").items()}
    runtimes = None
    if args.with_runtimes and (run / RUNTIMES_FILE).is_file():
        with open(run / RUNTIMES_FILE, "r", encoding="utf-8") as f:
            runtimes = json.load(f).get("stages", {})

    report = evaluate(estimates, truth, n_frames=len(truth), absolute=absolute, relative=relative, runtimes=runtimes)

    writers.write_json(report, out / REPORT_FILE)
    writers.write_per_frame_errors(
        {name: m.per_frame for name, m in report.methods.items()}, out / PER_FRAME_ERRORS_FILE
    )
    writers.write_euler(truth, out / EULER_FILES["ground_truth"])

    for name, m in report.methods.items():
        logger.info(f"📊 {name:>8}: RMSE {m.stats.rmse:.4f}°  SD {m.stats.sd:.4f}°")
    if report.missing_methods:
        logger.warning(f"⚠️  No estimate for: {', '.join(report.missing_methods)}")
    if out.resolve() != run.resolve():
        writers.write_json(_metadata("evaluate", config, run=str(run)), out / METADATA_FILE)
    return EXIT_OK


# ==================== CALIBRATE ====================

def cmd_calibrate(args: argparse.Namespace) -> int:
    from src.tools.calibration import calibrate
    from src.tools.simulator import camera_intrinsics

    config = _configure(args)
    out = Path(config.output.dir)

    screen, event = _read(args.homography_pairs, "homography pairs")
    pixels, directions = _read(args.projection_pairs, "projection pairs")
    K_ev = _read(args.intrinsics, "intrinsics") if args.intrinsics else camera_intrinsics(config)

    solution = calibrate(screen, event, pixels, directions, K_ev)
    writers.write_calibration(solution, out / CALIBRATION_FILE)
    writers.write_json(
        _metadata(
            "calibrate",
            config,
            homography_pairs=len(screen),
            projection_pairs=len(pixels),
            homography_rms_px=solution.homography_rms_px,
            projection_rms_px=solution.projection_rms_px,
        ),
        out / METADATA_FILE,
    )
    logger.info(f"✅ Calibration written to {out / CALIBRATION_FILE}")
    return EXIT_OK


# ==================== ENTRY POINT ====================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="esta",
        description="Event-camera star tracking: simulate, track, evaluate, calibrate",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="YAML configuration file")
    common.add_argument("--seed", type=int, default=None, help="Override the configured seed")
    common.add_argument("--out", type=Path, default=None, help="Output directory")
    common.add_argument(
        "--set", action="append", default=[], metavar="SECTION.KEY=VALUE", help="Override one config field"
    )

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="Write a synthetic event stream and ground truth")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("track", parents=[common], help="Estimate attitudes from an event stream")
    p.add_argument("--events", type=Path, required=True, help="Event file (t_us,x,y,p)")
    p.add_argument("--catalog", type=Path, default=None, help="Catalog file (defaults to the configured catalog)")
    p.add_argument("--intrinsics", type=Path, default=None, help="Intrinsics file (fx,fy,cx,cy,skew)")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("evaluate", parents=[common], help="Score a track output directory against ground truth")
    p.add_argument("--run", type=Path, required=True, help="Output directory of `esta track`")
    p.add_argument("--ground-truth", type=Path, required=True, help="Ground-truth attitude file")
    p.add_argument("--with-runtimes", action="store_true", help="Merge grouped stage runtimes into the report")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("calibrate", parents=[common], help="Calibrate the virtual telescope")
    p.add_argument("--homography-pairs", type=Path, required=True, help="2D-2D pairs (u,v,u2,v2)")
    p.add_argument("--projection-pairs", type=Path, required=True, help="2D-3D pairs (u,v,X,Y,Z)")
    p.add_argument("--intrinsics", type=Path, default=None, help="Event camera intrinsics file")
    p.set_defaults(func=cmd_calibrate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"esta {args.command}: invalid configuration: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except (OSError, FormatError) as e:
        print(f"esta {args.command}: {e}", file=sys.stderr)
        return EXIT_IO_ERROR
    except EstaError as e:
        print(f"esta {args.command}: {e}", file=sys.stderr)
        return EXIT_ESTA_ERROR
    except ValueError as e:
        print(f"esta {args.command}: [{args.command}] {e}", file=sys.stderr)
        return EXIT_ESTA_ERROR


if __name__ == "__main__":
    sys.exit(main())
