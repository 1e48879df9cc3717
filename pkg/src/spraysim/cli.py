"""Command-line entry point.

Subcommands: generate, stats, beam-pattern, render, validate-config.
Exit codes: 0 success, 1 validation error, 2 I/O error. Machine-readable
output goes to stdout with --json; logs go to stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__, dataset, render
from .config import ConfigError, ScenarioConfig, apply_overrides, scenario_from_dict
from .lidar import beam_pattern

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


def _load_config(args) -> ScenarioConfig:
    doc = {}
    if args.config is not None:
        with open(args.config, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    if args.set:
        doc = apply_overrides(doc, args.set)
    if getattr(args, "seed", None) is not None:
        doc["rng_seed"] = args.seed
    return scenario_from_dict(doc)


def _emit(payload: dict, as_json: bool) -> None:
    if as_json:
        print(json.dumps(payload, sort_keys=True))
    else:
        for key, value in payload.items():
            print(f"{key}: {value}")


def _cmd_generate(args) -> int:
    config = _load_config(args)
    manifest = dataset.generate(config, args.out, progress=not args.json)
    _emit({"ok": True, "out_dir": str(args.out),
           "frame_count": manifest.frame_count,
           "rng_seed": config.rng_seed}, args.json)
    return EXIT_OK


def _cmd_stats(args) -> int:
    summary = dataset.stats(args.data)
    if args.json:
        print(json.dumps(summary, sort_keys=True))
    else:
        print(f"frames: {summary['frame_count']}")
        print(f"total points: {summary['total_points']}")
        for name, count in summary["per_class_points"].items():
            print(f"  {name}: {count}")
        print(f"spray fraction: {summary['spray_fraction']:.5f}")
        print(f"frames per weather class: {summary['frames_per_weather_class']}")
        for name, hist in summary["intensity"].items():
            if hist:
                print(f"intensity[{name}]: mean={hist['mean']:.4f} "
                      f"mode~{hist['mode_bin_center']:.4f}")
        if summary["corrupt_files"]:
            print(f"corrupt files: {len(summary['corrupt_files'])}", file=sys.stderr)
    return EXIT_OK


def _cmd_beam_pattern(args) -> int:
    config = _load_config(args)
    elev, az = beam_pattern(config.lidar)
    lines = ["channel,elevation_deg"]
    lines += [f"{i},{math.degrees(e):.6f}" for i, e in enumerate(elev)]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.json:
        print(json.dumps({"channels": len(elev), "azimuth_steps": len(az),
                          "rays_per_frame": len(elev) * len(az)}))
    return EXIT_OK


def _cmd_render(args) -> int:
    written = render.render_frame(args.data, args.frame, args.out,
                                  rasters=args.rasters)
    _emit({"ok": True, "written": [str(p) for p in written]}, args.json)
    return EXIT_OK


def _cmd_validate_config(args) -> int:
    config = _load_config(args)
    _emit({"ok": True, "duration_frames": config.duration_frames,
           "rng_seed": config.rng_seed}, args.json)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spraysim",
        description="Rainy-highway LiDAR point cloud simulator")
    parser.add_argument("--version", action="version",
                        version=f"spraysim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_args(p, seed=True):
        p.add_argument("--config", type=Path, default=None,
                       help="scenario JSON (defaults apply when omitted)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (dotted path, JSON value)")
        if seed:
            p.add_argument("--seed", type=int, default=None,
                           help="override rng_seed")
        p.add_argument("--json", action="store_true",
                       help="machine-readable stdout")

    p = sub.add_parser("generate", help="run a scenario and write the dataset")
    add_config_args(p)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("stats", help="summarize a generated dataset")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("beam-pattern", help="dump channel elevations as CSV")
    add_config_args(p, seed=False)
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=_cmd_beam_pattern)

    p = sub.add_parser("render", help="export frame figures (PNG)")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--frame", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--rasters", action="store_true",
                   help="also render raster channel previews")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("validate-config", help="check a scenario document")
    add_config_args(p)
    p.set_defaults(func=_cmd_validate_config)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ValueError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
