"""Command-line interface for the RIS imaging and beam selection simulator.

Every subcommand reads an experiment config and writes into its output
directory (``--out`` overrides the config's ``output_dir``)::

    risiac background   --config desk.json
    risiac sense        --config desk.json --location 3 --offset 1
    risiac detect       --config desk.json --location 3 --offset 1
    risiac select       --config desk.json --location 3 --offset 1
    risiac experiment   --config desk.json --seed 7 --threads 4
    risiac export-depth --config desk.json --cube out/cubes/sample_L03_O01.bin

``sense``, ``detect`` and ``select`` are the stages of one sample run
separately; each picks up the previous stage's files from the output
directory.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import jsonschema

from risiac.beam import write_gain_csv
from risiac.config import ConfigError, load_config
from risiac.detect import DetectionResult, UserNotFound
from risiac.experiment import (Pipeline, capture_background, detect_sample, read_depth, run_experiment,
                               sample_name, select_beams, sense_sample, write_depth)
from risiac.fmcw import NyquistError, load_cube, save_cube

log = logging.getLogger("risiac")


def _pipeline(args) -> Pipeline:
    cfg = load_config(args.config).with_overrides(seed=args.seed, output_dir=args.out)
    return Pipeline.from_config(cfg)


def _check_sample(pipe: Pipeline, args) -> tuple[int, int]:
    users = pipe.cfg.users
    if not 0 <= args.location < len(users.locations):
        raise ConfigError(f"users/locations: no location {args.location} "
                          f"(config has {len(users.locations)})")
    if not 0 <= args.offset < len(users.antenna_offsets):
        raise ConfigError(f"users/antenna_offsets: no offset {args.offset} "
                          f"(config has {len(users.antenna_offsets)})")
    return args.location, args.offset


def cmd_background(args) -> None:
    pipe = _pipeline(args)
    out = pipe.cfg.output_dir
    depth, cube = capture_background(pipe, args.threads)
    write_depth(depth, out / "background")
    if pipe.cfg.save_cubes:
        (out / "cubes").mkdir(exist_ok=True)
        save_cube(cube, out / "cubes" / "background.bin", pipe.chirp)
    log.info("background written to %s", out / "background.pgm")


def cmd_sense(args) -> None:
    pipe = _pipeline(args)
    li, oi = _check_sample(pipe, args)
    out = pipe.cfg.output_dir
    depth, cube = sense_sample(pipe, li, oi, args.threads)
    stem = sample_name(li, oi)
    write_depth(depth, out / "depth" / stem)
    (out / "cubes").mkdir(exist_ok=True)
    save_cube(cube, out / "cubes" / f"{stem}.bin", pipe.chirp, {"location_id": li, "offset_id": oi})
    log.info("depth map and cube for %s written to %s", stem, out)


def cmd_detect(args) -> None:
    pipe = _pipeline(args)
    li, oi = _check_sample(pipe, args)
    out = pipe.cfg.output_dir
    stem = sample_name(li, oi)
    background = read_depth(out / "background", pipe.grid, pipe.scene.max_depth)
    current = read_depth(out / "depth" / stem, pipe.grid, pipe.scene.max_depth)
    det = detect_sample(pipe, background, current)
    record = {**det.to_dict(), "cluster_size": det.cluster_size}
    (out / "detections").mkdir(exist_ok=True)
    (out / "detections" / f"{stem}.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    log.info("user at pixel %s (cluster of %d)", det.pixel, det.cluster_size)


def cmd_select(args) -> None:
    pipe = _pipeline(args)
    li, oi = _check_sample(pipe, args)
    out = pipe.cfg.output_dir
    stem = sample_name(li, oi)
    path = out / "detections" / f"{stem}.json"
    if not path.is_file():
        raise FileNotFoundError(f"detection record not found: {path}")
    data = json.loads(path.read_text())
    det = DetectionResult(tuple(data["pixel"]), data["flat_index"], data["azimuth_rad"],
                          data["zenith_rad"], data.get("cluster_size", 0))
    (out / "gains").mkdir(exist_ok=True)
    for name, (ranking, report) in select_beams(pipe, li, oi, det).items():
        write_gain_csv(report, out / "gains" / f"{stem}_{name}.csv")
        top = max(pipe.cfg.k_list)
        ranked = [{"beam": m, "similarity": s} for m, s in ranking.pairs()[:top]]
        (out / "gains" / f"{stem}_{name}_ranking.json").write_text(json.dumps(ranked, indent=2) + "\n")
        log.info("%s: top-%d gain %.2f dB, exhaustive %.2f dB", name, top,
                 report.topk_gain_db[-1], report.exhaustive_gain_db)


def cmd_experiment(args) -> None:
    cfg = load_config(args.config).with_overrides(seed=args.seed, output_dir=args.out)
    result = run_experiment(cfg, threads=args.threads)
    n_ok = sum(r.detected for r in result.records)
    log.info("%d/%d samples detected; outputs in %s", n_ok, len(result.records), result.output_dir)
    for name, rep in result.aggregate.items():
        if rep is not None:
            gains = ", ".join(f"top-{k} {g:.2f}" for k, g in zip(rep.k_list, rep.topk_gain_db))
            log.info("%s: %s, exhaustive %.2f dB", name, gains, rep.exhaustive_gain_db)


def cmd_export_depth(args) -> None:
    pipe = _pipeline(args)
    cube, _, _ = load_cube(args.cube)
    depth = pipe.depth_map(cube)
    stem = pipe.cfg.output_dir / Path(args.cube).stem
    write_depth(depth, stem)
    log.info("wrote %s and %s", stem.with_suffix(".pgm"), stem.with_suffix(".csv"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="risiac", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, sample=False):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="experiment config (JSON)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--threads", type=int, default=1, help="worker threads (default: 1)")
        p.add_argument("--out", default=None, help="override the config output directory")
        if sample:
            p.add_argument("--location", type=int, default=0, help="location id (default: 0)")
            p.add_argument("--offset", type=int, default=0, help="antenna offset id (default: 0)")
        p.set_defaults(func=func)
        return p

    add("background", cmd_background, "sweep the user-free scene")
    add("sense", cmd_sense, "sweep one user sample and estimate its depth map", sample=True)
    add("detect", cmd_detect, "detect the user in a sensed sample", sample=True)
    add("select", cmd_select, "rank codebook beams from a detection and score them", sample=True)
    add("experiment", cmd_experiment, "run the full batch experiment")
    p = add("export-depth", cmd_export_depth, "turn a saved sensing cube into PGM + CSV depth maps")
    p.add_argument("--cube", required=True, help="cube file written by sense/experiment")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        args.func(args)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        print(f"risiac: error: invalid scene: {where}: {exc.message}", file=sys.stderr)
        return 2
    except (ConfigError, FileNotFoundError, NyquistError, UserNotFound, ValueError, OSError) as exc:
        print(f"risiac: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
