"""Experiment orchestration and reproducible on-disk outputs.

One experiment captures a user-free background depth map, then for every
(location, antenna offset) pair places the person model, sweeps the
sensing beams, detects the user, designs the interaction vector from the
detected angle and scores the top-k codebook beams on the true channels.

Randomness: the background uses noise substream ``(seed, 0)`` and sample
``(location, offset)`` uses ``(seed, 1, *key)`` where ``key`` is derived
from the coordinates themselves. Records therefore do not depend on the
order of the location list or on the number of worker threads.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from risiac.array import SensingCodebook, SensingGrid, UpaGeometry
from risiac.beam import (BeamRanking, GainReport, design_interaction_vector, evaluate_topk, rank_beams,
                         write_gain_csv)
from risiac.channel import channel_from_paths
from risiac.config import ExperimentConfig
from risiac.detect import (DetectionResult, UserNotFound, background_subtract, clip_negative,
                           detect_user)
from risiac.fmcw import ChirpConfig, SensingCube, save_cube, sweep
from risiac.imaging import DepthMap, estimate_depth_map, read_depth_csv, write_depth_csv, write_pgm
from risiac.scenarios import place_user
from risiac.scene import Scene, UserModel, comm_paths

STREAM_BACKGROUND = 0
STREAM_SAMPLE = 1


def sample_key(location, offset) -> list[int]:
    """Integer words of the float64 coordinates, used as seed entropy."""
    coords = np.array([*location, *offset], dtype="<f8")
    return coords.view("<u4").tolist()


def sample_name(location_id: int, offset_id: int) -> str:
    return f"sample_L{location_id:02d}_O{offset_id:02d}"


@dataclass
class Pipeline:
    """Everything derived once from a config and shared by all samples."""

    cfg: ExperimentConfig
    scene: Scene
    geom: UpaGeometry
    grid: SensingGrid
    beams: SensingCodebook
    chirp: ChirpConfig
    codebooks: dict
    h_ap: np.ndarray

    @classmethod
    def from_config(cls, cfg: ExperimentConfig) -> "Pipeline":
        scene = cfg.load_scene().without_user()
        geom = cfg.geometry(scene)
        grid = cfg.grid()
        return cls(
            cfg=cfg,
            scene=scene,
            geom=geom,
            grid=grid,
            beams=cfg.sensing_codebook(scene, grid),
            chirp=cfg.chirp_config(scene),
            codebooks=cfg.comm_codebooks(scene),
            h_ap=channel_from_paths(geom, comm_paths(scene, scene.ap_position)),
        )

    def depth_map(self, cube: SensingCube) -> DepthMap:
        s = self.cfg.sensing
        return estimate_depth_map(cube, self.chirp, self.grid, self.scene.feed_distance,
                                  self.scene.max_depth, pad_factor=s.pad_factor, threshold=s.threshold)

    def user(self, location_id: int, offset_id: int) -> UserModel:
        users = self.cfg.users
        return place_user(users.locations[location_id], users.antenna_offsets[offset_id], **users.box)

    def sample_seed(self, location_id: int, offset_id: int) -> list[int]:
        users = self.cfg.users
        key = sample_key(users.locations[location_id], users.antenna_offsets[offset_id])
        return [self.cfg.seed, STREAM_SAMPLE, *key]


# ---------------------------------------------------------------------------
# stages


def capture_background(pipe: Pipeline, threads: int = 1) -> tuple[DepthMap, SensingCube]:
    chirp = pipe.chirp if pipe.cfg.sensing.noisy_background else pipe.cfg.chirp_config(pipe.scene, noisy=False)
    cube = sweep(chirp, pipe.scene, pipe.grid, pipe.beams, seed=[pipe.cfg.seed, STREAM_BACKGROUND],
                 threads=threads)
    return pipe.depth_map(cube), cube


def sense_sample(pipe: Pipeline, location_id: int, offset_id: int,
                 threads: int = 1) -> tuple[DepthMap, SensingCube]:
    scene = pipe.scene.with_user(pipe.user(location_id, offset_id))
    cube = sweep(pipe.chirp, scene, pipe.grid, pipe.beams, seed=pipe.sample_seed(location_id, offset_id),
                 threads=threads)
    return pipe.depth_map(cube), cube


def detect_sample(pipe: Pipeline, background: DepthMap, current: DepthMap) -> DetectionResult:
    clipped = clip_negative(background_subtract(background, current))
    return detect_user(clipped, pipe.grid, eps=pipe.cfg.eps, min_pts=pipe.cfg.min_pts)


def select_beams(pipe: Pipeline, location_id: int, offset_id: int,
                 detection: DetectionResult) -> dict[str, tuple[BeamRanking, GainReport]]:
    """Rank every configured codebook and score its top-k on the true channels."""
    user = pipe.user(location_id, offset_id)
    scene = pipe.scene.with_user(user)
    h_ue = channel_from_paths(pipe.geom, comm_paths(scene, user.antenna_position))
    weights = design_interaction_vector(pipe.geom, pipe.scene.ap_angles, (detection.azimuth, detection.zenith))
    out = {}
    for name, codebook in pipe.codebooks.items():
        ranking = rank_beams(weights, codebook)
        out[name] = (ranking, evaluate_topk(pipe.h_ap, h_ue, ranking, codebook, pipe.cfg.k_list))
    return out


# ---------------------------------------------------------------------------
# records


@dataclass
class RunRecord:
    location_id: int
    offset_id: int
    location: tuple
    antenna_offset: tuple
    true_angles: tuple
    status: str  # "detected", "not_found" or "error"
    message: str = ""
    detection: Optional[DetectionResult] = None
    reports: dict = field(default_factory=dict)  # codebook name -> GainReport
    timings: dict = field(default_factory=dict)
    depth: Optional[DepthMap] = None
    cube: Optional[SensingCube] = None

    @property
    def detected(self) -> bool:
        return self.status == "detected"

    def detection_dict(self) -> dict:
        out = {
            "location_id": self.location_id,
            "offset_id": self.offset_id,
            "location": list(self.location),
            "antenna_offset": list(self.antenna_offset),
            "true_azimuth_rad": self.true_angles[0],
            "true_zenith_rad": self.true_angles[1],
            "status": self.status,
        }
        if self.message:
            out["message"] = self.message
        if self.detection is not None:
            out["detection"] = self.detection.to_dict()
            out["detection"]["cluster_size"] = self.detection.cluster_size
        return out


def run_sample(pipe: Pipeline, background: DepthMap, location_id: int, offset_id: int,
               threads: int = 1, keep_cube: bool = False) -> RunRecord:
    users = pipe.cfg.users
    record = RunRecord(
        location_id, offset_id,
        tuple(users.locations[location_id]), tuple(users.antenna_offsets[offset_id]),
        (float("nan"), float("nan")),
        status="error",
    )
    clock = time.perf_counter()
    try:
        user = pipe.user(location_id, offset_id)
        record.true_angles = tuple(float(a) for a in pipe.scene.angles_to(user.antenna_position))
        record.depth, cube = sense_sample(pipe, location_id, offset_id, threads)
        record.cube = cube if keep_cube else None
        record.timings["sense_s"] = time.perf_counter() - clock
        clock = time.perf_counter()
        try:
            record.detection = detect_sample(pipe, background, record.depth)
        except UserNotFound as exc:
            record.status, record.message = "not_found", str(exc)
            return record
        record.timings["detect_s"] = time.perf_counter() - clock
        clock = time.perf_counter()
        record.reports = {name: rep for name, (_, rep) in
                          select_beams(pipe, location_id, offset_id, record.detection).items()}
        record.timings["select_s"] = time.perf_counter() - clock
        record.status = "detected"
    except Exception as exc:  # recorded per sample; the batch keeps going
        record.status, record.message = "error", f"{type(exc).__name__}: {exc}"
    return record


def aggregate(records: list[RunRecord], pipe: Pipeline) -> dict[str, Optional[GainReport]]:
    """Mean linear normalised gain per k over detected samples, per codebook."""
    good = [r for r in records if r.detected]
    out = {}
    for name, codebook in pipe.codebooks.items():
        if not good:
            out[name] = None
            continue
        topk = np.mean([r.reports[name].topk_gain for r in good], axis=0)
        exhaustive = float(np.mean([r.reports[name].exhaustive_gain for r in good]))
        out[name] = GainReport(tuple(pipe.cfg.k_list), topk, exhaustive, len(codebook))
    return out


@dataclass
class ExperimentResult:
    background: DepthMap
    records: list
    aggregate: dict
    output_dir: Path

    @property
    def detection_rate(self) -> float:
        return sum(r.detected for r in self.records) / len(self.records) if self.records else float("nan")


# ---------------------------------------------------------------------------
# writers


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")


def write_depth(depth: DepthMap, stem: Path) -> None:
    stem.parent.mkdir(parents=True, exist_ok=True)
    write_pgm(depth, stem.with_suffix(".pgm"))
    write_depth_csv(depth, stem.with_suffix(".csv"))


def read_depth(stem: Path, grid: SensingGrid, max_depth: float) -> DepthMap:
    path = stem.with_suffix(".csv")
    if not path.is_file():
        raise FileNotFoundError(f"depth map not found: {path}")
    return DepthMap(read_depth_csv(path), grid, max_depth)


def _fmt(value: float) -> str:
    return f"{value:.10g}"


def write_records_csv(records: list[RunRecord], k_list, codebook_names, path: Path) -> None:
    fields = ["location_id", "offset_id", "x", "y", "offset_x", "offset_y", "offset_z", "status",
              "pixel_x", "pixel_y", "azimuth_rad", "zenith_rad", "true_azimuth_rad", "true_zenith_rad",
              "cluster_size"]
    for name in codebook_names:
        fields += [f"{name}_top{k}_gain_db" for k in k_list] + [f"{name}_exhaustive_gain_db"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fields)
        for r in records:
            row = [r.location_id, r.offset_id, *map(_fmt, r.location), *map(_fmt, r.antenna_offset), r.status]
            if r.detection is not None:
                d = r.detection
                row += [d.pixel[0], d.pixel[1], _fmt(d.azimuth), _fmt(d.zenith)]
            else:
                row += ["", "", "", ""]
            row += [_fmt(r.true_angles[0]), _fmt(r.true_angles[1]),
                    r.detection.cluster_size if r.detection is not None else ""]
            for name in codebook_names:
                rep = r.reports.get(name)
                if rep is None:
                    row += [""] * (len(k_list) + 1)
                else:
                    row += [_fmt(g) for g in rep.topk_gain_db] + [_fmt(rep.exhaustive_gain_db)]
            writer.writerow(row)


def write_outputs(result: ExperimentResult, pipe: Pipeline, timings: Optional[dict] = None) -> None:
    """Write every artifact; all but ``timings.json`` are functions of (config, seed)."""
    out = result.output_dir
    out.mkdir(parents=True, exist_ok=True)
    write_depth(result.background, out / "background")
    names = list(pipe.codebooks)
    for r in result.records:
        stem = sample_name(r.location_id, r.offset_id)
        if r.depth is not None:
            write_depth(r.depth, out / "depth" / stem)
        if r.cube is not None:
            (out / "cubes").mkdir(exist_ok=True)
            save_cube(r.cube, out / "cubes" / f"{stem}.bin", pipe.chirp,
                      {"location_id": r.location_id, "offset_id": r.offset_id})
    write_records_csv(result.records, pipe.cfg.k_list, names, out / "records.csv")
    _dump_json([r.detection_dict() for r in result.records], out / "detections.json")
    summary = {
        "n_samples": len(result.records),
        "n_detected": sum(r.detected for r in result.records),
        "n_errors": sum(r.status == "error" for r in result.records),
        "seed": pipe.cfg.seed,
        "codebooks": {},
    }
    for name, rep in result.aggregate.items():
        write_gain_csv(rep, out / f"gains_{name}.csv")
        summary["codebooks"][name] = {
            "size": len(pipe.codebooks[name]),
            "mean_topk_gain_db": dict(zip(map(str, rep.k_list), rep.topk_gain_db.tolist())) if rep else {},
            "mean_exhaustive_gain_db": rep.exhaustive_gain_db if rep else None,
        }
    _dump_json(summary, out / "summary.json")
    samples = [{"location_id": r.location_id, "offset_id": r.offset_id, **r.timings} for r in result.records]
    _dump_json({**(timings or {}), "samples": samples}, out / "timings.json")


# ---------------------------------------------------------------------------
# entry points


def run_background(cfg: ExperimentConfig, threads: int = 1, write: bool = True,
                   pipe: Optional[Pipeline] = None) -> DepthMap:
    """Sweep the user-free scene and persist ``background.{pgm,csv}``."""
    pipe = pipe or Pipeline.from_config(cfg)
    depth, cube = capture_background(pipe, threads)
    if write:
        write_depth(depth, cfg.output_dir / "background")
        if cfg.save_cubes:
            (cfg.output_dir / "cubes").mkdir(parents=True, exist_ok=True)
            save_cube(cube, cfg.output_dir / "cubes" / "background.bin", pipe.chirp)
    return depth


def run_experiment(cfg: ExperimentConfig, threads: int = 1, write: bool = True,
                   pipe: Optional[Pipeline] = None) -> ExperimentResult:
    """Background capture followed by every (location, offset) sample.

    ``threads > 1`` runs samples concurrently; outputs are identical to a
    serial run.
    """
    pipe = pipe or Pipeline.from_config(cfg)
    start = time.perf_counter()
    background, _ = capture_background(pipe, threads)
    background_s = time.perf_counter() - start
    samples = cfg.users.samples

    def one(pair):
        return run_sample(pipe, background, *pair, keep_cube=cfg.save_cubes)

    if threads > 1 and len(samples) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(one, samples))
    else:
        records = [one(pair) for pair in samples]
    result = ExperimentResult(background, records, aggregate(records, pipe), cfg.output_dir)
    if write:
        write_outputs(result, pipe, {"background_s": background_s,
                                     "total_s": time.perf_counter() - start})
    return result
