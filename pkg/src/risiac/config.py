"""Experiment configuration: JSON schema, loading and derived objects.

A config file looks like::

    {
      "scene": "desk_scene.json",
      "ris": {"n_h": 16, "n_v": 16},
      "chirp": {"bandwidth": 1e9, "m_sample": 256},
      "sensing": {"m_h": 64, "m_v": 64, "fov_az_deg": 80, "fov_ze_deg": 60, "snr_db": 20},
      "codebooks": [{"name": "osf4", "osf_az": 4, "osf_ze": 4}],
      "dbscan": {"eps": 2.0, "min_pts": 5},
      "users": {"locations": [[7.3, 5.5]], "antenna_offsets": [[0.1, -0.15, 1.25]]},
      "k_list": [1, 5, 25],
      "seed": 7,
      "output_dir": "out/desk"
    }

Relative ``scene`` and ``output_dir`` paths resolve against the config
file's directory. Only ``scene`` is required; everything else has the
desk-scale defaults below.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from risiac.array import BeamsteeringCodebook, SensingCodebook, SensingGrid, UpaGeometry, sensing_grid
from risiac.fmcw import ChirpConfig
from risiac.scene import Scene, load_scene


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending key."""


_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_POS_INT = {"type": "integer", "minimum": 1}
_VEC3 = {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "ExperimentConfig",
    "type": "object",
    "required": ["scene"],
    "additionalProperties": False,
    "properties": {
        "scene": {"type": "string", "minLength": 1},
        "ris": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"n_h": _POS_INT, "n_v": _POS_INT},
        },
        "chirp": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "f0": _POS, "bandwidth": _POS, "t_active": _POS, "slope": _POS, "t_pri": _POS,
                "m_chirp": _POS_INT, "m_sample": _POS_INT, "f_s": _POS,
                "tx_power": {"type": "number", "minimum": 0},
                "noise_power": {"type": "number", "minimum": 0},
            },
        },
        "sensing": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "m_h": _POS_INT, "m_v": _POS_INT,
                "fov_az_deg": {"type": "number", "exclusiveMinimum": 0, "maximum": 180},
                "fov_ze_deg": {"type": "number", "exclusiveMinimum": 0, "maximum": 180},
                "center_deg": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
                "snr_db": {"type": ["number", "null"]},
                "reference_range": _POS,
                "pad_factor": _POS_INT,
                "threshold": _POS,
                "noisy_background": {"type": "boolean"},
            },
        },
        "codebooks": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["name", "osf_az", "osf_ze"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string", "pattern": "^[A-Za-z0-9_-]+$"},
                    "osf_az": _POS_INT,
                    "osf_ze": _POS_INT,
                },
            },
        },
        "dbscan": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"eps": _POS, "min_pts": _POS_INT},
        },
        "users": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "locations": {"type": "array", "items": {"type": "array", "items": _NUM,
                                                         "minItems": 2, "maxItems": 2}},
                "antenna_offsets": {"type": "array", "items": _VEC3},
                "height": _POS, "width": _POS, "depth": _POS,
                "body_reflectivity": {"type": "number", "minimum": 0, "maximum": 1},
            },
        },
        "k_list": {"type": "array", "items": _POS_INT, "minItems": 1},
        "seed": {"type": "integer", "minimum": 0},
        "output_dir": {"type": "string", "minLength": 1},
        "save_cubes": {"type": "boolean"},
    },
}


@dataclass(frozen=True)
class CodebookSpec:
    name: str
    osf_az: int
    osf_ze: int


@dataclass(frozen=True)
class SensingSpec:
    m_h: int = 64
    m_v: int = 64
    fov_az_deg: float = 80.0
    fov_ze_deg: float = 60.0
    center_deg: tuple[float, float] = (0.0, 90.0)
    snr_db: Optional[float] = 20.0  # None: noise-free (unless chirp.noise_power says otherwise)
    reference_range: float = 5.0
    pad_factor: int = 8
    threshold: float = 4.0
    noisy_background: bool = True


@dataclass(frozen=True)
class UserSpec:
    locations: tuple = ()
    antenna_offsets: tuple = ((0.0, 0.0, 1.0),)
    height: float = 1.8
    width: float = 0.5
    depth: float = 0.3
    body_reflectivity: float = 0.5

    @property
    def samples(self) -> list[tuple[int, int]]:
        """``(location id, offset id)`` pairs, location-major."""
        return [(li, oi) for li in range(len(self.locations)) for oi in range(len(self.antenna_offsets))]

    @property
    def box(self) -> dict:
        return {"height": self.height, "width": self.width, "depth": self.depth,
                "body_reflectivity": self.body_reflectivity}


@dataclass(frozen=True)
class ExperimentConfig:
    scene_path: Path
    n_h: int = 16
    n_v: int = 16
    chirp: dict = field(default_factory=dict)
    sensing: SensingSpec = SensingSpec()
    codebooks: tuple = (CodebookSpec("osf4", 4, 4), CodebookSpec("osf1", 1, 1))
    eps: float = 2.0
    min_pts: int = 5
    users: UserSpec = UserSpec()
    k_list: tuple = (1, 5, 10, 25)
    seed: int = 0
    output_dir: Path = Path("out")
    save_cubes: bool = False

    def __post_init__(self):
        if not self.scene_path.is_file():
            raise FileNotFoundError(f"scene file not found: {self.scene_path}")
        names = [c.name for c in self.codebooks]
        if len(set(names)) != len(names):
            raise ConfigError(f"codebooks: duplicate names in {names}")

    # -- derived objects ---------------------------------------------------

    def load_scene(self) -> Scene:
        return load_scene(self.scene_path)

    def geometry(self, scene: Scene) -> UpaGeometry:
        return UpaGeometry(self.n_h, self.n_v, scene.wavelength)

    def grid(self) -> SensingGrid:
        s = self.sensing
        return sensing_grid(s.m_h, s.m_v, np.deg2rad(s.fov_az_deg), np.deg2rad(s.fov_ze_deg),
                            center=tuple(np.deg2rad(s.center_deg)))

    def sensing_codebook(self, scene: Scene, grid: SensingGrid) -> SensingCodebook:
        return SensingCodebook(self.geometry(scene), scene.feed_local, grid)

    def comm_codebooks(self, scene: Scene) -> dict[str, BeamsteeringCodebook]:
        geom = self.geometry(scene)
        return {c.name: BeamsteeringCodebook(geom, c.osf_az, c.osf_ze) for c in self.codebooks}

    def chirp_config(self, scene: Scene, noisy: bool = True) -> ChirpConfig:
        """Chirp parameters; ``sensing.snr_db`` overrides ``chirp.noise_power``.

        The SNR is that of a unit-reflectivity point at ``reference_range``
        meters from the RIS, seen through a perfectly matched beam.
        """
        cfg = ChirpConfig(**self.chirp)
        snr = self.sensing.snr_db
        if not noisy:
            return replace(cfg, noise_power=0.0)
        if snr is None:
            return cfg
        return replace(cfg, noise_power=snr_noise_power(cfg, scene, snr, self.sensing.reference_range))

    def with_overrides(self, seed: Optional[int] = None, output_dir=None) -> "ExperimentConfig":
        out = self
        if seed is not None:
            out = replace(out, seed=int(seed))
        if output_dir is not None:
            out = replace(out, output_dir=Path(output_dir))
        return out


def snr_noise_power(cfg: ChirpConfig, scene: Scene, snr_db: float, reference_range: float) -> float:
    amplitude = scene.reference_amplitude / (scene.feed_distance * reference_range) ** 2
    return cfg.tx_power * amplitude**2 / 10.0 ** (snr_db / 10.0)


def _format_error(err: jsonschema.ValidationError) -> str:
    where = "/".join(str(p) for p in err.absolute_path) or "<root>"
    if err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        return f"{where}: unknown key(s) {', '.join(map(repr, extra))}"
    return f"{where}: {err.message}"


def validate_config(data: dict) -> None:
    """Raise :class:`ConfigError` naming the first offending key."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        raise ConfigError(f"invalid config: {_format_error(errors[0])}")


def config_from_dict(data: dict, base_dir=".") -> ExperimentConfig:
    validate_config(data)
    base = Path(base_dir)
    ris = data.get("ris", {})
    dbscan = data.get("dbscan", {})
    sensing = dict(data.get("sensing", {}))
    if "center_deg" in sensing:
        sensing["center_deg"] = tuple(sensing["center_deg"])
    users = dict(data.get("users", {}))
    for key in ("locations", "antenna_offsets"):
        if key in users:
            users[key] = tuple(tuple(float(v) for v in item) for item in users[key])
    kwargs = {}
    if "codebooks" in data:
        kwargs["codebooks"] = tuple(CodebookSpec(**c) for c in data["codebooks"])
    if "k_list" in data:
        kwargs["k_list"] = tuple(data["k_list"])
    if "output_dir" in data:
        kwargs["output_dir"] = base / data["output_dir"]
    return ExperimentConfig(
        scene_path=base / data["scene"],
        n_h=ris.get("n_h", 16),
        n_v=ris.get("n_v", 16),
        chirp=dict(data.get("chirp", {})),
        sensing=SensingSpec(**sensing),
        eps=dbscan.get("eps", 2.0),
        min_pts=dbscan.get("min_pts", 5),
        users=UserSpec(**users),
        seed=data.get("seed", 0),
        save_cubes=data.get("save_cubes", False),
        **kwargs,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise FileNotFoundError(f"config file not found: {path}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return config_from_dict(data, path.parent)
