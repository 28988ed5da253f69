"""FMCW chirp parameters and dechirped baseband synthesis.

Each sensing beam transmits and receives one chirp. After dechirping, a
path with round-trip delay ``tau`` becomes a complex tone at the beat
frequency ``slope * tau``.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path as FsPath
from typing import Optional, Sequence, Union

import numpy as np

from risiac.constants import SPEED_OF_LIGHT
from risiac.scene import backscatter_paths_batch


class NyquistError(ValueError):
    """A path's beat frequency is at or above half the ADC rate."""

    def __init__(self, index: int, total_distance: float, beat: float, limit: float):
        self.index = index
        self.total_distance = total_distance
        super().__init__(
            f"path {index} (total distance {total_distance:.3f} m) has beat frequency "
            f"{beat:.4g} Hz >= Nyquist limit {limit:.4g} Hz"
        )


@dataclass(frozen=True)
class ChirpConfig:
    f0: float = 60e9
    bandwidth: float = 1e9
    t_active: float = 10e-6
    slope: Optional[float] = None  # Hz/s, derived from bandwidth / t_active when omitted
    t_pri: float = 12e-6
    m_chirp: int = 1
    m_sample: int = 256
    f_s: float = 25.6e6
    tx_power: float = 1.0
    noise_power: float = 0.0

    def __post_init__(self):
        if self.slope is None:
            object.__setattr__(self, "slope", self.bandwidth / self.t_active)
        if abs(self.slope * self.t_active - self.bandwidth) > 1e-6 * self.bandwidth:
            raise ValueError("slope * t_active must equal bandwidth")
        if self.m_sample / self.f_s > self.t_active * (1 + 1e-12):
            raise ValueError("m_sample / f_s exceeds the active chirp duration")
        if self.t_pri < self.t_active:
            raise ValueError("t_pri must be >= t_active")
        if self.m_sample < 1 or self.m_chirp < 1:
            raise ValueError("sample and chirp counts must be positive")
        if self.tx_power < 0 or self.noise_power < 0:
            raise ValueError("powers must be non-negative")

    @property
    def fast_time(self) -> np.ndarray:
        return np.arange(self.m_sample) / self.f_s

    @property
    def max_total_distance(self) -> float:
        """Largest round-trip distance whose beat frequency stays below Nyquist."""
        return SPEED_OF_LIGHT * self.f_s / (2.0 * self.slope)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class SensingCube:
    """Dechirped samples, shape ``(m_sample, M_s)``; column ``m`` is beam ``m``."""

    samples: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.samples.shape


def _cycles_to_phasor(cycles: np.ndarray) -> np.ndarray:
    return np.exp(2j * np.pi * np.mod(cycles, 1.0))


def _check_nyquist(cfg: ChirpConfig, distances: np.ndarray) -> None:
    beat = cfg.slope * distances / SPEED_OF_LIGHT
    bad = np.nonzero(beat >= cfg.f_s / 2)[0]
    if bad.size:
        i = int(bad[0])
        raise NyquistError(i, float(distances[i]), float(beat[i]), cfg.f_s / 2)


def _tones(cfg: ChirpConfig, distances: np.ndarray, gains: np.ndarray) -> np.ndarray:
    """Noise-free signal terms, one row per path: ``(P, m_sample)``."""
    tau = distances[:, None] / SPEED_OF_LIGHT
    t = cfg.fast_time[None, :]
    cycles = cfg.f0 * tau + cfg.slope * t * tau - 0.5 * cfg.slope * tau**2
    amp = np.sqrt(cfg.tx_power) * np.abs(gains)
    # magnitude and conjugated phase of the complex gain
    return (amp * np.exp(-1j * np.angle(gains)))[:, None] * _cycles_to_phasor(cycles)


def _noise_rotation(cfg: ChirpConfig) -> np.ndarray:
    t = cfg.fast_time
    return _cycles_to_phasor(cfg.f0 * t + 0.5 * cfg.slope * t**2)


def _noise(cfg: ChirpConfig, rng, rotation: Optional[np.ndarray] = None) -> np.ndarray:
    rng = np.random.default_rng(rng)
    w = rng.standard_normal((2, cfg.m_sample))
    w = (w[0] + 1j * w[1]) * np.sqrt(cfg.noise_power / 2)
    return w * (_noise_rotation(cfg) if rotation is None else rotation)


def beat_samples(cfg: ChirpConfig, paths: Sequence, beam_gains: Optional[Sequence[complex]] = None,
                 rng=None) -> np.ndarray:
    """Dechirped samples of one chirp.

    A path with complex gain ``g`` seen through beam gain ``b`` and delay
    ``tau`` contributes

        sqrt(tx_power) |g b| exp(-j angle(g b))
            * exp(j 2 pi (f0 tau + slope t tau - slope tau^2 / 2))

    at fast time ``t``. Noise is circular Gaussian with variance
    ``noise_power``, rotated by ``exp(j 2 pi (f0 t + slope t^2 / 2))``.

    ``rng`` is anything :func:`numpy.random.default_rng` accepts and is
    only consumed when ``noise_power > 0``.
    """
    if beam_gains is None:
        beam_gains = [1.0] * len(paths)
    if len(beam_gains) != len(paths):
        raise ValueError("need one beam gain per path")
    z = np.zeros(cfg.m_sample, dtype=complex)
    if len(paths):
        distances = np.array([p.total_distance for p in paths], dtype=float)
        _check_nyquist(cfg, distances)
        gains = np.array([complex(p.gain) for p in paths]) * np.asarray(beam_gains, dtype=complex)
        z += _tones(cfg, distances, gains).sum(axis=0)
    if cfg.noise_power > 0:
        z += _noise(cfg, rng)
    return z


def column_seed(seed: Union[int, Sequence[int]], m: int) -> list[int]:
    """Entropy for the noise substream of column ``m``."""
    key = [int(seed)] if np.isscalar(seed) else [int(s) for s in seed]
    return key + [int(m)]


_TONE_CHUNK = 4096


def sweep(cfg: ChirpConfig, scene, grid, beams, seed: Union[int, Sequence[int]] = 0,
          threads: int = 1) -> SensingCube:
    """Sweep every sensing beam over the scene and stack the columns.

    Column ``m`` equals ``beat_samples`` of the backscatter paths of grid
    direction ``m``, each weighted by beam ``m``'s two-way gain toward the
    path. ``beams`` needs ``len()`` equal to the grid size and a
    ``two_way_gains`` method (see :class:`risiac.array.SensingCodebook`).
    Column noise comes from the substream ``(seed..., m)``, so the result
    does not depend on ``threads``.
    """
    if len(beams) != len(grid):
        raise ValueError(f"{len(beams)} beams for a grid of {len(grid)} directions")
    pathsets = backscatter_paths_batch(scene, grid.azimuth, grid.zenith)
    cols, dist, gain, az, ze = [], [], [], [], []
    for m, paths in enumerate(pathsets):
        for p in paths:
            cols.append(m)
            dist.append(p.total_distance)
            gain.append(p.gain)
            az.append(p.azimuth)
            ze.append(p.zenith)
    cols = np.array(cols, dtype=int)
    dist = np.array(dist, dtype=float)
    _check_nyquist(cfg, dist)
    gain = np.array(gain, dtype=complex) * beams.two_way_gains(cols, az, ze)

    samples = np.zeros((len(grid), cfg.m_sample), dtype=complex)  # column-major while filling
    for start in range(0, cols.size, _TONE_CHUNK):
        sl = slice(start, start + _TONE_CHUNK)
        np.add.at(samples, cols[sl], _tones(cfg, dist[sl], gain[sl]))

    if cfg.noise_power > 0:
        rotation = _noise_rotation(cfg)

        def noise(m: int) -> np.ndarray:
            return _noise(cfg, column_seed(seed, m), rotation)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                draws = list(pool.map(noise, range(len(grid))))
        else:
            draws = [noise(m) for m in range(len(grid))]
        samples += np.stack(draws)
    return SensingCube(np.ascontiguousarray(samples.T))


def save_cube(cube: SensingCube, path, cfg: ChirpConfig, extra: Optional[dict] = None) -> None:
    """Write ``path`` (little-endian float64 re/im, row-major) plus ``path.json``."""
    path = FsPath(path)
    data = np.ascontiguousarray(cube.samples, dtype="<c16")
    path.write_bytes(data.view("<f8").tobytes())
    meta = {"shape": list(cube.shape), "dtype": "complex128-le-interleaved", "chirp": cfg.to_dict()}
    if extra:
        meta.update(extra)
    FsPath(str(path) + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def load_cube(path) -> tuple[SensingCube, ChirpConfig, dict]:
    path = FsPath(path)
    meta_path = FsPath(str(path) + ".json")
    if not path.exists():
        raise FileNotFoundError(f"cube file not found: {path}")
    if not meta_path.exists():
        raise FileNotFoundError(f"cube sidecar not found: {meta_path}")
    meta = json.loads(meta_path.read_text())
    rows, cols = meta["shape"]
    flat = np.frombuffer(path.read_bytes(), dtype="<f8")
    if flat.size != 2 * rows * cols:
        raise ValueError(f"{path}: expected {2 * rows * cols} floats, found {flat.size}")
    samples = flat.view("<c16").reshape(rows, cols).astype(complex)
    return SensingCube(samples), ChirpConfig(**meta["chirp"]), meta
