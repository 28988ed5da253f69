"""Depth-map estimation from a sensing cube, and depth-map file formats."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path as FsPath

import numpy as np

from risiac.array import SensingGrid
from risiac.constants import SPEED_OF_LIGHT
from risiac.fmcw import ChirpConfig, SensingCube

_CHUNK = 1024  # columns per FFT batch


@dataclass(frozen=True, eq=False)
class DepthMap:
    """``values[y, x]`` in meters for pixel ``(x, y)``, i.e. beam ``x + m_h*y``.

    Estimated maps lie in ``[0, max_depth]``; background-subtracted maps
    may be signed.
    """

    values: np.ndarray
    grid: SensingGrid
    max_depth: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.m_v, self.grid.m_h):
            raise ValueError(f"depth map shape {values.shape} does not match grid "
                             f"{self.grid.m_v}x{self.grid.m_h}")
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def with_values(self, values: np.ndarray) -> "DepthMap":
        return DepthMap(values, self.grid, self.max_depth)


def range_bin(cfg: ChirpConfig, pad_factor: int) -> float:
    """Depth spacing of one zero-padded DFT bin (one-way meters)."""
    bin_hz = cfg.f_s / (cfg.m_sample * pad_factor)
    return SPEED_OF_LIGHT * bin_hz / (2.0 * cfg.slope)


def estimate_depth_map(cube: SensingCube, cfg: ChirpConfig, grid: SensingGrid,
                       feed_distance: float, max_depth: float,
                       pad_factor: int = 8, threshold: float = 4.0) -> DepthMap:
    """Per-beam range estimate arranged as an ``m_v x m_h`` image.

    Each column is zero-padded by ``pad_factor`` and transformed; the
    strongest non-negative-frequency bin gives the beat frequency, hence
    the round-trip distance ``R``, and the depth is ``R/2 - feed_distance``
    (one-way RIS -> target). Columns whose peak does not exceed
    ``threshold`` times the median spectral magnitude read ``max_depth``.
    """
    m_sample, n_cols = cube.shape
    if m_sample != cfg.m_sample:
        raise ValueError(f"cube has {m_sample} samples per chirp, config says {cfg.m_sample}")
    if n_cols != len(grid):
        raise ValueError(f"cube has {n_cols} columns for a grid of {len(grid)} beams")
    if pad_factor < 1:
        raise ValueError("pad_factor must be >= 1")
    n_fft = m_sample * pad_factor
    n_pos = n_fft // 2
    bin_hz = cfg.f_s / n_fft

    depth = np.empty(n_cols)
    for start in range(0, n_cols, _CHUNK):
        block = np.ascontiguousarray(cube.samples[:, start:start + _CHUNK].T)  # one beam per row
        mag = np.abs(np.fft.fft(block, n=n_fft, axis=1))
        peak_bin = np.argmax(mag[:, :n_pos], axis=1)
        peak = mag[np.arange(block.shape[0]), peak_bin]
        floor = np.median(mag, axis=1)
        total = SPEED_OF_LIGHT * (peak_bin * bin_hz) / cfg.slope
        est = np.clip(total / 2.0 - feed_distance, 0.0, max_depth)
        depth[start:start + block.shape[0]] = np.where(peak > threshold * floor, est, max_depth)
    return DepthMap(depth.reshape(grid.m_v, grid.m_h), grid, max_depth)


# ---------------------------------------------------------------------------
# export


def write_pgm(depth: DepthMap, path) -> None:
    """16-bit binary PGM, depth mapped linearly from [0, max_depth] to [0, 65535]."""
    scaled = np.clip(depth.values / depth.max_depth, 0.0, 1.0) * 65535.0
    pixels = np.rint(scaled).astype(">u2")
    header = f"P5\n{depth.grid.m_h} {depth.grid.m_v}\n65535\n".encode("ascii")
    FsPath(path).write_bytes(header + pixels.tobytes())


def read_pgm(path, max_depth: float) -> np.ndarray:
    """Inverse of :func:`write_pgm`; returns depth values in meters."""
    raw = FsPath(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            pos = raw.index(b"\n", pos) + 1
            continue
        end = pos
        while not raw[end:end + 1].isspace():
            end += 1
        tokens.append(raw[pos:end].decode("ascii"))
        pos = end
    magic, width, height, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic != "P5" or maxval != 65535:
        raise ValueError(f"{path}: expected a 16-bit P5 PGM")
    pixels = np.frombuffer(raw[pos + 1:], dtype=">u2", count=width * height)
    return pixels.reshape(height, width).astype(float) / 65535.0 * max_depth


def write_depth_csv(depth: DepthMap, path) -> None:
    """Row-major CSV of depths in meters (one image row per line)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in depth.values:
            writer.writerow([repr(float(v)) for v in row])


def read_depth_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        return np.array([[float(v) for v in row] for row in csv.reader(fh)])
