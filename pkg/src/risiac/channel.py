"""Narrowband RIS channels and the received-SNR model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from risiac.array import UpaGeometry, array_response


@dataclass(frozen=True)
class CommConfig:
    symbol_power: float = 1.0
    noise_power: float = 1.0

    def __post_init__(self):
        if self.symbol_power <= 0 or self.noise_power <= 0:
            raise ValueError("symbol_power and noise_power must be positive")


def channel_from_paths(geom: UpaGeometry, paths) -> np.ndarray:
    """Sum of path gains times the RIS response at each path's angles."""
    h = np.zeros(geom.n_elements, dtype=complex)
    if not paths:
        return h
    gains = np.array([p.gain for p in paths], dtype=complex)
    resp = array_response(geom, [p.azimuth for p in paths], [p.zenith for p in paths])
    return gains @ resp


def composite_channel(ap_channel: np.ndarray, ue_channel: np.ndarray) -> np.ndarray:
    ap_channel = np.asarray(ap_channel)
    ue_channel = np.asarray(ue_channel)
    if ap_channel.shape != ue_channel.shape:
        raise ValueError(f"channel length mismatch: {ap_channel.shape} vs {ue_channel.shape}")
    return ue_channel * ap_channel


def received_snr(ap_channel, ue_channel, weights, cfg: CommConfig = CommConfig()) -> float:
    """Linear SNR ``symbol_power / noise_power * |(ue_channel * ap_channel) . weights|^2``."""
    h = composite_channel(ap_channel, ue_channel)
    weights = np.asarray(weights)
    if weights.shape != h.shape:
        raise ValueError("interaction vector length does not match the channel")
    return float(cfg.symbol_power / cfg.noise_power * np.abs(h @ weights) ** 2)


def equal_gain_vector(h: np.ndarray) -> np.ndarray:
    """Phase-only vector ``exp(-j Arg h)`` that co-phases every element."""
    return np.exp(-1j * np.angle(h))


def equal_gain_bound(h: np.ndarray) -> float:
    """Largest ``|h . weights|`` over unit-modulus weights, which is ``sum |h|``."""
    return float(np.sum(np.abs(h)))


def received_symbol(ap_channel, ue_channel, weights, symbol: complex, cfg: CommConfig = CommConfig(),
                    rng=None) -> complex:
    """One noisy received sample ``(ue_channel * ap_channel) . weights * symbol + noise``.

    ``rng`` is anything :func:`numpy.random.default_rng` accepts.
    """
    rng = np.random.default_rng(rng)
    h = composite_channel(ap_channel, ue_channel)
    noise = np.sqrt(cfg.noise_power / 2) * (rng.standard_normal() + 1j * rng.standard_normal())
    return complex(h @ np.asarray(weights) * symbol + noise)
