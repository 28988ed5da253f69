"""Uniform planar array geometry, response vectors and RIS codebooks.

Elements lie on the RIS local y-z plane with boresight +x. Element ``n``
has horizontal index ``n % n_h`` and vertical index ``n // n_h``
(row-major, horizontal fastest) and sits at ``(0, ih*d, iv*d)`` relative
to element 0. The far-field response is ``exp(+j k <p_n, u>)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from risiac.constants import DEFAULT_CARRIER, SPEED_OF_LIGHT
from risiac.scene import direction_from_angles


@dataclass(frozen=True)
class UpaGeometry:
    n_h: int
    n_v: int
    wavelength: float = SPEED_OF_LIGHT / DEFAULT_CARRIER
    spacing: Optional[float] = None  # defaults to half a wavelength

    def __post_init__(self):
        if self.n_h < 1 or self.n_v < 1:
            raise ValueError("array dimensions must be positive")
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")
        if self.spacing is None:
            object.__setattr__(self, "spacing", self.wavelength / 2)
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")

    @property
    def n_elements(self) -> int:
        return self.n_h * self.n_v

    @property
    def wavenumber(self) -> float:
        return 2.0 * np.pi / self.wavelength

    @cached_property
    def element_indices(self) -> tuple[np.ndarray, np.ndarray]:
        n = np.arange(self.n_elements)
        return n % self.n_h, n // self.n_h

    @cached_property
    def element_positions(self) -> np.ndarray:
        """(N, 3) local positions with element 0 at the origin."""
        ih, iv = self.element_indices
        return np.stack([np.zeros(self.n_elements), ih * self.spacing, iv * self.spacing], axis=1)

    @cached_property
    def centered_positions(self) -> np.ndarray:
        """(N, 3) local positions relative to the aperture centre."""
        pos = self.element_positions
        return pos - pos.mean(axis=0)


def response_from_cosines(geom: UpaGeometry, u_h, u_v) -> np.ndarray:
    """Array response for horizontal/vertical direction cosines.

    ``u_h = sin(ze) sin(az)`` and ``u_v = cos(ze)``. Broadcasts over the
    leading shape of the inputs; the element axis is last.
    """
    u_h = np.asarray(u_h, dtype=float)[..., None]
    u_v = np.asarray(u_v, dtype=float)[..., None]
    pos = geom.element_positions
    return np.exp(1j * geom.wavenumber * (u_h * pos[:, 1] + u_v * pos[:, 2]))


def array_response(geom: UpaGeometry, azimuth, zenith) -> np.ndarray:
    """Far-field response vector(s) a(azimuth, zenith).

    Scalar angles give a length-N vector; arrays of angles give a stack
    with the element axis last.
    """
    azimuth = np.asarray(azimuth, dtype=float)
    zenith = np.asarray(zenith, dtype=float)
    if not (np.all(np.isfinite(azimuth)) and np.all(np.isfinite(zenith))):
        raise ValueError("angles must be finite")
    u = direction_from_angles(azimuth, zenith)
    return response_from_cosines(geom, u[..., 1], u[..., 2])


def is_unit_modulus(vec, tol: float = 1e-12) -> bool:
    return bool(np.all(np.abs(np.abs(vec) - 1.0) <= tol))


# ---------------------------------------------------------------------------
# sensing grid and beams


@dataclass(frozen=True, eq=False)
class SensingGrid:
    """Rectangular grid of reflected directions, pixel ``(x, y)`` -> ``x + m_h*y``.

    Azimuth grows with ``x``, zenith grows with ``y`` (row 0 looks highest).
    """

    azimuth: np.ndarray
    zenith: np.ndarray
    m_h: int
    m_v: int

    def __len__(self) -> int:
        return self.m_h * self.m_v

    @property
    def directions(self) -> list[tuple[float, float]]:
        return list(zip(self.azimuth.tolist(), self.zenith.tolist()))

    def flatten(self, x: int, y: int) -> int:
        if not (0 <= x < self.m_h and 0 <= y < self.m_v):
            raise IndexError(f"pixel ({x}, {y}) outside {self.m_h}x{self.m_v} grid")
        return x + self.m_h * y

    def unflatten(self, m: int) -> tuple[int, int]:
        if not 0 <= m < len(self):
            raise IndexError(f"flat index {m} outside grid of {len(self)}")
        return m % self.m_h, m // self.m_h

    def direction(self, m: int) -> tuple[float, float]:
        return float(self.azimuth[m]), float(self.zenith[m])


def sensing_grid(m_h: int, m_v: int, fov_az: float, fov_ze: float,
                 center: tuple[float, float] = (0.0, np.pi / 2)) -> SensingGrid:
    """Uniform angular grid of ``m_h x m_v`` beam directions.

    Directions are cell centres of the field of view ``fov_az x fov_ze``
    (radians) around ``center``. A 1x1 grid gives the centre itself.
    """
    if m_h < 1 or m_v < 1:
        raise ValueError("grid dimensions must be >= 1")
    if not (fov_az > 0 and fov_ze > 0):
        raise ValueError("field of view must be non-empty")
    az0, ze0 = center
    az_axis = az0 - fov_az / 2 + (np.arange(m_h) + 0.5) * fov_az / m_h
    ze_axis = ze0 - fov_ze / 2 + (np.arange(m_v) + 0.5) * fov_ze / m_v
    if ze_axis[0] < 0 or ze_axis[-1] > np.pi:
        raise ValueError("zenith field of view exceeds [0, pi]")
    az, ze = np.meshgrid(az_axis, ze_axis)  # (m_v, m_h), row-major flattening is x + m_h*y
    return SensingGrid(az.ravel(), ze.ravel(), m_h, m_v)


def feed_channel(geom: UpaGeometry, feed_local) -> np.ndarray:
    """Spherical-wave channel from the feed to each element.

    Phases are referenced to the feed-to-centre distance, so a feed far
    out on boresight gives the all-ones vector.
    """
    feed_local = np.asarray(feed_local, dtype=float)
    dist = np.linalg.norm(feed_local[None, :] - geom.centered_positions, axis=1)
    return np.exp(-1j * geom.wavenumber * (dist - np.linalg.norm(feed_local)))


def sensing_beam(geom: UpaGeometry, feed_position, direction: tuple[float, float]) -> np.ndarray:
    """Interaction vector that focuses the feed's spherical wave into ``direction``.

    ``feed_position`` is in the RIS local frame relative to the aperture
    centre. The beam is the conjugate of the feed channel times the
    steering vector, so the feed -> RIS -> direction cascade adds up in
    phase on every element.
    """
    az, ze = direction
    return np.conj(feed_channel(geom, feed_position) * array_response(geom, az, ze))


class SensingCodebook:
    """Lazily evaluated sensing beams, one per grid direction."""

    def __init__(self, geom: UpaGeometry, feed_position, grid: SensingGrid):
        self.geom = geom
        self.grid = grid
        self.feed_position = np.asarray(feed_position, dtype=float)
        self._feed = feed_channel(geom, self.feed_position)

    def __len__(self) -> int:
        return len(self.grid)

    def __getitem__(self, m: int) -> np.ndarray:
        az, ze = self.grid.direction(m)
        return np.conj(self._feed * array_response(self.geom, az, ze))

    def two_way_gain(self, m: int, azimuth: float, zenith: float) -> complex:
        """Normalised feed->RIS->direction gain of beam ``m``, squared for the round trip.

        Equals 1 along the beam's own direction.
        """
        one_way = (self._feed * self[m]) @ array_response(self.geom, azimuth, zenith)
        one_way /= self.geom.n_elements
        return complex(one_way * one_way)

    def two_way_gains(self, beam_idx, azimuth, zenith, chunk: int = 2048) -> np.ndarray:
        """Vectorised :meth:`two_way_gain` over matching index/angle arrays."""
        beam_idx = np.asarray(beam_idx, dtype=int)
        azimuth = np.asarray(azimuth, dtype=float)
        zenith = np.asarray(zenith, dtype=float)
        out = np.empty(beam_idx.size, dtype=complex)
        for start in range(0, beam_idx.size, chunk):
            sl = slice(start, start + chunk)
            rows = beam_idx[sl]
            steer = array_response(self.geom, self.grid.azimuth[rows], self.grid.zenith[rows])
            weights = np.conj(self._feed[None, :] * steer)
            toward = array_response(self.geom, azimuth[sl], zenith[sl])
            one_way = np.sum(self._feed[None, :] * weights * toward, axis=1) / self.geom.n_elements
            out[sl] = one_way * one_way
        return out

    def matrix(self) -> np.ndarray:
        return np.stack([self[m] for m in range(len(self))], axis=1)


# ---------------------------------------------------------------------------
# communication codebooks


class Codebook:
    """Dense codebook; column ``m`` of ``beams`` is beam ``m``."""

    def __init__(self, beams: np.ndarray, directions=None):
        beams = np.asarray(beams, dtype=complex)
        if beams.ndim != 2:
            raise ValueError("beams must be an N x M matrix")
        self._beams = beams
        self.directions = directions

    @property
    def beams(self) -> np.ndarray:
        return self._beams

    @property
    def n_elements(self) -> int:
        return self._beams.shape[0]

    def __len__(self) -> int:
        return self._beams.shape[1]

    def beam(self, m: int) -> np.ndarray:
        return self.beams[:, m]

    def correlate(self, x: np.ndarray) -> np.ndarray:
        """``x . beam`` for every beam (no conjugation)."""
        return np.asarray(x) @ self.beams


class BeamsteeringCodebook(Codebook):
    """Kronecker beamsteering codebook on a uniform direction-cosine grid.

    Horizontal cosines are ``-1 + 2 i / M_h`` for ``i < M_h = osf_az * n_h``
    (same vertically), beam ``m = i_h + M_h * i_v``. Beams are the
    conjugated array responses. Grid points outside the unit disc have no
    physical direction; their angles are NaN.
    """

    def __init__(self, geom: UpaGeometry, osf_az: int = 1, osf_ze: int = 1):
        if osf_az < 1 or osf_ze < 1:
            raise ValueError("oversampling factors must be >= 1")
        self.geom = geom
        self.osf_az = osf_az
        self.osf_ze = osf_ze
        self.m_h = osf_az * geom.n_h
        self.m_v = osf_ze * geom.n_v
        self.cos_h = -1.0 + 2.0 * np.arange(self.m_h) / self.m_h
        self.cos_v = -1.0 + 2.0 * np.arange(self.m_v) / self.m_v
        k_d = geom.wavenumber * geom.spacing
        # separable factors: element (ih, iv) of beam (i_h, i_v) is fh[ih, i_h] * fv[iv, i_v]
        self._fh = np.exp(-1j * k_d * np.outer(np.arange(geom.n_h), self.cos_h))
        self._fv = np.exp(-1j * k_d * np.outer(np.arange(geom.n_v), self.cos_v))
        self._dense = None

    def __len__(self) -> int:
        return self.m_h * self.m_v

    @property
    def n_elements(self) -> int:
        return self.geom.n_elements

    @cached_property
    def cosines(self) -> tuple[np.ndarray, np.ndarray]:
        u_v, u_h = np.meshgrid(self.cos_v, self.cos_h, indexing="ij")
        return u_h.ravel(), u_v.ravel()

    @property
    def directions(self) -> list[tuple[float, float]]:
        u_h, u_v = self.cosines
        radial = 1.0 - u_h**2 - u_v**2
        with np.errstate(invalid="ignore"):
            u_x = np.sqrt(radial)
            az = np.where(radial >= 0, np.arctan2(u_h, u_x), np.nan)
            ze = np.where(radial >= 0, np.arccos(np.clip(u_v, -1, 1)), np.nan)
        return list(zip(az.tolist(), ze.tolist()))

    @property
    def beams(self) -> np.ndarray:
        if self._dense is None:
            self._dense = np.stack([self.beam(m) for m in range(len(self))], axis=1)
        return self._dense

    def beam(self, m: int) -> np.ndarray:
        i_h, i_v = m % self.m_h, m // self.m_h
        return np.kron(self._fv[:, i_v], self._fh[:, i_h])

    def correlate(self, x: np.ndarray) -> np.ndarray:
        grid = np.asarray(x).reshape(self.geom.n_v, self.geom.n_h)
        return (self._fv.T @ grid @ self._fh).ravel()


def beamsteering_codebook(geom: UpaGeometry, osf_az: int = 1, osf_ze: int = 1) -> BeamsteeringCodebook:
    return BeamsteeringCodebook(geom, osf_az, osf_ze)


def export_codebook_csv(codebook: Codebook, path) -> None:
    """Write one beam per row as element phases in radians."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["beam"] + [f"phase_{n}" for n in range(codebook.n_elements)])
        for m in range(len(codebook)):
            writer.writerow([m] + [repr(float(p)) for p in np.angle(codebook.beam(m))])
