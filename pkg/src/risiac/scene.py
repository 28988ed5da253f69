"""Synthetic indoor scene and single-bounce path synthesis.

The scene is a set of planar quadrilateral facets plus an optional user
body (an axis-aligned box). It stands in for a full ray tracer: sensing
returns are the single backscatter path along each RIS beam direction
(optionally with one retro-reflected double-bounce ghost per configured
facet pair), and communication channels are the line-of-sight path plus
first-order specular reflections found with the image-source method.

Coordinates are world meters. Angles are always expressed in the RIS
local frame: boresight is local +x, the aperture spans local y (horizontal)
and z (vertical), and a local direction is
``(sin ze cos az, sin ze sin az, cos ze)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path as FsPath
from typing import Optional, Sequence, Union

import jsonschema
import numpy as np

from risiac.constants import DEFAULT_CARRIER, SPEED_OF_LIGHT

USER = -2  # target id of the user body in Hit / cast results
NO_HIT = -1

_EPS_T = 1e-7  # m; minimum ray parameter counted as "in front of" the origin
_COPLANAR_TOL = 1e-9  # m


def direction_from_angles(azimuth, zenith):
    """Unit direction(s) in the RIS local frame for the given angles."""
    azimuth = np.asarray(azimuth, dtype=float)
    zenith = np.asarray(zenith, dtype=float)
    sin_ze = np.sin(zenith)
    return np.stack(
        [sin_ze * np.cos(azimuth), sin_ze * np.sin(azimuth), np.cos(zenith)], axis=-1
    )


def angles_from_direction(vec):
    """Inverse of :func:`direction_from_angles`; accepts unnormalised input."""
    vec = np.asarray(vec, dtype=float)
    vec = vec / np.linalg.norm(vec, axis=-1, keepdims=True)
    az = np.arctan2(vec[..., 1], vec[..., 0])
    ze = np.arccos(np.clip(vec[..., 2], -1.0, 1.0))
    return az, ze


def frame_from_boresight(boresight, up=(0.0, 0.0, 1.0)) -> np.ndarray:
    """Right-handed RIS frame (rows: boresight, horizontal, vertical).

    ``up`` is projected onto the plane orthogonal to ``boresight`` to form
    the vertical axis.
    """
    x = np.asarray(boresight, dtype=float)
    x = x / np.linalg.norm(x)
    up = np.asarray(up, dtype=float)
    z = up - np.dot(up, x) * x
    z = z / np.linalg.norm(z)
    y = np.cross(z, x)
    return np.stack([x, y, z])


def _vec3(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite components")
    return arr


@dataclass(frozen=True, eq=False)
class Facet:
    """Planar convex quadrilateral with a scalar power reflectivity."""

    vertices: np.ndarray
    reflectivity: float

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float)
        if verts.shape != (4, 3):
            raise ValueError(f"facet needs 4x3 vertices, got {verts.shape}")
        if not np.all(np.isfinite(verts)):
            raise ValueError("facet vertices must be finite")
        if not 0.0 <= self.reflectivity <= 1.0:
            raise ValueError(f"reflectivity {self.reflectivity} outside [0, 1]")
        object.__setattr__(self, "vertices", verts)
        normal = np.cross(verts[2] - verts[0], verts[3] - verts[1])
        norm = np.linalg.norm(normal)
        if norm == 0.0:
            raise ValueError("degenerate facet")
        normal = normal / norm
        offsets = (verts - verts[0]) @ normal
        if np.max(np.abs(offsets)) > _COPLANAR_TOL:
            raise ValueError("facet vertices are not coplanar")
        edges = np.roll(verts, -1, axis=0) - verts
        turn = np.cross(edges, np.roll(edges, -1, axis=0)) @ normal
        if np.any(turn <= 0.0):
            raise ValueError("facet must be a convex quad with consistent winding")
        object.__setattr__(self, "normal", normal)

    def to_dict(self) -> dict:
        return {"vertices": self.vertices.tolist(), "reflectivity": self.reflectivity}


@dataclass(frozen=True, eq=False)
class UserModel:
    """Box-shaped user body standing on ``footprint_center``.

    ``width`` spans world x, ``depth`` spans world y and ``height`` spans z
    upward from the footprint. The UE antenna sits at
    ``footprint_center + antenna_offset``.
    """

    footprint_center: np.ndarray
    height: float = 1.8
    width: float = 0.5
    depth: float = 0.3
    body_reflectivity: float = 0.5
    antenna_offset: np.ndarray = field(default_factory=lambda: np.array([0.0, -0.15, 1.2]))

    def __post_init__(self):
        object.__setattr__(self, "footprint_center", _vec3(self.footprint_center, "footprint_center"))
        object.__setattr__(self, "antenna_offset", _vec3(self.antenna_offset, "antenna_offset"))
        if self.height <= 0 or self.width <= 0 or self.depth <= 0:
            raise ValueError("user box dimensions must be positive")
        if not 0.0 <= self.body_reflectivity <= 1.0:
            raise ValueError("body_reflectivity outside [0, 1]")
        lo, hi = self.bounds
        pos = self.antenna_position
        if np.any(pos < lo - 1e-9) or np.any(pos > hi + 1e-9):
            raise ValueError("antenna position must lie inside or on the body box")

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        half = np.array([self.width / 2, self.depth / 2, 0.0])
        lo = self.footprint_center - half
        hi = self.footprint_center + half + np.array([0.0, 0.0, self.height])
        return lo, hi

    @property
    def antenna_position(self) -> np.ndarray:
        return self.footprint_center + self.antenna_offset

    def to_dict(self) -> dict:
        return {
            "footprint_center": self.footprint_center.tolist(),
            "height": self.height,
            "width": self.width,
            "depth": self.depth,
            "body_reflectivity": self.body_reflectivity,
            "antenna_offset": self.antenna_offset.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "UserModel":
        return cls(**data)


@dataclass(frozen=True)
class Path:
    """One propagation path.

    ``azimuth``/``zenith`` are the angles of the path at the RIS (local
    frame). ``kind`` is one of ``"backscatter"``, ``"clutter"``, ``"los"``
    or ``"reflection"``.
    """

    total_distance: float
    gain: complex
    azimuth: float
    zenith: float
    kind: str = "backscatter"


PathSet = list  # list[Path]


@dataclass(frozen=True)
class Hit:
    distance: float
    point: np.ndarray
    reflectivity: float
    target: int  # facet index, or USER
    normal: np.ndarray


def path_phase(total_distance: float, wavelength: float) -> complex:
    """exp(-j 2 pi R / lambda) with the cycle count removed before exponentiating."""
    frac = np.mod(total_distance / wavelength, 1.0)
    return complex(np.exp(-2j * np.pi * frac))


@dataclass(frozen=True, eq=False)
class Scene:
    facets: tuple
    ap_position: np.ndarray
    ris_center: np.ndarray
    ris_orientation: np.ndarray
    feed_position: np.ndarray
    user: Optional[UserModel] = None
    max_depth: float = 15.0
    wavelength: float = SPEED_OF_LIGHT / DEFAULT_CARRIER
    reference_amplitude: float = 1.0
    # (facet index, facet index | "user") pairs producing retro double-bounce ghosts
    clutter_pairs: tuple = ()
    clutter_ratio: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "facets", tuple(self.facets))
        for name in ("ap_position", "ris_center", "feed_position"):
            object.__setattr__(self, name, _vec3(getattr(self, name), name))
        frame = np.asarray(self.ris_orientation, dtype=float)
        if frame.shape != (3, 3) or not np.allclose(frame @ frame.T, np.eye(3), atol=1e-9):
            raise ValueError("ris_orientation must be a 3x3 orthonormal frame")
        if np.linalg.det(frame) < 0:
            raise ValueError("ris_orientation must be right-handed")
        object.__setattr__(self, "ris_orientation", frame)
        if np.linalg.norm(self.feed_position - self.ris_center) > 1.0:
            raise ValueError("feed_position must be within 1 m of ris_center")
        if self.max_depth <= 0:
            raise ValueError("max_depth must be positive")
        pairs = []
        for first, second in self.clutter_pairs:
            if not 0 <= int(first) < len(self.facets):
                raise ValueError(f"clutter pair references unknown facet {first}")
            if second != "user" and not 0 <= int(second) < len(self.facets):
                raise ValueError(f"clutter pair references unknown facet {second}")
            pairs.append((int(first), "user" if second == "user" else int(second)))
        object.__setattr__(self, "clutter_pairs", tuple(pairs))

    @cached_property
    def _facet_arrays(self):
        if not self.facets:
            return np.zeros((0, 4, 3)), np.zeros((0, 3)), np.zeros(0), np.zeros((0, 4, 3))
        verts = np.stack([f.vertices for f in self.facets])
        normals = np.stack([f.normal for f in self.facets])
        refl = np.array([f.reflectivity for f in self.facets])
        # cross(edge, normal) points out of the quad across each edge
        outward = np.cross(np.roll(verts, -1, axis=1) - verts, normals[:, None, :])
        return verts, normals, refl, outward

    @property
    def feed_distance(self) -> float:
        return float(np.linalg.norm(self.feed_position - self.ris_center))

    @property
    def feed_local(self) -> np.ndarray:
        """Feed position in the RIS frame, relative to the array centre."""
        return self.to_local(self.feed_position - self.ris_center)

    def to_local(self, world_vec) -> np.ndarray:
        return np.asarray(world_vec, dtype=float) @ self.ris_orientation.T

    def to_world(self, local_vec) -> np.ndarray:
        return np.asarray(local_vec, dtype=float) @ self.ris_orientation

    def angles_to(self, point) -> tuple[float, float]:
        """Local (azimuth, zenith) of ``point`` seen from the RIS centre."""
        az, ze = angles_from_direction(self.to_local(np.asarray(point) - self.ris_center))
        return float(az), float(ze)

    @property
    def ap_angles(self) -> tuple[float, float]:
        return self.angles_to(self.ap_position)

    def without_user(self) -> "Scene":
        return replace(self, user=None)

    def with_user(self, user: Optional[UserModel]) -> "Scene":
        return replace(self, user=user)

    def to_dict(self) -> dict:
        out = {
            "facets": [f.to_dict() for f in self.facets],
            "ap": self.ap_position.tolist(),
            "ris_center": self.ris_center.tolist(),
            "ris_orientation": self.ris_orientation.tolist(),
            "feed": self.feed_position.tolist(),
            "max_depth": self.max_depth,
            "frequency": SPEED_OF_LIGHT / self.wavelength,
            "reference_amplitude": self.reference_amplitude,
            "clutter_pairs": [list(p) for p in self.clutter_pairs],
            "clutter_ratio": self.clutter_ratio,
        }
        if self.user is not None:
            out["user"] = self.user.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Scene":
        jsonschema.validate(data, SCENE_SCHEMA)
        user = data.get("user")
        return cls(
            facets=[Facet(np.array(f["vertices"]), f["reflectivity"]) for f in data["facets"]],
            ap_position=data["ap"],
            ris_center=data["ris_center"],
            ris_orientation=data["ris_orientation"],
            feed_position=data["feed"],
            user=UserModel.from_dict(user) if user is not None else None,
            max_depth=data["max_depth"],
            wavelength=SPEED_OF_LIGHT / data.get("frequency", DEFAULT_CARRIER),
            reference_amplitude=data.get("reference_amplitude", 1.0),
            clutter_pairs=[tuple(p) for p in data.get("clutter_pairs", [])],
            clutter_ratio=data.get("clutter_ratio", 10.0),
        )


_VEC3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}

SCENE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "Scene",
    "type": "object",
    "required": ["facets", "ap", "ris_center", "ris_orientation", "feed", "max_depth"],
    "additionalProperties": False,
    "properties": {
        "facets": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["vertices", "reflectivity"],
                "additionalProperties": False,
                "properties": {
                    "vertices": {"type": "array", "items": _VEC3, "minItems": 4, "maxItems": 4},
                    "reflectivity": {"type": "number", "minimum": 0, "maximum": 1},
                },
            },
        },
        "ap": _VEC3,
        "ris_center": _VEC3,
        "ris_orientation": {"type": "array", "items": _VEC3, "minItems": 3, "maxItems": 3},
        "feed": _VEC3,
        "max_depth": {"type": "number", "exclusiveMinimum": 0},
        "frequency": {"type": "number", "exclusiveMinimum": 0},
        "reference_amplitude": {"type": "number", "exclusiveMinimum": 0},
        "clutter_pairs": {
            "type": "array",
            "items": {
                "type": "array",
                "minItems": 2,
                "maxItems": 2,
                "prefixItems": [
                    {"type": "integer", "minimum": 0},
                    {"anyOf": [{"type": "integer", "minimum": 0}, {"const": "user"}]},
                ],
            },
        },
        "clutter_ratio": {"type": "number", "minimum": 0},
        "user": {
            "type": ["object", "null"],
            "required": ["footprint_center"],
            "additionalProperties": False,
            "properties": {
                "footprint_center": _VEC3,
                "height": {"type": "number", "exclusiveMinimum": 0},
                "width": {"type": "number", "exclusiveMinimum": 0},
                "depth": {"type": "number", "exclusiveMinimum": 0},
                "body_reflectivity": {"type": "number", "minimum": 0, "maximum": 1},
                "antenna_offset": _VEC3,
            },
        },
    },
}


def load_scene(path: Union[str, FsPath]) -> Scene:
    path = FsPath(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise FileNotFoundError(f"scene file not found: {path}") from None
    return Scene.from_dict(data)


def save_scene(scene: Scene, path: Union[str, FsPath]) -> None:
    FsPath(path).write_text(json.dumps(scene.to_dict(), indent=2) + "\n")


# ---------------------------------------------------------------------------
# ray casting


def _cast_facets(scene: Scene, origins: np.ndarray, dirs: np.ndarray, skip=None):
    """Nearest facet hit for each ray. Returns (t, index) with t=inf on miss."""
    verts, normals, _, outward = scene._facet_arrays
    n_rays = dirs.shape[0]
    if verts.shape[0] == 0:
        return np.full(n_rays, np.inf), np.full(n_rays, NO_HIT)
    origins = np.broadcast_to(origins, dirs.shape)
    denom = dirs @ normals.T  # (K, F)
    num = np.einsum("fj,fj->f", verts[:, 0, :], normals)[None, :] - origins @ normals.T
    with np.errstate(divide="ignore", invalid="ignore"):
        t = num / denom
    valid = (np.abs(denom) > 1e-12) & (t > _EPS_T)
    points = origins[:, None, :] + np.where(valid, t, 0.0)[..., None] * dirs[:, None, :]  # (K, F, 3)
    # inside means non-positive offset along every outward edge normal
    side = np.einsum("fij,kfj->kfi", outward, points) - np.einsum("fij,fij->fi", outward, verts)[None]
    inside = np.all(side <= 1e-9, axis=-1)
    valid &= inside
    if skip is not None:
        valid[:, skip] = False
    t = np.where(valid, t, np.inf)
    idx = np.argmin(t, axis=1)
    t_min = t[np.arange(n_rays), idx]
    idx = np.where(np.isfinite(t_min), idx, NO_HIT)
    return t_min, idx


def _cast_box(lo: np.ndarray, hi: np.ndarray, origins: np.ndarray, dirs: np.ndarray):
    """Slab-method ray/box intersection. Returns (t, face_axis, face_sign)."""
    origins = np.broadcast_to(origins, dirs.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / dirs
        t1 = (lo - origins) * inv
        t2 = (hi - origins) * inv
    # rays parallel to a slab: inside -> unbounded, outside -> miss
    parallel = dirs == 0.0
    inside_slab = (origins >= lo) & (origins <= hi)
    t1 = np.where(parallel, np.where(inside_slab, -np.inf, np.inf), t1)
    t2 = np.where(parallel, np.where(inside_slab, np.inf, -np.inf), t2)
    t_lo = np.minimum(t1, t2)
    t_hi = np.maximum(t1, t2)
    t_near = np.max(t_lo, axis=1)
    t_far = np.min(t_hi, axis=1)
    hit = (t_far >= t_near) & (t_far > _EPS_T)
    entering = t_near > _EPS_T
    t = np.where(hit, np.where(entering, t_near, t_far), np.inf)
    axis = np.where(entering, np.argmax(t_lo, axis=1), np.argmin(t_hi, axis=1))
    d_axis = dirs[np.arange(dirs.shape[0]), axis]
    sign = np.where(entering, -np.sign(d_axis), np.sign(d_axis))
    return t, axis, sign


def cast_rays(scene: Scene, origin, directions, include_user: bool = True, skip_facet=None):
    """Vectorised nearest-hit query.

    ``origin`` is one point or one point per ray.

    Returns ``(distance, target)`` arrays; misses (or hits beyond
    ``max_depth``) have distance ``inf`` and target ``NO_HIT``.
    """
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    origin = np.asarray(origin, dtype=float)
    t, target = _cast_facets(scene, origin, dirs, skip=skip_facet)
    if include_user and scene.user is not None:
        lo, hi = scene.user.bounds
        t_box, _, _ = _cast_box(lo, hi, origin, dirs)
        closer = t_box < t
        t = np.where(closer, t_box, t)
        target = np.where(closer, USER, target)
    beyond = t > scene.max_depth
    t = np.where(beyond, np.inf, t)
    target = np.where(beyond, NO_HIT, target)
    return t, target


def ray_cast(scene: Scene, origin, direction, include_user: bool = True) -> Optional[Hit]:
    """Nearest intersection of a ray with the scene, or ``None``.

    ``direction`` must be a unit vector in world coordinates.
    """
    direction = _vec3(direction, "direction")
    if abs(np.linalg.norm(direction) - 1.0) > 1e-9:
        raise ValueError("direction must be unit-norm")
    origin = _vec3(origin, "origin")
    t, target = cast_rays(scene, origin, direction[None, :], include_user=include_user)
    if target[0] == NO_HIT:
        return None
    dist = float(t[0])
    point = origin + dist * direction
    if target[0] == USER:
        lo, hi = scene.user.bounds
        _, axis, sign = _cast_box(lo, hi, origin, direction[None, :])
        normal = np.zeros(3)
        normal[axis[0]] = sign[0]
        refl = scene.user.body_reflectivity
    else:
        facet = scene.facets[int(target[0])]
        normal = facet.normal
        refl = facet.reflectivity
    return Hit(distance=dist, point=point, reflectivity=refl, target=int(target[0]), normal=normal)


# ---------------------------------------------------------------------------
# sensing paths


def backscatter_paths(scene: Scene, direction: tuple[float, float]) -> PathSet:
    """Backscatter path(s) seen by a sensing beam pointed at ``direction``.

    ``direction`` is ``(azimuth, zenith)`` in the RIS frame. The direct
    path runs feed -> RIS -> target -> RIS -> feed with amplitude
    ``sqrt(reflectivity) * A_ref / (d_feed * d_hit)**2``. If the hit facet
    is the first member of a configured clutter pair and its specular
    reflection lands on the second member, a retro-reflected ghost
    (feed -> RIS -> facet -> second target -> facet -> RIS -> feed) is
    appended with ``clutter_ratio`` times the direct amplitude.
    """
    az, ze = direction
    return backscatter_paths_batch(scene, [az], [ze])[0]


def backscatter_paths_batch(scene: Scene, azimuth, zenith) -> list[PathSet]:
    """:func:`backscatter_paths` for many directions at once."""
    azimuth = np.atleast_1d(np.asarray(azimuth, dtype=float))
    zenith = np.atleast_1d(np.asarray(zenith, dtype=float))
    local = direction_from_angles(azimuth, zenith)
    if np.any(local[:, 0] <= 0.0):
        raise ValueError("sensing direction must lie in the RIS front half-space")
    rays = scene.to_world(local)
    dist, target = cast_rays(scene, scene.ris_center, rays)
    _, normals, facet_refl, _ = scene._facet_arrays
    refl = np.zeros(len(dist))
    on_facet = target >= 0
    refl[on_facet] = facet_refl[target[on_facet]]
    if scene.user is not None:
        refl[target == USER] = scene.user.body_reflectivity
    d_feed = scene.feed_distance
    out: list[PathSet] = [[] for _ in range(len(dist))]
    live = (target != NO_HIT) & (refl > 0.0)
    with np.errstate(divide="ignore"):
        amp = np.sqrt(refl) * scene.reference_amplitude / (d_feed * dist) ** 2
    total = 2.0 * (d_feed + dist)
    for i in np.nonzero(live)[0]:
        out[i].append(Path(float(total[i]), amp[i] * path_phase(total[i], scene.wavelength),
                           float(azimuth[i]), float(zenith[i]), "backscatter"))

    for first, second in scene.clutter_pairs:
        rows = np.nonzero(live & (target == first))[0]
        if rows.size == 0:
            continue
        normal = normals[first]
        inc = rays[rows]
        bounce = inc - 2.0 * (inc @ normal)[:, None] * normal[None, :]
        points = scene.ris_center + dist[rows, None] * inc
        expected = USER if second == "user" else second
        t2, target2 = cast_rays(scene, points, bounce, skip_facet=first)
        for row, leg in zip(rows[target2 == expected], t2[target2 == expected]):
            ghost_total = 2.0 * (d_feed + dist[row] + float(leg))
            ghost_amp = scene.clutter_ratio * amp[row]
            out[row].append(Path(ghost_total, ghost_amp * path_phase(ghost_total, scene.wavelength),
                                 float(azimuth[row]), float(zenith[row]), "clutter"))
    return out


# ---------------------------------------------------------------------------
# communication paths


def _segment_clear(scene: Scene, start, end, skip_facet=None) -> bool:
    vec = np.asarray(end) - np.asarray(start)
    length = np.linalg.norm(vec)
    t, _ = _cast_facets(scene, np.asarray(start, dtype=float), (vec / length)[None, :], skip=skip_facet)
    return bool(t[0] >= length - 1e-9)


def _inside_facet(scene: Scene, idx: int, point) -> bool:
    verts, _, _, outward = scene._facet_arrays
    side = np.einsum("ij,ij->i", outward[idx], point - verts[idx])
    return bool(np.all(side <= 1e-9))


def comm_paths(scene: Scene, endpoint: Sequence[float]) -> PathSet:
    """Paths between the RIS centre and ``endpoint`` (AP or UE antenna).

    Includes the LoS path when no facet blocks it and one specular
    reflection per facet (image-source construction) when the reflection
    point lies on the facet and both legs are clear. Only paths arriving
    from the RIS front half-space are kept. Amplitudes follow free-space
    spreading, ``sqrt(reflectivity) * lambda / (4 pi d)``. The user body
    does not occlude communication paths: the UE antenna sits on it.
    """
    endpoint = _vec3(endpoint, "endpoint")
    center = scene.ris_center
    lam = scene.wavelength
    paths: PathSet = []

    def add(kind, total, toward, refl):
        local = scene.to_local(toward - center)
        if local[0] <= 0.0:
            return
        az, ze = angles_from_direction(local)
        amp = np.sqrt(refl) * lam / (4.0 * np.pi * total)
        paths.append(Path(float(total), amp * path_phase(total, lam), float(az), float(ze), kind))

    if _segment_clear(scene, center, endpoint):
        add("los", np.linalg.norm(endpoint - center), endpoint, 1.0)

    for idx, facet in enumerate(scene.facets):
        if facet.reflectivity == 0.0:
            continue
        anchor = facet.vertices[0]
        s_ris = np.dot(center - anchor, facet.normal)
        s_end = np.dot(endpoint - anchor, facet.normal)
        if s_ris * s_end <= 0.0:
            continue
        image = endpoint - 2.0 * s_end * facet.normal
        frac = s_ris / (s_ris + s_end)
        point = center + frac * (image - center)
        if not _inside_facet(scene, idx, point):
            continue
        if not (_segment_clear(scene, center, point, skip_facet=idx)
                and _segment_clear(scene, point, endpoint, skip_facet=idx)):
            continue
        add("reflection", np.linalg.norm(image - center), point, facet.reflectivity)
    return paths
