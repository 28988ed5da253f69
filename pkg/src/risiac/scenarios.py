"""Built-in scenes: the desk-scale L-shaped room and a single-wall test rig.

Desk room layout (top view, meters, z up, floor at 0, ceiling at 3)::

    y=10 +-------+
         |  room |          NLoS user rectangle: x in [7.3, 8.7],
         |       |          y in [5.5, 9.0] (2 x 4 equally spaced spots)
    y=3  +-------+---+
    corridor      AP |
    y=0  +-----------+ RIS at (9.8, 0.2, 1.5), facing the room
         x=0    x=6  x=10

The AP sits at the far end of the corridor; the inner corner at (6, 3)
blocks every straight line from the AP into the user rectangle.
"""

from __future__ import annotations

import numpy as np

from risiac.scene import Facet, Scene, UserModel, frame_from_boresight

WALL_REFLECTIVITY = 0.15  # concrete, normal incidence, ITU-R P.2040 at 60 GHz
FLOOR_REFLECTIVITY = 0.10  # floorboard
CEILING_REFLECTIVITY = 0.01  # ceiling board
ROOM_HEIGHT = 3.0

RIS_CENTER = (9.8, 0.2, 1.5)
RIS_BEARING_DEG = 106.0
FEED_DISTANCE = 0.2
AP_POSITION = (1.0, 1.5, 2.2)

NLOS_X = (7.3, 8.7)
NLOS_Y = (5.5, 9.0)

# jacket pocket, front pants pocket, back pants pocket (person faces -y)
ANTENNA_OFFSETS = (
    (0.10, -0.15, 1.25),
    (-0.12, -0.15, 0.80),
    (0.12, 0.15, 0.80),
)


def _h_quad(x0, x1, y0, y1, z, refl):
    return Facet(np.array([[x0, y0, z], [x1, y0, z], [x1, y1, z], [x0, y1, z]]), refl)


def _wall_x(x, y0, y1, refl, height=ROOM_HEIGHT):
    return Facet(np.array([[x, y0, 0], [x, y1, 0], [x, y1, height], [x, y0, height]]), refl)


def _wall_y(y, x0, x1, refl, height=ROOM_HEIGHT):
    return Facet(np.array([[x0, y, 0], [x1, y, 0], [x1, y, height], [x0, y, height]]), refl)


def l_room_facets() -> list[Facet]:
    h = ROOM_HEIGHT
    return [
        _h_quad(0, 10, 0, 3, 0.0, FLOOR_REFLECTIVITY),  # 0 corridor floor
        _h_quad(6, 10, 3, 10, 0.0, FLOOR_REFLECTIVITY),  # 1 room floor
        _h_quad(0, 10, 0, 3, h, CEILING_REFLECTIVITY),  # 2 corridor ceiling
        _h_quad(6, 10, 3, 10, h, CEILING_REFLECTIVITY),  # 3 room ceiling
        _wall_y(0, 0, 10, WALL_REFLECTIVITY),  # 4 south
        _wall_x(10, 0, 10, WALL_REFLECTIVITY),  # 5 east
        _wall_y(10, 6, 10, WALL_REFLECTIVITY),  # 6 room north
        _wall_x(6, 3, 10, WALL_REFLECTIVITY),  # 7 room west
        _wall_y(3, 0, 6, WALL_REFLECTIVITY),  # 8 corridor north
        _wall_x(0, 0, 3, WALL_REFLECTIVITY),  # 9 corridor west end
    ]


def ris_frame(bearing_deg: float = RIS_BEARING_DEG) -> np.ndarray:
    b = np.deg2rad(bearing_deg)
    return frame_from_boresight((np.cos(b), np.sin(b), 0.0))


def desk_scene(clutter: bool = True, max_depth: float = 15.0) -> Scene:
    """User-free L-shaped room with the RIS at the outer corner."""
    frame = ris_frame()
    center = np.array(RIS_CENTER)
    return Scene(
        facets=l_room_facets(),
        ap_position=AP_POSITION,
        ris_center=center,
        ris_orientation=frame,
        feed_position=center + FEED_DISTANCE * frame[0],
        max_depth=max_depth,
        clutter_pairs=((0, "user"), (1, "user")) if clutter else (),
        clutter_ratio=10.0,
    )


def nlos_locations(n_x: int = 2, n_y: int = 4) -> list[tuple[float, float]]:
    """Equally spaced user footprint centres covering the NLoS rectangle."""
    xs = np.linspace(*NLOS_X, n_x)
    ys = np.linspace(*NLOS_Y, n_y)
    return [(float(x), float(y)) for y in ys for x in xs]


def place_user(location, antenna_offset, **box) -> UserModel:
    x, y = location
    return UserModel(footprint_center=(x, y, 0.0), antenna_offset=antenna_offset, **box)


def single_wall_scene(wall_x: float = 4.0, half_width: float = 3.0, reflectivity: float = 0.5,
                      feed_distance: float = FEED_DISTANCE, max_depth: float = 15.0) -> Scene:
    """One wall facing an RIS at the origin whose boresight is world +x."""
    s = half_width
    wall = Facet(np.array([[wall_x, -s, -s], [wall_x, s, -s], [wall_x, s, s], [wall_x, -s, s]]),
                 reflectivity)
    return Scene(
        facets=[wall],
        ap_position=(1.0, -1.0, 0.0),
        ris_center=(0.0, 0.0, 0.0),
        ris_orientation=np.eye(3),
        feed_position=(feed_distance, 0.0, 0.0),
        max_depth=max_depth,
    )
