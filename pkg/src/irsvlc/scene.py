"""Room, devices and the random elements of a trial: receiver pose and blockers.

The receiver moves on a horizontal plane at a fixed height with a uniformly
random floor position. Its facing direction tilts away from vertical by a
truncated-Gaussian polar angle with a uniform azimuth. Blockers are a Poisson
population of upright boxes with uniformly random floor centers and yaw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import OrientedBox, Vec3, is_unit, normalize, unit_normal_from_polar, vec3
from .irs import (MIRROR_HEIGHT, MIRROR_WIDTH, MetasurfaceArray, MetasurfacePatch,
                  MirrorArray, MirrorElement)

DEFAULT_ROOM_DIMS = (5.0, 5.0, 3.0)
DEFAULT_LAMBERTIAN_ORDER = 1.0  # 60 degree semi-angle source
DEFAULT_PD_AREA = 1e-4  # m^2
DEFAULT_FOV_DEG = 85.0
DEFAULT_UE_HEIGHT = 1.0  # m above the floor
DEFAULT_THETA_MEAN_DEG = 41.0
DEFAULT_THETA_STD_DEG = 9.0
BLOCKER_DIMS = (0.75, 0.2, 1.75)  # m, footprint x footprint x height
DEFAULT_WALL_REFLECTIVITY = 0.7


@dataclass(frozen=True)
class Room:
    """Rectangular room with one corner at the origin and the ceiling at z=height."""

    length: float  # extent along x
    width: float  # extent along y
    height: float  # extent along z

    def __post_init__(self) -> None:
        if min(self.length, self.width, self.height) <= 0:
            raise ValueError(f"room dimensions must be positive, got "
                             f"{(self.length, self.width, self.height)}")

    def walls(self):
        """The four vertical walls as (label, origin, u_dir, v_dir, u_len, v_len, inward_normal)."""
        ex, ey, ez = np.eye(3)
        return (
            ("x0", vec3(0, 0, 0), ey, ez, self.width, self.height, ex),
            ("xmax", vec3(self.length, 0, 0), ey, ez, self.width, self.height, -ex),
            ("y0", vec3(0, 0, 0), ex, ez, self.length, self.height, ey),
            ("ymax", vec3(0, self.width, 0), ex, ez, self.length, self.height, -ey),
        )


@dataclass(frozen=True)
class Luminaire:
    """Ceiling light source with a generalized-Lambertian beam."""

    position: Vec3
    normal: Vec3
    lambertian_order: float = DEFAULT_LAMBERTIAN_ORDER
    optical_power: float = 1.0  # watts; gains are normalized per transmitted watt

    def __post_init__(self) -> None:
        if self.lambertian_order <= 0:
            raise ValueError(f"Lambertian order must be positive, got {self.lambertian_order}")
        if self.optical_power <= 0:
            raise ValueError("optical power must be positive")
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "normal", normalize(np.asarray(self.normal, dtype=float)))


@dataclass(frozen=True)
class PhotoDetector:
    """Receiver aperture: position, facing direction, active area and FOV (radians)."""

    position: Vec3
    normal: Vec3
    area: float = DEFAULT_PD_AREA
    fov: float = math.radians(DEFAULT_FOV_DEG)

    def __post_init__(self) -> None:
        if self.area <= 0:
            raise ValueError(f"detector area must be positive, got {self.area}")
        if not 0.0 < self.fov <= math.pi / 2:
            raise ValueError(f"field of view {self.fov} outside (0, pi/2]")
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        n = np.asarray(self.normal, dtype=float)
        if not is_unit(n, tol=1e-6):
            n = normalize(n)
        object.__setattr__(self, "normal", n)


@dataclass(frozen=True)
class OrientationModel:
    """Polar tilt ~ Gaussian(mean, std) truncated to [0, 90] degrees; uniform azimuth."""

    theta_mean_deg: float = DEFAULT_THETA_MEAN_DEG
    theta_std_deg: float = DEFAULT_THETA_STD_DEG

    def __post_init__(self) -> None:
        if not 0.0 <= self.theta_mean_deg <= 90.0:
            raise ValueError(f"mean tilt {self.theta_mean_deg} outside [0, 90] degrees")
        if self.theta_std_deg <= 0:
            raise ValueError(f"tilt spread must be positive, got {self.theta_std_deg}")


@dataclass(frozen=True)
class BlockerModel:
    """Poisson field of upright box blockers standing on the floor."""

    density: float  # expected blockers per square meter of floor
    dims: tuple[float, float, float] = BLOCKER_DIMS

    def __post_init__(self) -> None:
        if self.density < 0:
            raise ValueError(f"blocker density must be non-negative, got {self.density}")
        if min(self.dims) <= 0:
            raise ValueError(f"blocker dimensions must be positive, got {self.dims}")


@dataclass(frozen=True)
class Scene:
    """Immutable experiment geometry; safe to share across worker processes."""

    room: Room
    aps: tuple[Luminaire, ...]
    mirror_arrays: tuple[MirrorArray, ...]
    metasurface_arrays: tuple[MetasurfaceArray, ...]
    blocker_model: BlockerModel
    orientation_model: OrientationModel
    ue_height: float = DEFAULT_UE_HEIGHT
    wall_reflectivity: float = DEFAULT_WALL_REFLECTIVITY
    pd_area: float = DEFAULT_PD_AREA
    pd_fov: float = math.radians(DEFAULT_FOV_DEG)

    def __post_init__(self) -> None:
        if not self.aps:
            raise ValueError("scene needs at least one luminaire")
        if not 0.0 < self.ue_height < self.room.height:
            raise ValueError(f"receiver height {self.ue_height} outside the room")
        if not 0.0 <= self.wall_reflectivity <= 1.0:
            raise ValueError(f"wall reflectivity {self.wall_reflectivity} outside [0, 1]")
        if self.pd_area <= 0:
            raise ValueError(f"detector area must be positive, got {self.pd_area}")
        if not 0.0 < self.pd_fov <= math.pi / 2:
            raise ValueError(f"field of view {self.pd_fov} outside (0, pi/2]")


def _check_array_fit(room: Room, n_per_side: int, cell_w: float, cell_h: float) -> None:
    if n_per_side < 1:
        raise ValueError(f"array side count must be >= 1, got {n_per_side}")
    # exact fits (e.g. 50 * 0.06 == 3.0) must pass despite float round-off
    tol = 1e-9
    horiz = n_per_side * cell_w
    vert = n_per_side * cell_h
    if vert > room.height + tol or horiz > min(room.length, room.width) + tol:
        raise ValueError(
            f"a {n_per_side}x{n_per_side} array of {cell_w} x {cell_h} m cells "
            f"({horiz:.3f} x {vert:.3f} m) does not fit on a wall of this room")


def _grid_centers(origin: Vec3, u_dir: Vec3, v_dir: Vec3, u_len: float, v_len: float,
                  n: int, cell_w: float, cell_h: float):
    """Row-major centers of an n x n grid centered on the wall midpoint."""
    u_mid, v_mid = u_len / 2.0, v_len / 2.0
    half = (n - 1) / 2.0
    for i in range(n):  # rows sweep the vertical axis bottom to top
        v_off = v_mid + (i - half) * cell_h
        for j in range(n):
            u_off = u_mid + (j - half) * cell_w
            yield origin + u_off * u_dir + v_off * v_dir


def build_mirror_arrays(room: Room, n_per_side: int,
                        reflectivity: float = 0.95) -> tuple[MirrorArray, ...]:
    """One n x n mirror array centered on each of the four walls."""
    _check_array_fit(room, n_per_side, MIRROR_WIDTH, MIRROR_HEIGHT)
    arrays = []
    for label, origin, u_dir, v_dir, u_len, v_len, normal in room.walls():
        elems = [MirrorElement(c, normal, reflectivity=reflectivity)
                 for c in _grid_centers(origin, u_dir, v_dir, u_len, v_len,
                                        n_per_side, MIRROR_WIDTH, MIRROR_HEIGHT)]
        arrays.append(MirrorArray(label, normal, n_per_side, elems))
    return tuple(arrays)


def build_metasurface_arrays(room: Room, n_per_side: int,
                             efficiency: float = 0.8) -> tuple[MetasurfaceArray, ...]:
    """One n x n metasurface array centered on each of the four walls."""
    _check_array_fit(room, n_per_side, MIRROR_WIDTH, MIRROR_HEIGHT)
    area = MIRROR_WIDTH * MIRROR_HEIGHT
    arrays = []
    for label, origin, u_dir, v_dir, u_len, v_len, normal in room.walls():
        patches = [MetasurfacePatch(c, normal, area, efficiency)
                   for c in _grid_centers(origin, u_dir, v_dir, u_len, v_len,
                                          n_per_side, MIRROR_WIDTH, MIRROR_HEIGHT)]
        arrays.append(MetasurfaceArray(label, normal, n_per_side, patches))
    return tuple(arrays)


def default_scene(n_per_side: int = 50, *, irs: str = "mirror",
                  blocker_density: float = 0.0,
                  room_dims: tuple[float, float, float] = DEFAULT_ROOM_DIMS,
                  lambertian_order: float = DEFAULT_LAMBERTIAN_ORDER,
                  mirror_reflectivity: float = 0.95,
                  msa_efficiency: float = 0.8,
                  wall_reflectivity: float = DEFAULT_WALL_REFLECTIVITY,
                  ue_height: float = DEFAULT_UE_HEIGHT,
                  pd_area: float = DEFAULT_PD_AREA,
                  fov_deg: float = DEFAULT_FOV_DEG,
                  orientation: OrientationModel | None = None) -> Scene:
    """Reference scene: one centered ceiling source, four wall-centered arrays."""
    room = Room(*room_dims)
    ap = Luminaire(vec3(room.length / 2, room.width / 2, room.height),
                   vec3(0, 0, -1), lambertian_order)
    mirror_arrays: tuple[MirrorArray, ...] = ()
    msa_arrays: tuple[MetasurfaceArray, ...] = ()
    if irs == "mirror":
        mirror_arrays = build_mirror_arrays(room, n_per_side, mirror_reflectivity)
    elif irs == "metasurface":
        msa_arrays = build_metasurface_arrays(room, n_per_side, msa_efficiency)
    elif irs != "none":
        raise ValueError(f"unknown reflector type {irs!r}; expected mirror, metasurface or none")
    return Scene(
        room=room,
        aps=(ap,),
        mirror_arrays=mirror_arrays,
        metasurface_arrays=msa_arrays,
        blocker_model=BlockerModel(blocker_density),
        orientation_model=orientation or OrientationModel(),
        ue_height=ue_height,
        wall_reflectivity=wall_reflectivity,
        pd_area=pd_area,
        pd_fov=math.radians(fov_deg),
    )


_MAX_REJECTION_DRAWS = 10_000


def sample_tilt_deg(rng: np.random.Generator, model: OrientationModel) -> float:
    """One truncated-Gaussian polar angle in degrees, by rejection."""
    for _ in range(_MAX_REJECTION_DRAWS):
        theta = rng.normal(model.theta_mean_deg, model.theta_std_deg)
        if 0.0 <= theta <= 90.0:
            return float(theta)
    raise RuntimeError("tilt rejection sampler failed to land in [0, 90] degrees; "
                       "check the orientation model parameters")


def sample_ue(rng: np.random.Generator, scene: Scene) -> PhotoDetector:
    """Random receiver pose: uniform floor position, tilted facing direction.

    Draw order is fixed (x, y, tilt, azimuth) so a given substream always
    produces the same pose.
    """
    room = scene.room
    x = rng.uniform(0.0, room.length)
    y = rng.uniform(0.0, room.width)
    theta = math.radians(sample_tilt_deg(rng, scene.orientation_model))
    omega = rng.uniform(0.0, 2.0 * math.pi)
    normal = unit_normal_from_polar(theta, omega)
    return PhotoDetector(vec3(x, y, scene.ue_height), normal,
                         area=scene.pd_area, fov=scene.pd_fov)


def sample_blockers(rng: np.random.Generator, scene: Scene) -> tuple[OrientedBox, ...]:
    """Poisson-count upright blockers, centers uniform on the floor, yaw in [0, pi)."""
    model = scene.blocker_model
    room = scene.room
    lam = model.density * room.length * room.width
    if lam == 0.0:
        return ()
    count = int(rng.poisson(lam))
    if count == 0:
        return ()
    xs = rng.uniform(0.0, room.length, count)
    ys = rng.uniform(0.0, room.width, count)
    yaws = rng.uniform(0.0, math.pi, count)
    dx, dy, dz = model.dims
    half = (dx / 2.0, dy / 2.0, dz / 2.0)
    return tuple(
        OrientedBox(vec3(xs[k], ys[k], dz / 2.0), half, float(yaws[k]))
        for k in range(count)
    )
