"""3D primitives for the room geometry.

Conventions: right-handed frame, z up, floor at z = 0, one room corner at the
origin. Vectors are float64 numpy arrays of shape (3,).

Functions
---------
vec3                    -- checked constructor for a 3-vector
normalize               -- unit vector, rejects near-zero input
cos_between             -- clamped cosine of the angle between two vectors
unit_normal_from_polar  -- unit vector from polar/azimuth angles
reflect                 -- specular reflection of a direction at a plane
segment_intersects_box  -- open-segment vs. oriented-box interior test
segments_intersect_box  -- vectorized form over many segments
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

Vec3 = np.ndarray  # shape (3,), float64

_UNIT_TOL = 1e-9


def vec3(x: float, y: float, z: float) -> Vec3:
    v = np.array([x, y, z], dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"non-finite vector component in ({x}, {y}, {z})")
    return v


def norm(v: Vec3) -> float:
    return math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])


def normalize(v: Vec3) -> Vec3:
    n = norm(v)
    if n < 1e-12:
        raise ValueError("cannot normalize a (near-)zero vector")
    return v / n


def is_unit(v: Vec3, tol: float = _UNIT_TOL) -> bool:
    return abs(norm(v) - 1.0) <= tol


def cos_between(u: Vec3, v: Vec3) -> float:
    """Cosine of the angle between u and v, clamped to [-1, 1]."""
    d = float(np.dot(u, v)) / (norm(u) * norm(v))
    return min(1.0, max(-1.0, d))


def unit_normal_from_polar(theta: float, omega: float) -> Vec3:
    """Unit vector at polar angle theta from +z and azimuth omega from +x.

    theta must lie in [0, pi/2] (upper hemisphere), omega in [0, 2*pi).
    """
    if not 0.0 <= theta <= math.pi / 2:
        raise ValueError(f"polar angle {theta} outside [0, pi/2]")
    if not 0.0 <= omega < 2 * math.pi:
        raise ValueError(f"azimuth {omega} outside [0, 2*pi)")
    st = math.sin(theta)
    return np.array([st * math.cos(omega), st * math.sin(omega), math.cos(theta)])


def reflect(d: Vec3, n: Vec3) -> Vec3:
    """Specular reflection of incident direction d at a plane with unit normal n.

    d must point into the surface (d . n < 0); reflecting a direction that
    approaches from behind the plane is a caller bug, not a zero-gain case.
    """
    dn = float(np.dot(d, n))
    if dn >= 0.0:
        raise ValueError("back-face incidence: incident direction does not hit the front side")
    return d - 2.0 * dn * n


@dataclass(frozen=True)
class OrientedBox:
    """Axis-aligned box rotated by a yaw angle about the vertical axis.

    center is the box midpoint, half_extents the half side lengths along the
    box-local x/y/z axes, yaw the rotation of the local frame about +z.
    """

    center: Vec3
    half_extents: tuple[float, float, float]
    yaw: float
    _cos_yaw: float = field(init=False, repr=False)
    _sin_yaw: float = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if any(h <= 0 for h in self.half_extents):
            raise ValueError(f"half extents must be positive, got {self.half_extents}")
        if not 0.0 <= self.yaw < math.pi:
            raise ValueError(f"yaw {self.yaw} outside [0, pi)")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "_cos_yaw", math.cos(self.yaw))
        object.__setattr__(self, "_sin_yaw", math.sin(self.yaw))

    def to_local(self, p: Vec3) -> Vec3:
        """World point -> box-local coordinates (rotate by -yaw about center)."""
        d = p - self.center
        c, s = self._cos_yaw, self._sin_yaw
        return np.array([c * d[0] + s * d[1], -s * d[0] + c * d[1], d[2]])

    def contains_interior(self, p: Vec3) -> bool:
        q = self.to_local(p)
        hx, hy, hz = self.half_extents
        return abs(q[0]) < hx and abs(q[1]) < hy and abs(q[2]) < hz


@dataclass(frozen=True)
class Segment:
    a: Vec3
    b: Vec3

    def __post_init__(self) -> None:
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if np.array_equal(a, b):
            raise ValueError("degenerate segment: endpoints coincide")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


def segment_intersects_box(seg: Segment, box: OrientedBox) -> bool:
    """True iff the open segment passes through the interior of the box.

    Slab test in the box-local frame. Tangent contact (touching a face, edge
    or corner without entering) and endpoints lying exactly on the surface do
    not count as intersections.
    """
    a = box.to_local(seg.a)
    b = box.to_local(seg.b)
    d = b - a
    t_lo, t_hi = 0.0, 1.0  # open parameter interval inside the box
    for i in range(3):
        h = box.half_extents[i]
        if d[i] == 0.0:
            if abs(a[i]) >= h:  # parallel and never strictly inside this slab
                return False
            continue
        t1 = (-h - a[i]) / d[i]
        t2 = (h - a[i]) / d[i]
        if t1 > t2:
            t1, t2 = t2, t1
        if t1 > t_lo:
            t_lo = t1
        if t2 < t_hi:
            t_hi = t2
        if t_lo >= t_hi:
            return False
    return t_lo < t_hi


def segments_intersect_box(starts: np.ndarray, ends: np.ndarray, box: OrientedBox) -> np.ndarray:
    """Vectorized segment_intersects_box over (n, 3) start/end point arrays."""
    c, s = box._cos_yaw, box._sin_yaw
    hx, hy, hz = box.half_extents
    da = starts - box.center
    db = ends - box.center
    ax = c * da[:, 0] + s * da[:, 1]
    ay = -s * da[:, 0] + c * da[:, 1]
    az = da[:, 2]
    bx = c * db[:, 0] + s * db[:, 1]
    by = -s * db[:, 0] + c * db[:, 1]
    bz = db[:, 2]

    t_lo = np.zeros(len(starts))
    t_hi = np.ones(len(starts))
    alive = np.ones(len(starts), dtype=bool)
    for a_i, b_i, h in ((ax, bx, hx), (ay, by, hy), (az, bz, hz)):
        d_i = b_i - a_i
        par = d_i == 0.0
        # parallel segments survive only while strictly inside the slab
        alive &= ~(par & (np.abs(a_i) >= h))
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (-h - a_i) / d_i
            t2 = (h - a_i) / d_i
        swap = t1 > t2
        t1s = np.where(swap, t2, t1)
        t2s = np.where(swap, t1, t2)
        take = alive & ~par
        t_lo = np.where(take, np.maximum(t_lo, t1s), t_lo)
        t_hi = np.where(take, np.minimum(t_hi, t2s), t_hi)
        alive &= t_lo < t_hi
    return alive
