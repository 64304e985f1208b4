"""Optical channel gains: line-of-sight and diffuse wall reflections.

All gains are dimensionless ratios of received optical power at the detector
to transmitted optical power, for a generalized-Lambertian source of order m
and a flat photodetector with a field-of-view cutoff. Blockers are oriented
boxes; any sight line crossing a box interior contributes zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from .geometry import OrientedBox, Segment, Vec3, segment_intersects_box, segments_intersect_box

if TYPE_CHECKING:  # pragma: no cover
    from .scene import Luminaire, PhotoDetector, Room

DEFAULT_WALL_REFLECTIVITY = 0.7
DEFAULT_PATCH_SIZE = 0.25  # meters; target side length of wall patches


@dataclass(frozen=True)
class WallPatch:
    """Flat diffuse reflector patch on a wall, facing into the room."""

    center: Vec3
    normal: Vec3
    area: float
    reflectivity: float


class PatchSet(Sequence):
    """Sequence of WallPatch backed by stacked arrays for vectorized sums."""

    def __init__(self, centers: np.ndarray, normals: np.ndarray, areas: np.ndarray,
                 reflectivity: np.ndarray):
        self.centers = np.ascontiguousarray(centers, dtype=float)
        self.normals = np.ascontiguousarray(normals, dtype=float)
        self.areas = np.ascontiguousarray(areas, dtype=float)
        self.reflectivity = np.ascontiguousarray(reflectivity, dtype=float)

    def __len__(self) -> int:
        return len(self.areas)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        return WallPatch(self.centers[i], self.normals[i], float(self.areas[i]),
                         float(self.reflectivity[i]))

    @classmethod
    def from_patches(cls, patches: Iterable[WallPatch]) -> "PatchSet":
        ps = list(patches)
        return cls(np.array([p.center for p in ps], dtype=float).reshape(len(ps), 3),
                   np.array([p.normal for p in ps], dtype=float).reshape(len(ps), 3),
                   np.array([p.area for p in ps], dtype=float),
                   np.array([p.reflectivity for p in ps], dtype=float))


def shadowed(p: Vec3, q: Vec3, blockers: Sequence[OrientedBox]) -> bool:
    """True iff the open sight line p->q crosses any blocker's interior."""
    seg = Segment(np.asarray(p, dtype=float), np.asarray(q, dtype=float))
    for box in blockers:
        if segment_intersects_box(seg, box):
            return True
    return False


def shadowed_mask(starts: np.ndarray, ends: np.ndarray,
                  blockers: Sequence[OrientedBox]) -> np.ndarray:
    """Vectorized shadowed() over (n, 3) segment endpoint arrays."""
    n = len(starts)
    blocked = np.zeros(n, dtype=bool)
    for box in blockers:
        alive = ~blocked
        if not alive.any():
            break
        blocked[alive] = segments_intersect_box(starts[alive], ends[alive], box)
    return blocked


def los_gain(ap: "Luminaire", ue: "PhotoDetector",
             blockers: Sequence[OrientedBox] = ()) -> float:
    """Direct-path DC gain between a Lambertian source and the detector.

    Zero when the detector lies outside the source's forward hemisphere,
    when the source falls outside the detector field of view, or when the
    sight line is blocked.
    """
    delta = ue.position - ap.position
    d_sq = float(np.dot(delta, delta))
    if d_sq == 0.0:
        raise ValueError("source and detector positions coincide")
    d = math.sqrt(d_sq)
    cos_phi = float(np.dot(delta, ap.normal)) / d
    cos_psi = float(np.dot(-delta, ue.normal)) / d
    if cos_phi <= 0.0 or cos_psi <= 0.0:
        return 0.0
    if cos_psi < math.cos(ue.fov):
        return 0.0
    if shadowed(ap.position, ue.position, blockers):
        return 0.0
    m = ap.lambertian_order
    return (m + 1.0) * ue.area / (2.0 * math.pi * d_sq) * cos_phi ** m * cos_psi


def wall_patches(room: "Room", patch_target_size: float = DEFAULT_PATCH_SIZE,
                 reflectivity: float = DEFAULT_WALL_REFLECTIVITY) -> PatchSet:
    """Tile the four walls with near-square patches no larger than the target.

    Patch side counts are rounded up, so patches shrink to fit exactly and
    their areas sum to the total wall area.
    """
    if patch_target_size <= 0:
        raise ValueError(f"patch size must be positive, got {patch_target_size}")
    if not 0.0 <= reflectivity <= 1.0:
        raise ValueError(f"wall reflectivity {reflectivity} outside [0, 1]")
    centers, normals, areas = [], [], []
    for _label, origin, u_dir, v_dir, u_len, v_len, normal in room.walls():
        nu = max(1, math.ceil(u_len / patch_target_size))
        nv = max(1, math.ceil(v_len / patch_target_size))
        du, dv = u_len / nu, v_len / nv
        for i in range(nv):
            for j in range(nu):
                centers.append(origin + (j + 0.5) * du * u_dir + (i + 0.5) * dv * v_dir)
                normals.append(normal)
                areas.append(du * dv)
    n = len(areas)
    return PatchSet(np.array(centers), np.array(normals), np.array(areas),
                    np.full(n, float(reflectivity)))


def _as_patchset(patches) -> PatchSet:
    if isinstance(patches, PatchSet):
        return patches
    return PatchSet.from_patches(patches)


def _first_bounce_power(ap: "Luminaire", ps: PatchSet,
                        blockers: Sequence[OrientedBox]) -> np.ndarray:
    """Optical power collected by each patch per unit transmitted power."""
    w = ps.centers - ap.position
    d1_sq = np.einsum("ij,ij->i", w, w)
    d1 = np.sqrt(d1_sq)
    with np.errstate(divide="ignore", invalid="ignore"):
        cos_phi = (w @ ap.normal) / d1
        cos_in = -np.einsum("ij,ij->i", w, ps.normals) / d1
    m = ap.lambertian_order
    ok = (cos_phi > 0.0) & (cos_in > 0.0)
    power = np.where(
        ok,
        (m + 1.0) / (2.0 * math.pi * d1_sq) * np.power(np.maximum(cos_phi, 0.0), m) * cos_in * ps.areas,
        0.0,
    )
    idx = np.flatnonzero(power > 0.0)
    if blockers and idx.size:
        starts = np.broadcast_to(ap.position, (idx.size, 3))
        blocked = shadowed_mask(starts, ps.centers[idx], blockers)
        power[idx[blocked]] = 0.0
    return power


def _patch_to_ue(ps: PatchSet, ue: "PhotoDetector", power: np.ndarray,
                 blockers: Sequence[OrientedBox]) -> float:
    """Detector power from diffusely re-emitted patch powers; compensated sum."""
    u = ue.position - ps.centers
    d2_sq = np.einsum("ij,ij->i", u, u)
    d2 = np.sqrt(d2_sq)
    with np.errstate(divide="ignore", invalid="ignore"):
        cos_out = np.einsum("ij,ij->i", u, ps.normals) / d2
        cos_psi = -(u @ ue.normal) / d2
        # capture fraction of the re-emitted power; capped at 1 so a detector
        # almost touching a patch cannot receive more than the patch reflected
        capture = np.minimum(ue.area * cos_out * cos_psi / (math.pi * d2_sq), 1.0)
    ok = (cos_out > 0.0) & (cos_psi > 0.0) & (cos_psi >= math.cos(ue.fov)) & (power > 0.0)
    contrib = np.where(ok & np.isfinite(capture), ps.reflectivity * power * capture, 0.0)
    idx = np.flatnonzero(contrib > 0.0)
    if blockers and idx.size:
        ends = np.broadcast_to(ue.position, (idx.size, 3))
        blocked = shadowed_mask(ps.centers[idx], ends, blockers)
        contrib[idx[blocked]] = 0.0
    return math.fsum(contrib.tolist())


def _second_bounce_power(ps: PatchSet, power1: np.ndarray,
                         blockers: Sequence[OrientedBox]) -> np.ndarray:
    """Patch powers after one diffuse patch-to-patch transfer.

    O(P^2) pairs, each occlusion-tested against every blocker; intended for
    coarse patch grids or one-off evaluations, not the Monte Carlo hot path.
    """
    n = len(ps)
    out = np.zeros(n)
    sources = np.flatnonzero(power1 > 0.0)
    for j in sources:
        v = ps.centers - ps.centers[j]
        d_sq = np.einsum("ij,ij->i", v, v)
        with np.errstate(divide="ignore", invalid="ignore"):
            cos_out = np.einsum("ij,ij->i", v, np.broadcast_to(ps.normals[j], (n, 3))) / np.sqrt(d_sq)
            cos_in = -np.einsum("ij,ij->i", v, ps.normals) / np.sqrt(d_sq)
            frac = ps.areas * cos_in * cos_out / (math.pi * d_sq)
        ok = np.isfinite(frac) & (cos_out > 0.0) & (cos_in > 0.0)
        frac = np.where(ok, np.minimum(frac, 1.0), 0.0)
        idx = np.flatnonzero(frac > 0.0)
        if blockers and idx.size:
            starts = np.broadcast_to(ps.centers[j], (idx.size, 3))
            blocked = shadowed_mask(starts, ps.centers[idx], blockers)
            frac[idx[blocked]] = 0.0
        out += ps.reflectivity[j] * power1[j] * frac
    return out


def patch_incident_power(ap: "Luminaire", patches,
                         blockers: Sequence[OrientedBox] = (),
                         order: int = 1) -> np.ndarray:
    """Optical power landing on each wall patch per unit transmitted power.

    order=1 is direct source-to-patch illumination; order=2 adds one diffuse
    patch-to-patch transfer. The result depends only on the source and the
    walls, so it can be computed once and reused across receiver poses.
    """
    if order not in (1, 2):
        raise ValueError(f"reflection order must be 1 or 2, got {order}")
    ps = _as_patchset(patches)
    if len(ps) == 0:
        return np.zeros(0)
    power = _first_bounce_power(ap, ps, blockers)
    if order == 2:
        power = power + _second_bounce_power(ps, power, blockers)
    return power


def diffuse_capture(patches, ue: "PhotoDetector", power: np.ndarray,
                    blockers: Sequence[OrientedBox] = ()) -> float:
    """Detector gain from per-patch incident powers after one re-emission."""
    ps = _as_patchset(patches)
    if len(ps) == 0:
        return 0.0
    return _patch_to_ue(ps, ue, power, blockers)


def nlos_gain(ap: "Luminaire", ue: "PhotoDetector", patches,
              blockers: Sequence[OrientedBox] = (), order: int = 1) -> float:
    """Diffuse wall-bounce DC gain summed over all patches.

    order=1 models a single wall bounce; order=2 adds one patch-to-patch
    transfer before the detector leg.
    """
    ps = _as_patchset(patches)
    power = patch_incident_power(ap, ps, blockers, order=order)
    return diffuse_capture(ps, ue, power, blockers)
